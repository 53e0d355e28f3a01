use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{compute_population_params, PopulationFrame, PopulationParams};

const MAX_ATTEMPTS: u32 = 16;
const SLOPE_SEARCH_LIMIT: f64 = 40.0;
const SLOPE_SEARCH_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AuxiliaryShape {
    /// Gamma(shape, scale); `C_x = 1/sqrt(shape)`, skewness `2/sqrt(shape)`.
    SkewedPositive { shape: f64, scale: f64 },
    /// Normal(mean, sd).
    Symmetric { mean: f64, sd: f64 },
}

/// Recipe for a synthetic population. The attribute is drawn as
/// `phi = 1` with probability `logistic(intercept + slope * z)`, `z` being
/// the standardised auxiliary value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub population_size: usize,
    pub auxiliary: AuxiliaryShape,
    pub link_intercept: f64,
    pub link_slope: f64,
    /// When set, `link_slope` is ignored and searched so that the achieved
    /// point-biserial correlation is as close as possible to this value.
    #[serde(default)]
    pub target_rho: Option<f64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            population_size: 2000,
            auxiliary: AuxiliaryShape::SkewedPositive {
                shape: 5.0,
                scale: 2.0,
            },
            link_intercept: 0.0,
            link_slope: 2.0,
            target_rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPopulation {
    pub frame: PopulationFrame,
    pub params: PopulationParams,
    /// Number of draws needed to get a non-degenerate population.
    pub attempts: u32,
    pub link_slope: f64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.population_size < 10 {
            return Err(Error::InvalidParameter(format!(
                "synthetic population size {} < 10",
                self.population_size
            )));
        }
        let ok = match self.auxiliary {
            AuxiliaryShape::SkewedPositive { shape, scale } => shape > 0.0 && scale > 0.0,
            AuxiliaryShape::Symmetric { mean, sd } => mean.is_finite() && sd > 0.0,
        };
        if !ok {
            return Err(Error::InvalidParameter(
                "auxiliary distribution parameters out of range".into(),
            ));
        }
        if let Some(t) = self.target_rho {
            if !(t.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "target rho {t} outside (-1, 1)"
                )));
            }
        }
        if !(self.link_intercept.is_finite() && self.link_slope.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite link coefficients".into(),
            ));
        }
        Ok(())
    }

    fn draw_auxiliary(&self, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
        let n = self.population_size;
        let bad = |e: String| Error::InvalidParameter(e);
        Ok(match self.auxiliary {
            AuxiliaryShape::SkewedPositive { shape, scale } => {
                let d = Gamma::new(shape, scale).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            AuxiliaryShape::Symmetric { mean, sd } => {
                let d = Normal::new(mean, sd).map_err(|e| bad(e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
        })
    }
}

fn attributes(z: &[f64], u: &[f64], intercept: f64, slope: f64) -> Vec<u8> {
    z.iter()
        .zip(u)
        .map(|(&zi, &ui)| {
            let prob = 1.0 / (1.0 + (-(intercept + slope * zi)).exp());
            u8::from(ui < prob)
        })
        .collect()
}

fn build(x: &[f64], phi: Vec<u8>) -> Result<(PopulationFrame, PopulationParams)> {
    let frame = PopulationFrame::new(phi, x.to_vec())?;
    let params = compute_population_params(&frame)?;
    Ok((frame, params))
}

/// Deterministic in `(spec, seed)`.
pub fn generate_population(spec: &SyntheticSpec, seed: u64) -> Result<GeneratedPopulation> {
    spec.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let x = spec.draw_auxiliary(&mut rng)?;
        let u: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>()).collect();

        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            continue;
        }
        let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();

        let slope = match spec.target_rho {
            None => spec.link_slope,
            Some(target) => search_slope(&x, &z, &u, spec.link_intercept, target),
        };
        match build(&x, attributes(&z, &u, spec.link_intercept, slope)) {
            Ok((frame, params)) => {
                return Ok(GeneratedPopulation {
                    frame,
                    params,
                    attempts: attempt + 1,
                    link_slope: slope,
                })
            }
            Err(Error::DegenerateAttribute(_) | Error::DegenerateAuxiliary | Error::ZeroMean) => {
                continue
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateGeneration(MAX_ATTEMPTS))
}

/// Bisection on the slope; the achieved correlation is monotone in the slope
/// up to the discreteness of the shared uniforms, so the best point visited
/// is kept.
fn search_slope(x: &[f64], z: &[f64], u: &[f64], intercept: f64, target: f64) -> f64 {
    let rho_at = |slope: f64| {
        build(x, attributes(z, u, intercept, slope))
            .map(|(_, p)| p.rho_pb)
            .ok()
    };
    let (mut lo, mut hi) = if target >= 0.0 {
        (0.0, SLOPE_SEARCH_LIMIT)
    } else {
        (-SLOPE_SEARCH_LIMIT, 0.0)
    };
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..SLOPE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        let Some(rho) = rho_at(mid) else {
            // degenerate attribute; shrink towards zero slope
            if target >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            continue;
        };
        let gap = (rho - target).abs();
        if gap < best.0 {
            best = (gap, mid);
        }
        if rho < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.1
}
