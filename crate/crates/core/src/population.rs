//! Finite populations with a binary study attribute and a quantitative
//! auxiliary variable, plus the summary statistics every estimator consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complete finite population: one `(phi, x)` pair per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFrame {
    phi: Vec<u8>,
    x: Vec<f64>,
}

impl PopulationFrame {
    pub fn new(phi: Vec<u8>, x: Vec<f64>) -> Result<Self> {
        if phi.len() != x.len() {
            return Err(Error::InvalidFrame(format!(
                "{} indicators but {} auxiliary values",
                phi.len(),
                x.len()
            )));
        }
        if phi.len() < 2 {
            return Err(Error::InvalidFrame(format!(
                "population needs at least 2 units, got {}",
                phi.len()
            )));
        }
        if let Some(i) = phi.iter().position(|&v| v > 1) {
            return Err(Error::InvalidFrame(format!(
                "unit {i}: indicator {} is not 0 or 1",
                phi[i]
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFrame(format!("unit {i}: x is not finite")));
        }
        Ok(Self { phi, x })
    }

    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, f64)>,
    {
        let (phi, x) = records.into_iter().unzip();
        Self::new(phi, x)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[u8] {
        &self.phi
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn records(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        self.phi.iter().copied().zip(self.x.iter().copied())
    }

    /// Number of units possessing the attribute.
    pub fn attribute_count(&self) -> usize {
        self.phi.iter().map(|&v| v as usize).sum()
    }

    pub fn proportion(&self) -> f64 {
        self.attribute_count() as f64 / self.len() as f64
    }

    pub fn x_mean(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.len() as f64
    }
}

/// Population summary statistics.
///
/// `sx2` and `sp2` use divisor `N - 1`; the lambda ratios are built from
/// divisor-`N` central moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub population_size: usize,
    pub proportion: f64,
    pub xbar: f64,
    pub sx2: f64,
    pub sp2: f64,
    pub cp: f64,
    pub cx: f64,
    pub rho_pb: f64,
    pub lambda03: f64,
    pub lambda04: f64,
    pub lambda12: f64,
}

/// The subset of summary statistics published for a study when the raw
/// records are unavailable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStatistics {
    pub population_size: usize,
    pub proportion: f64,
    pub xbar: f64,
    pub rho_pb: f64,
    pub cp: f64,
    pub cx: f64,
    pub lambda12: f64,
    pub lambda04: f64,
    pub lambda03: f64,
}

impl PopulationParams {
    /// Builds parameters from published summary statistics. The variances are
    /// reconstructed from the coefficients of variation.
    pub fn from_summary(s: SummaryStatistics) -> Result<Self> {
        if s.population_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "population size {} < 2",
                s.population_size
            )));
        }
        if !(s.proportion > 0.0 && s.proportion < 1.0) {
            return Err(Error::DegenerateAttribute(s.proportion));
        }
        if s.xbar == 0.0 {
            return Err(Error::ZeroMean);
        }
        let values = [
            s.xbar, s.rho_pb, s.cp, s.cx, s.lambda12, s.lambda04, s.lambda03,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite summary statistic".into(),
            ));
        }
        if s.cp < 0.0 || s.cx < 0.0 {
            return Err(Error::InvalidParameter(
                "coefficients of variation must be non-negative".into(),
            ));
        }
        if s.rho_pb.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "rho_pb = {} outside [-1, 1]",
                s.rho_pb
            )));
        }
        Ok(Self {
            population_size: s.population_size,
            proportion: s.proportion,
            xbar: s.xbar,
            sx2: (s.cx * s.xbar).powi(2),
            sp2: (s.cp * s.proportion).powi(2),
            cp: s.cp,
            cx: s.cx,
            rho_pb: s.rho_pb,
            lambda03: s.lambda03,
            lambda04: s.lambda04,
            lambda12: s.lambda12,
        })
    }

    /// `lambda04 - 1 - lambda03^2`; non-negative for any real distribution.
    pub fn pearson_gap(&self) -> f64 {
        self.lambda04 - 1.0 - self.lambda03 * self.lambda03
    }
}

/// Sampling design for SRSWOR of `n` units out of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub sample_size: usize,
    pub population_size: usize,
    pub f: f64,
}

impl Design {
    pub fn new(sample_size: usize, population_size: usize) -> Result<Self> {
        let f = sampling_fraction(sample_size, population_size)?;
        Ok(Self {
            sample_size,
            population_size,
            f,
        })
    }

    pub fn is_census(&self) -> bool {
        self.sample_size == self.population_size
    }
}

/// Sufficient statistics of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub count: usize,
    pub p: f64,
    pub xbar: f64,
    pub sx2: f64,
}

impl SampleStats {
    /// Relative deviation of the sample proportion, `(p - P) / P`.
    pub fn e_p(&self, pop: &PopulationParams) -> f64 {
        (self.p - pop.proportion) / pop.proportion
    }

    /// Relative deviation of the auxiliary mean, `(xbar - Xbar) / Xbar`.
    pub fn e_mean(&self, pop: &PopulationParams) -> f64 {
        (self.xbar - pop.xbar) / pop.xbar
    }

    /// Relative deviation of the auxiliary variance, `(s^2 - S^2) / S^2`.
    pub fn e_var(&self, pop: &PopulationParams) -> f64 {
        (self.sx2 - pop.sx2) / pop.sx2
    }
}

/// `mu_rs = (1/N) sum (phi_i - P)^r (x_i - Xbar)^s`.
pub fn central_moment(frame: &PopulationFrame, r: u32, s: u32) -> f64 {
    let p = frame.proportion();
    let xbar = frame.x_mean();
    central_moment_about(frame, p, xbar, r, s)
}

fn central_moment_about(frame: &PopulationFrame, p: f64, xbar: f64, r: u32, s: u32) -> f64 {
    let total: f64 = frame
        .records()
        .map(|(phi, x)| (phi as f64 - p).powi(r as i32) * (x - xbar).powi(s as i32))
        .sum();
    total / frame.len() as f64
}

pub fn compute_population_params(frame: &PopulationFrame) -> Result<PopulationParams> {
    let n_pop = frame.len();
    let big_n = n_pop as f64;
    let p = frame.proportion();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateAttribute(p));
    }
    let xbar = frame.x_mean();

    let mu = |r, s| central_moment_about(frame, p, xbar, r, s);
    let mu20 = mu(2, 0);
    let mu02 = mu(0, 2);
    if mu02 <= 0.0 || frame.x().iter().all(|&v| v == frame.x()[0]) {
        return Err(Error::DegenerateAuxiliary);
    }
    if xbar == 0.0 {
        return Err(Error::ZeroMean);
    }
    let mu11 = mu(1, 1);
    let mu03 = mu(0, 3);
    let mu04 = mu(0, 4);
    let mu12 = mu(1, 2);

    let sx2 = mu02 * big_n / (big_n - 1.0);
    // exact for a 0/1 attribute
    let sp2 = big_n * p * (1.0 - p) / (big_n - 1.0);

    Ok(PopulationParams {
        population_size: n_pop,
        proportion: p,
        xbar,
        sx2,
        sp2,
        cp: sp2.sqrt() / p,
        cx: sx2.sqrt() / xbar,
        rho_pb: mu11 / (mu20 * mu02).sqrt(),
        lambda03: mu03 / mu02.powf(1.5),
        lambda04: mu04 / (mu02 * mu02),
        lambda12: mu12 / (mu20.sqrt() * mu02),
    })
}

/// Finite-population design factor `f = 1/n - 1/N`.
pub fn sampling_fraction(n: usize, population_size: usize) -> Result<f64> {
    if n < 2 || n > population_size {
        return Err(Error::InvalidDesign {
            n,
            population: population_size,
        });
    }
    if n == population_size {
        return Ok(0.0);
    }
    Ok(1.0 / n as f64 - 1.0 / population_size as f64)
}

pub fn sample_stats(frame: &PopulationFrame, indices: &[usize]) -> Result<SampleStats> {
    let population = frame.len();
    if indices.len() < 2 || indices.len() > population {
        return Err(Error::InvalidDesign {
            n: indices.len(),
            population,
        });
    }
    let mut seen = vec![false; population];
    for &i in indices {
        if i >= population {
            return Err(Error::IndexOutOfRange {
                index: i,
                population,
            });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(sample_stats_unchecked(frame, indices))
}

/// Same as [`sample_stats`] for index sets already known to be valid.
pub(crate) fn sample_stats_unchecked(frame: &PopulationFrame, indices: &[usize]) -> SampleStats {
    let n = indices.len();
    let nf = n as f64;
    let phi = frame.phi();
    let x = frame.x();
    let count: usize = indices.iter().map(|&i| phi[i] as usize).sum();
    let xbar = indices.iter().map(|&i| x[i]).sum::<f64>() / nf;
    let ss: f64 = indices.iter().map(|&i| (x[i] - xbar).powi(2)).sum();
    SampleStats {
        n,
        count,
        p: count as f64 / nf,
        xbar,
        sx2: ss / (nf - 1.0),
    }
}
