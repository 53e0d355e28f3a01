//! How much rounding of the published summary statistics can move the
//! efficiency of each estimator.
//!
//! Each perturbed field moves by at most half a unit in its last significant
//! digit. The scan visits the unperturbed point, the twelve single-axis
//! extremes and all 64 joint corners, in that fixed order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::theory_for;
use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::population::PopulationParams;

/// Fields perturbed by the scan, in scan-axis order.
pub const PERTURBED_FIELDS: [&str; 6] = ["cp", "cx", "rho_pb", "lambda03", "lambda04", "lambda12"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInterval {
    pub label: String,
    pub point_pre: Option<f64>,
    pub min_pre: Option<f64>,
    pub max_pre: Option<f64>,
    pub width: Option<f64>,
    /// Scan points where the MSE was negative, zero or the optimum singular.
    pub unstable_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub digits: u32,
    pub half_widths: Vec<(String, f64)>,
    pub points_evaluated: usize,
    pub estimators: Vec<SensitivityInterval>,
}

/// Half a unit in the `digits`-th significant digit of `value`.
pub(crate) fn half_unit(value: f64, digits: u32) -> f64 {
    let exponent = if value == 0.0 {
        -(digits as i32)
    } else {
        value.abs().log10().floor() as i32 - digits as i32 + 1
    };
    0.5 * 10f64.powi(exponent)
}

fn fields(pop: &PopulationParams) -> [f64; 6] {
    [
        pop.cp,
        pop.cx,
        pop.rho_pb,
        pop.lambda03,
        pop.lambda04,
        pop.lambda12,
    ]
}

fn with_fields(pop: &PopulationParams, v: [f64; 6]) -> PopulationParams {
    PopulationParams {
        cp: v[0],
        cx: v[1],
        rho_pb: v[2],
        lambda03: v[3],
        lambda04: v[4],
        lambda12: v[5],
        ..*pop
    }
}

/// Sign patterns of the scan: center, +-1 on each axis, then all corners.
fn scan_offsets() -> Vec<[f64; 6]> {
    let mut out = vec![[0.0; 6]];
    for axis in 0..6 {
        for sign in [-1.0, 1.0] {
            let mut o = [0.0; 6];
            o[axis] = sign;
            out.push(o);
        }
    }
    for mask in 0u32..64 {
        let mut o = [0.0; 6];
        for (axis, slot) in o.iter_mut().enumerate() {
            *slot = if mask >> axis & 1 == 1 { 1.0 } else { -1.0 };
        }
        out.push(o);
    }
    out
}

fn point_pre(pop: &PopulationParams, f: f64, config: &EstimatorConfig) -> Result<Option<f64>> {
    let t = theory_for(pop, f, config)?;
    Ok(t.pre)
}

pub fn sensitivity(
    pop: &PopulationParams,
    f: f64,
    configs: &[EstimatorConfig],
    digits: u32,
) -> Result<SensitivityReport> {
    if digits == 0 {
        return Err(Error::InvalidParameter("digits must be at least 1".into()));
    }
    let center = fields(pop);
    let half: Vec<f64> = center.iter().map(|&v| half_unit(v, digits)).collect();
    let offsets = scan_offsets();

    let estimators = configs
        .iter()
        .map(|config| {
            let values: Vec<Option<f64>> = offsets
                .par_iter()
                .map(|o| {
                    let mut v = center;
                    for i in 0..6 {
                        v[i] += o[i] * half[i];
                    }
                    point_pre(&with_fields(pop, v), f, config).ok().flatten()
                })
                .collect();
            let stable: Vec<f64> = values.iter().flatten().copied().collect();
            let min_pre = stable.iter().copied().reduce(f64::min);
            let max_pre = stable.iter().copied().reduce(f64::max);
            SensitivityInterval {
                label: config.label(),
                point_pre: values[0],
                min_pre,
                max_pre,
                width: min_pre.zip(max_pre).map(|(lo, hi)| hi - lo),
                unstable_points: values.len() - stable.len(),
            }
        })
        .collect();

    Ok(SensitivityReport {
        digits,
        half_widths: PERTURBED_FIELDS
            .iter()
            .zip(&half)
            .map(|(n, &h)| (n.to_string(), h))
            .collect(),
        points_evaluated: offsets.len(),
        estimators,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::home_ownership;
    use super::*;
    use crate::estimators::{T3Config, TbConfig};

    #[test]
    fn half_units() {
        assert!((half_unit(0.963, 3) - 0.0005).abs() < 1e-18);
        assert!((half_unit(1.75, 3) - 0.005).abs() < 1e-17);
        assert!((half_unit(-0.118, 3) - 0.0005).abs() < 1e-18);
        assert!((half_unit(0.0, 3) - 0.0005).abs() < 1e-18);
    }

    #[test]
    fn scan_shape() {
        let o = scan_offsets();
        assert_eq!(o.len(), 1 + 12 + 64);
        assert_eq!(o[0], [0.0; 6]);
    }

    #[test]
    fn zero_perturbation_collapses_interval() {
        let (pop, f) = home_ownership();
        let cfgs = [EstimatorConfig::T3(T3Config::default())];
        let r = sensitivity(&pop, f, &cfgs, 60).unwrap();
        let e = &r.estimators[0];
        assert_eq!(e.min_pre, e.point_pre);
        assert_eq!(e.max_pre, e.point_pre);
        assert_eq!(e.width, Some(0.0));
    }

    #[test]
    fn regression_interval_is_narrow() {
        let (pop, f) = home_ownership();
        let cfgs = [EstimatorConfig::RegressionTb(TbConfig::default())];
        let r = sensitivity(&pop, f, &cfgs, 3).unwrap();
        let e = &r.estimators[0];
        assert!(e.width.unwrap() < 5.0, "{e:?}");
        assert_eq!(e.unstable_points, 0);
        assert!(e.min_pre.unwrap() <= e.point_pre.unwrap());
        assert!(e.max_pre.unwrap() >= e.point_pre.unwrap());
    }

    #[test]
    fn rejects_zero_digits() {
        let (pop, f) = home_ownership();
        assert!(sensitivity(&pop, f, &[EstimatorConfig::Usual], 0).is_err());
    }
}
