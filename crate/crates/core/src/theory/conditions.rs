use serde::{Deserialize, Serialize};

use super::*;
use crate::estimators::{T3Config, TcConfig};

/// One efficiency comparison `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub statement: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
    /// `rhs - lhs`
    pub slack: Option<f64>,
    pub error: Option<String>,
}

impl ConditionCheck {
    fn evaluate(name: &str, statement: &str, sides: Result<(f64, f64)>) -> Self {
        match sides {
            Ok((lhs, rhs)) => Self {
                name: name.into(),
                statement: statement.into(),
                lhs: Some(lhs),
                rhs: Some(rhs),
                holds: Some(lhs <= rhs),
                slack: Some(rhs - lhs),
                error: None,
            },
            Err(e) => Self {
                name: name.into(),
                statement: statement.into(),
                lhs: None,
                rhs: None,
                holds: None,
                slack: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub checks: Vec<ConditionCheck>,
    /// `rho^2 + (l03 rho - l12)^2 / (l04 - 1 - l03^2)`, the relative MSE
    /// reduction of `t1`/`t2` over `p`.
    pub t1_reduction: Option<f64>,
    /// The reduction is a sum of squares over a positive denominator, so the
    /// `t1`/`t2` comparison can never fail.
    pub t1_reduction_nonnegative: Option<bool>,
}

impl ComparisonReport {
    pub fn check(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn comparison_conditions(
    pop: &PopulationParams,
    f: f64,
    tc: &TcConfig,
    t3: &T3Config,
) -> ComparisonReport {
    let p2 = pop.proportion.powi(2);
    let cp2 = pop.cp.powi(2);
    let t1_min = t1_min_mse(pop, f);
    let t3_min = t3_constants(pop, f, t3.gamma, t3.g, t3.delta);
    let t3_min = t3_min_mse(&t3_min, pop);
    let tc_min =
        tc_constants(pop, f, tc.a, tc.b, tc.alpha, tc.beta).and_then(|k| tc_min_mse(&k, pop));

    let reduction = pop.pearson_gap().gt(&0.0).then(|| {
        let rho = pop.rho_pb;
        rho * rho + (pop.lambda03 * rho - pop.lambda12).powi(2) / pop.pearson_gap()
    });

    let checks = vec![
        ConditionCheck::evaluate(
            "t1_t2_vs_usual",
            "f Cp^2 [1 - rho^2 - (l03 rho - l12)^2/(l04 - 1 - l03^2)] <= f Cp^2",
            // from the reduction directly so that equality is exact
            t1_min
                .clone()
                .and(reduction.ok_or(Error::DegenerateMoments(pop.pearson_gap())))
                .map(|r| (f * cp2 * (1.0 - r), f * cp2)),
        ),
        ConditionCheck::evaluate(
            "t3_vs_usual",
            "1 - (B^2 C - 2BDE + A E^2)/(AC - D^2) <= f Cp^2",
            t3_min.clone().map(|m| (m / p2, f * cp2)),
        ),
        ConditionCheck::evaluate(
            "t3_vs_t2",
            "1 - (B^2 C - 2BDE + A E^2)/(AC - D^2) <= f Cp^2 [1 - rho^2 - (l03 rho - l12)^2/(l04 - 1 - l03^2)]",
            t3_min
                .clone()
                .and_then(|a| t1_min.clone().map(|b| (a / p2, b / p2))),
        ),
        ConditionCheck::evaluate(
            "t3_vs_tc",
            "P^2 [1 - (B^2 C - 2BDE + A E^2)/(AC - D^2)] <= min MSE(tc)",
            t3_min.and_then(|a| tc_min.map(|b| (a, b))),
        ),
    ];

    ComparisonReport {
        checks,
        t1_reduction: reduction,
        t1_reduction_nonnegative: reduction.map(|r| r >= 0.0),
    }
}
