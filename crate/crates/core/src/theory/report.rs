use serde::{Deserialize, Serialize};

use super::*;
use crate::estimators::{EstimatorConfig, T3Config, TbConfig, TcConfig};
use crate::population::Design;

/// First-order bias, MSE and efficiency of one configured estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTheory {
    pub label: String,
    pub config: EstimatorConfig,
    pub bias: f64,
    pub bias_formula: String,
    pub mse: f64,
    pub mse_formula: String,
    /// `None` when either MSE is zero (census, perfect correlation).
    pub pre: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub design: Design,
    pub var_usual: f64,
    pub estimators: Vec<EstimatorTheory>,
}

const LINEAR_BIAS: &str = "0 (linear in the deviations)";

/// Resolves `config` and evaluates its first-order bias and MSE.
pub fn theory_for(
    pop: &PopulationParams,
    f: f64,
    config: &EstimatorConfig,
) -> Result<EstimatorTheory> {
    let resolved = config.resolve(pop, f)?;
    let label = config.label();
    let fixed = |c: crate::estimators::Constant| c.value().unwrap_or(f64::NAN);
    let (bias, bias_formula, mse, mse_formula) = match resolved {
        EstimatorConfig::Usual => (
            0.0,
            "0".to_string(),
            var_usual(pop, f),
            "f P^2 Cp^2".to_string(),
        ),
        EstimatorConfig::RatioTa => (
            bias_ta(pop, f),
            "f P (Cx^2 - rho Cp Cx)".to_string(),
            mse_ta(pop, f),
            "f P^2 (Cp^2 + Cx^2 - 2 rho Cp Cx)".to_string(),
        ),
        EstimatorConfig::RegressionTb(TbConfig { h1 }) => {
            let optimal = config == &EstimatorConfig::RegressionTb(TbConfig::default());
            (
                0.0,
                LINEAR_BIAS.to_string(),
                t2_mse(pop, f, fixed(h1), 0.0),
                if optimal {
                    "f P^2 Cp^2 (1 - rho^2)".to_string()
                } else {
                    "f (P^2 Cp^2 + H1^2 Cx^2 + 2 P H1 rho Cp Cx)".to_string()
                },
            )
        }
        EstimatorConfig::FamilyTc(c) => {
            let k = tc_constants(pop, f, c.a, c.b, c.alpha, c.beta)?;
            let (q1, q2) = (fixed(c.q1), fixed(c.q2));
            (
                tc_bias(pop, f, &k, q1, q2),
                "P (q1 - 1) + f [(q2 Xbar B + q1 P A) Cx^2 - q1 P B rho Cp Cx]".to_string(),
                tc_mse(&k, pop, q1, q2),
                "P^2 + D1 q1^2 + 2 D2 q1 q2 + D3 q2^2 - 2 D4 q1 - 2 D5 q2; at optimum \
                 P^2 - (D1 D5^2 + D3 D4^2 - 2 D2 D4 D5) / (D1 D3 - D2^2)"
                    .to_string(),
            )
        }
        EstimatorConfig::T1(c) => {
            let (a, b) = (fixed(c.alpha), fixed(c.beta));
            (
                t1_bias(pop, f, a, b),
                "f P [a(a+1)/2 Cx^2 + b(b+1)/2 (l04-1) - a rho Cp Cx - b Cp l12 + a b Cx l03]"
                    .to_string(),
                t1_mse(pop, f, a, b),
                "f P^2 [Cp^2 + a^2 Cx^2 + b^2 (l04-1) - 2a rho Cp Cx - 2b Cp l12 + 2ab Cx l03]; \
                 at optimum f P^2 Cp^2 [1 - rho^2 - (l03 rho - l12)^2 / (l04 - 1 - l03^2)]"
                    .to_string(),
            )
        }
        EstimatorConfig::T2(c) => (
            0.0,
            LINEAR_BIAS.to_string(),
            t2_mse(pop, f, fixed(c.h1), fixed(c.h2)),
            "f [P^2 Cp^2 + H1^2 Cx^2 + H2^2 (l04-1) + 2P H1 rho Cp Cx + 2P H2 Cp l12 \
             + 2 H1 H2 Cx l03]; at optimum f P^2 Cp^2 [1 - rho^2 - (l03 rho - l12)^2 / \
             (l04 - 1 - l03^2)]"
                .to_string(),
        ),
        EstimatorConfig::T3(c) => {
            let k = t3_constants(pop, f, c.gamma, c.g, c.delta);
            let (m1, m2) = (fixed(c.m1), fixed(c.m2));
            (
                t3_bias(&k, pop, m1, m2),
                "-P (1 - m1 B - m2 E)".to_string(),
                t3_mse(&k, pop, m1, m2),
                "P^2 [1 + m1^2 A + m2^2 C + 2 m1 m2 D - 2 m1 B - 2 m2 E]; at optimum \
                 P^2 [1 - (B^2 C - 2BDE + A E^2) / (AC - D^2)]"
                    .to_string(),
            )
        }
    };
    let mse = check_mse(&label, mse, pop)?;
    let baseline = var_usual(pop, f);
    let pre = if mse > 0.0 && baseline > 0.0 {
        Some(super::pre(baseline, mse)?)
    } else {
        None
    };
    Ok(EstimatorTheory {
        label,
        config: resolved,
        bias,
        bias_formula,
        mse,
        mse_formula,
        pre,
    })
}

pub fn evaluate_theory(
    pop: &PopulationParams,
    design: &Design,
    configs: &[EstimatorConfig],
) -> Result<TheoryReport> {
    let estimators = configs
        .iter()
        .map(|c| theory_for(pop, design.f, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryReport {
        design: *design,
        var_usual: var_usual(pop, design.f),
        estimators,
    })
}

/// Estimator columns of the efficiency table: `p, ta, tb, tc, t1, t2` and
/// three `t3` variants `(g, delta) = (1, 1), (1, -1), (0, 1)` sharing the
/// supplied `gamma` and weights. A `t3` configuration with any other
/// `(g, delta)` is appended as an extra column.
pub fn table_lineup(tc: TcConfig, t3: T3Config) -> Vec<EstimatorConfig> {
    let mut lineup = vec![
        EstimatorConfig::Usual,
        EstimatorConfig::RatioTa,
        EstimatorConfig::RegressionTb(TbConfig::default()),
        EstimatorConfig::FamilyTc(tc),
        EstimatorConfig::T1(Default::default()),
        EstimatorConfig::T2(Default::default()),
    ];
    let variants = [(1.0, 1.0), (1.0, -1.0), (0.0, 1.0)];
    for (g, delta) in variants {
        lineup.push(EstimatorConfig::T3(T3Config { g, delta, ..t3 }));
    }
    if !variants.contains(&(t3.g, t3.delta)) {
        lineup.push(EstimatorConfig::T3(t3));
    }
    lineup
}
