//! Point estimators of the population proportion `P`.
//!
//! Every estimator combines the sample proportion `p` with the known
//! auxiliary mean `Xbar` and variance `S_x^2`. Configurations may carry
//! [`Constant::Optimal`] placeholders that are replaced by the
//! population-optimal values before evaluation.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::population::{sampling_fraction, PopulationParams, SampleStats};
use crate::theory;

/// A tuning constant that is either fixed or resolved to its MSE-optimal value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constant {
    Value(f64),
    Optimal,
}

impl Constant {
    pub fn value(self) -> Option<f64> {
        match self {
            Constant::Value(v) => Some(v),
            Constant::Optimal => None,
        }
    }

    fn resolve_with(self, optimal: f64) -> Constant {
        match self {
            Constant::Optimal => Constant::Value(optimal),
            fixed => fixed,
        }
    }

    fn require(self, name: &str) -> Result<f64> {
        self.value()
            .ok_or_else(|| Error::InvalidParameter(format!("{name} is unresolved")))
    }
}

impl From<f64> for Constant {
    fn from(v: f64) -> Self {
        Constant::Value(v)
    }
}

impl Serialize for Constant {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Constant::Value(v) => serializer.serialize_f64(*v),
            Constant::Optimal => serializer.serialize_str("optimal"),
        }
    }
}

impl<'de> Deserialize<'de> for Constant {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Constant::Value(v)),
            Raw::Str(s) if s == "optimal" => Ok(Constant::Optimal),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"optimal\", got {s:?}"
            ))),
        }
    }
}

/// Linear regression-type member `p + h1 (xbar/Xbar - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbConfig {
    pub h1: Constant,
}

impl Default for TbConfig {
    fn default() -> Self {
        Self {
            h1: Constant::Optimal,
        }
    }
}

/// Transformed-ratio/exponential family with a linear front factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcConfig {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q1: Constant,
    pub q2: Constant,
}

impl Default for TcConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            alpha: 1.0,
            beta: 0.0,
            q1: Constant::Optimal,
            q2: Constant::Optimal,
        }
    }
}

/// Power-ratio estimator `p (Xbar/xbar)^alpha (S^2/s^2)^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Config {
    pub alpha: Constant,
    pub beta: Constant,
}

impl Default for T1Config {
    fn default() -> Self {
        Self {
            alpha: Constant::Optimal,
            beta: Constant::Optimal,
        }
    }
}

/// Linear member `p + h1 (u - 1) + h2 (v - 1)` of the mean-and-variance class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Config {
    pub h1: Constant,
    pub h2: Constant,
}

impl Default for T2Config {
    fn default() -> Self {
        Self {
            h1: Constant::Optimal,
            h2: Constant::Optimal,
        }
    }
}

/// Weighted mix of a ratio-type and an exponential variance-type term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T3Config {
    pub gamma: f64,
    pub g: f64,
    pub delta: f64,
    pub m1: Constant,
    pub m2: Constant,
}

impl Default for T3Config {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            g: 1.0,
            delta: 1.0,
            m1: Constant::Optimal,
            m2: Constant::Optimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Usual,
    RatioTa,
    RegressionTb(TbConfig),
    FamilyTc(TcConfig),
    T1(T1Config),
    T2(T2Config),
    T3(T3Config),
}

impl EstimatorConfig {
    /// Short column label, e.g. `t3(g=1,delta=-1)`.
    pub fn label(&self) -> String {
        match self {
            EstimatorConfig::Usual => "p".into(),
            EstimatorConfig::RatioTa => "ta".into(),
            EstimatorConfig::RegressionTb(_) => "tb".into(),
            EstimatorConfig::FamilyTc(_) => "tc".into(),
            EstimatorConfig::T1(_) => "t1".into(),
            EstimatorConfig::T2(_) => "t2".into(),
            EstimatorConfig::T3(c) => format!("t3(g={},delta={})", c.g, c.delta),
        }
    }

    pub fn is_resolved(&self) -> bool {
        let all = |cs: &[Constant]| cs.iter().all(|c| c.value().is_some());
        match self {
            EstimatorConfig::Usual | EstimatorConfig::RatioTa => true,
            EstimatorConfig::RegressionTb(c) => all(&[c.h1]),
            EstimatorConfig::FamilyTc(c) => all(&[c.q1, c.q2]),
            EstimatorConfig::T1(c) => all(&[c.alpha, c.beta]),
            EstimatorConfig::T2(c) => all(&[c.h1, c.h2]),
            EstimatorConfig::T3(c) => all(&[c.m1, c.m2]),
        }
    }

    /// Replaces every `Optimal` placeholder with the value minimising the
    /// first-order MSE for this population and design factor `f`.
    ///
    /// In the census limit (`f = 0`) the optimal-weight systems of `tc` and
    /// `t3` are singular; any weights summing to one are optimal there and
    /// `(1, 0)` is used.
    pub fn resolve(&self, pop: &PopulationParams, f: f64) -> Result<EstimatorConfig> {
        Ok(match *self {
            EstimatorConfig::RegressionTb(mut c) => {
                if c.h1 == Constant::Optimal {
                    c.h1 = Constant::Value(theory::tb_optimal_h1(pop)?);
                }
                EstimatorConfig::RegressionTb(c)
            }
            EstimatorConfig::FamilyTc(mut c) => {
                if c.q1 == Constant::Optimal || c.q2 == Constant::Optimal {
                    let (q1, q2) = if f == 0.0 {
                        (1.0, 0.0)
                    } else {
                        let k = theory::tc_constants(pop, f, c.a, c.b, c.alpha, c.beta)?;
                        theory::tc_optimal_q(&k)?
                    };
                    c.q1 = c.q1.resolve_with(q1);
                    c.q2 = c.q2.resolve_with(q2);
                }
                EstimatorConfig::FamilyTc(c)
            }
            EstimatorConfig::T1(mut c) => {
                if c.alpha == Constant::Optimal || c.beta == Constant::Optimal {
                    let (alpha, beta) = theory::t1_optimal(pop)?;
                    c.alpha = c.alpha.resolve_with(alpha);
                    c.beta = c.beta.resolve_with(beta);
                }
                EstimatorConfig::T1(c)
            }
            EstimatorConfig::T2(mut c) => {
                if c.h1 == Constant::Optimal || c.h2 == Constant::Optimal {
                    let (h1, h2) = theory::t2_optimal(pop)?;
                    c.h1 = c.h1.resolve_with(h1);
                    c.h2 = c.h2.resolve_with(h2);
                }
                EstimatorConfig::T2(c)
            }
            EstimatorConfig::T3(mut c) => {
                if c.m1 == Constant::Optimal || c.m2 == Constant::Optimal {
                    let (m1, m2) = if f == 0.0 {
                        (1.0, 0.0)
                    } else {
                        let k = theory::t3_constants(pop, f, c.gamma, c.g, c.delta);
                        theory::t3_optimal_m(&k)?
                    };
                    c.m1 = c.m1.resolve_with(m1);
                    c.m2 = c.m2.resolve_with(m2);
                }
                EstimatorConfig::T3(c)
            }
            other => other,
        })
    }

    /// Evaluates a resolved configuration on one sample.
    pub fn evaluate(&self, s: &SampleStats, pop: &PopulationParams) -> Result<f64> {
        let value = match *self {
            EstimatorConfig::Usual => s.p,
            EstimatorConfig::RatioTa => {
                if s.xbar == 0.0 {
                    return Err(Error::ZeroSampleMean);
                }
                s.p * pop.xbar / s.xbar
            }
            EstimatorConfig::RegressionTb(c) => {
                let h1 = c.h1.require("h1")?;
                s.p + h1 * (s.xbar / pop.xbar - 1.0)
            }
            EstimatorConfig::FamilyTc(c) => {
                let q1 = c.q1.require("q1")?;
                let q2 = c.q2.require("q2")?;
                let pop_t = c.a * pop.xbar + c.b;
                let smp_t = c.a * s.xbar + c.b;
                if pop_t <= 0.0 {
                    return Err(Error::NonpositiveTransform(pop_t));
                }
                if smp_t <= 0.0 {
                    return Err(Error::NonpositiveTransform(smp_t));
                }
                (q1 * s.p + q2 * (pop.xbar - s.xbar))
                    * (pop_t / smp_t).powf(c.alpha)
                    * (c.beta * (pop_t - smp_t) / (pop_t + smp_t)).exp()
            }
            EstimatorConfig::T1(c) => {
                let alpha = c.alpha.require("alpha")?;
                let beta = c.beta.require("beta")?;
                let mean_ratio = pop.xbar / s.xbar;
                let var_ratio = pop.sx2 / s.sx2;
                if !(mean_ratio > 0.0 && mean_ratio.is_finite()) {
                    return Err(Error::NonpositiveBase(s.xbar));
                }
                if !(var_ratio > 0.0 && var_ratio.is_finite()) {
                    return Err(Error::NonpositiveBase(s.sx2));
                }
                s.p * mean_ratio.powf(alpha) * var_ratio.powf(beta)
            }
            EstimatorConfig::T2(c) => {
                let h1 = c.h1.require("h1")?;
                let h2 = c.h2.require("h2")?;
                if pop.sx2 <= 0.0 {
                    return Err(Error::DegenerateAuxiliary);
                }
                s.p + h1 * (s.xbar / pop.xbar - 1.0) + h2 * (s.sx2 / pop.sx2 - 1.0)
            }
            EstimatorConfig::T3(c) => {
                let m1 = c.m1.require("m1")?;
                let m2 = c.m2.require("m2")?;
                let blend = c.gamma * s.xbar + (1.0 - c.gamma) * pop.xbar;
                let ratio = pop.xbar / blend;
                if !(ratio > 0.0 && ratio.is_finite()) {
                    return Err(Error::NonpositiveBase(blend));
                }
                let var_sum = pop.sx2 + s.sx2;
                if var_sum <= 0.0 {
                    return Err(Error::NonpositiveBase(var_sum));
                }
                m1 * s.p * ratio.powf(c.g)
                    + m2 * s.p * (c.delta * (pop.sx2 - s.sx2) / var_sum).exp()
            }
        };
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{} produced a non-finite estimate",
                self.label()
            )));
        }
        Ok(value)
    }
}

/// A point estimate together with the fully resolved configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub config_used: EstimatorConfig,
}

/// Resolves `cfg` for the design implied by the sample size and evaluates it.
pub fn estimate(
    s: &SampleStats,
    pop: &PopulationParams,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let f = sampling_fraction(s.n, pop.population_size)?;
    let config_used = cfg.resolve(pop, f)?;
    let value = config_used.evaluate(s, pop)?;
    Ok(Estimate { value, config_used })
}

pub fn estimate_usual(s: &SampleStats) -> Estimate {
    Estimate {
        value: s.p,
        config_used: EstimatorConfig::Usual,
    }
}

pub fn estimate_ratio_ta(s: &SampleStats, pop: &PopulationParams) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::RatioTa)
}

pub fn estimate_regression_tb(s: &SampleStats, pop: &PopulationParams) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::RegressionTb(TbConfig::default()))
}

pub fn estimate_tc(s: &SampleStats, pop: &PopulationParams, cfg: &TcConfig) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::FamilyTc(*cfg))
}

pub fn estimate_t1(s: &SampleStats, pop: &PopulationParams, cfg: &T1Config) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::T1(*cfg))
}

pub fn estimate_t2(s: &SampleStats, pop: &PopulationParams, cfg: &T2Config) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::T2(*cfg))
}

pub fn estimate_t3(s: &SampleStats, pop: &PopulationParams, cfg: &T3Config) -> Result<Estimate> {
    estimate(s, pop, &EstimatorConfig::T3(*cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{compute_population_params, sample_stats, PopulationFrame};

    fn frame() -> PopulationFrame {
        PopulationFrame::new(
            vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 0],
            vec![6.1, 2.3, 7.4, 5.2, 1.9, 3.3, 8.8, 2.7, 4.6, 3.9],
        )
        .unwrap()
    }

    fn stats(p: f64, xbar: f64, sx2: f64, n: usize) -> SampleStats {
        SampleStats {
            n,
            count: (p * n as f64).round() as usize,
            p,
            xbar,
            sx2,
        }
    }

    fn fixed_tc(q1: f64, q2: f64, a: f64, b: f64, alpha: f64, beta: f64) -> TcConfig {
        TcConfig {
            a,
            b,
            alpha,
            beta,
            q1: q1.into(),
            q2: q2.into(),
        }
    }

    #[test]
    fn usual_is_identity() {
        let s = stats(0.525, 3.0, 1.0, 40);
        assert_eq!(estimate_usual(&s).value, 0.525);
    }

    #[test]
    fn ratio_examples() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, pop.xbar, 2.0, 4);
        assert_eq!(estimate_ratio_ta(&s, &pop).unwrap().value, 0.5);

        let mut pop10 = pop;
        pop10.xbar = 10.0;
        let s = stats(0.5, 8.0, 2.0, 4);
        assert_eq!(estimate_ratio_ta(&s, &pop10).unwrap().value, 0.625);

        let s = stats(0.5, 0.0, 2.0, 4);
        assert_eq!(estimate_ratio_ta(&s, &pop), Err(Error::ZeroSampleMean));
    }

    #[test]
    fn regression_examples() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.25, pop.xbar, 1.0, 4);
        assert_eq!(estimate_regression_tb(&s, &pop).unwrap().value, 0.25);

        let mut flat = pop;
        flat.rho_pb = 0.0;
        let s = stats(0.25, pop.xbar * 1.3, 1.0, 4);
        assert_eq!(estimate_regression_tb(&s, &flat).unwrap().value, 0.25);

        let est = estimate_regression_tb(&s, &pop).unwrap();
        let EstimatorConfig::RegressionTb(c) = est.config_used else {
            panic!("kind changed")
        };
        let expected = -pop.proportion * pop.rho_pb * pop.cp / pop.cx;
        assert_eq!(c.h1, Constant::Value(expected));
    }

    #[test]
    fn tc_reductions() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.75, pop.xbar * 1.1, 4.0, 4);
        let ta = estimate_ratio_ta(&s, &pop).unwrap().value;
        let tc = estimate_tc(&s, &pop, &fixed_tc(1.0, 0.0, 1.0, 0.0, 1.0, 0.0))
            .unwrap()
            .value;
        assert_eq!(tc, ta);

        let inert = estimate_tc(&s, &pop, &fixed_tc(1.0, 0.0, 2.0, 5.0, 0.0, 0.0))
            .unwrap()
            .value;
        assert_eq!(inert, 0.75);

        let s_bal = stats(0.75, pop.xbar, 4.0, 4);
        let v = estimate_tc(&s_bal, &pop, &fixed_tc(0.8, 3.0, 1.0, 2.0, 1.5, 0.7))
            .unwrap()
            .value;
        assert!((v - 0.8 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn tc_rejects_nonpositive_transform() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, 1.0, 1.0, 4);
        let cfg = fixed_tc(1.0, 0.0, 1.0, -2.0, 1.0, 0.0);
        assert!(matches!(
            estimate_tc(&s, &pop, &cfg),
            Err(Error::NonpositiveTransform(_))
        ));
    }

    #[test]
    fn t1_reductions() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, pop.xbar * 0.9, pop.sx2 * 1.4, 4);
        let cfg = |a: f64, b: f64| T1Config {
            alpha: a.into(),
            beta: b.into(),
        };
        assert_eq!(estimate_t1(&s, &pop, &cfg(0.0, 0.0)).unwrap().value, 0.5);
        assert_eq!(
            estimate_t1(&s, &pop, &cfg(1.0, 0.0)).unwrap().value,
            estimate_ratio_ta(&s, &pop).unwrap().value
        );
        let bal = stats(0.5, pop.xbar, pop.sx2, 4);
        assert_eq!(estimate_t1(&bal, &pop, &cfg(-2.3, 0.8)).unwrap().value, 0.5);
        let neg = stats(0.5, -1.0, pop.sx2, 4);
        assert!(matches!(
            estimate_t1(&neg, &pop, &cfg(1.0, 1.0)),
            Err(Error::NonpositiveBase(_))
        ));
        let zero_var = stats(0.5, 1.0, 0.0, 4);
        assert!(matches!(
            estimate_t1(&zero_var, &pop, &cfg(1.0, 1.0)),
            Err(Error::NonpositiveBase(_))
        ));
    }

    #[test]
    fn t2_nests_tb() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, pop.xbar * 1.2, pop.sx2 * 0.7, 4);
        let h1 = theory::tb_optimal_h1(&pop).unwrap();
        let t2 = estimate_t2(
            &s,
            &pop,
            &T2Config {
                h1: h1.into(),
                h2: 0.0.into(),
            },
        )
        .unwrap()
        .value;
        assert_eq!(t2, estimate_regression_tb(&s, &pop).unwrap().value);

        let bal = stats(0.5, pop.xbar, pop.sx2, 4);
        assert_eq!(
            estimate_t2(&bal, &pop, &T2Config::default()).unwrap().value,
            0.5
        );
    }

    #[test]
    fn t3_inert_cases() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, pop.xbar * 1.2, pop.sx2 * 0.7, 4);
        let cfg = T3Config {
            gamma: 1.0,
            g: 0.0,
            delta: 0.0,
            m1: 0.5.into(),
            m2: 0.5.into(),
        };
        assert_eq!(estimate_t3(&s, &pop, &cfg).unwrap().value, 0.5);

        let bal = stats(0.5, pop.xbar, pop.sx2, 4);
        let cfg = T3Config {
            gamma: 0.4,
            g: 1.0,
            delta: -1.0,
            m1: 0.3.into(),
            m2: 0.9.into(),
        };
        let v = estimate_t3(&bal, &pop, &cfg).unwrap().value;
        assert!((v - 1.2 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn census_sample_returns_p() {
        let fr = frame();
        let pop = compute_population_params(&fr).unwrap();
        let all: Vec<usize> = (0..fr.len()).collect();
        let s = sample_stats(&fr, &all).unwrap();
        let configs = [
            EstimatorConfig::Usual,
            EstimatorConfig::RatioTa,
            EstimatorConfig::RegressionTb(TbConfig::default()),
            EstimatorConfig::FamilyTc(TcConfig::default()),
            EstimatorConfig::T1(T1Config::default()),
            EstimatorConfig::T2(T2Config::default()),
            EstimatorConfig::T3(T3Config::default()),
        ];
        for cfg in configs {
            let est = estimate(&s, &pop, &cfg).unwrap();
            assert!(
                (est.value - pop.proportion).abs() < 1e-12,
                "{}: {}",
                cfg.label(),
                est.value
            );
            assert!(est.config_used.is_resolved());
        }
    }

    #[test]
    fn unresolved_config_is_rejected_by_evaluate() {
        let pop = compute_population_params(&frame()).unwrap();
        let s = stats(0.5, pop.xbar, pop.sx2, 4);
        let cfg = EstimatorConfig::T1(T1Config::default());
        assert!(cfg.evaluate(&s, &pop).is_err());
    }

    #[test]
    fn constant_serde() {
        let cfg = EstimatorConfig::T3(T3Config::default());
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"kind\":\"t3\""));
        assert!(text.contains("\"m1\":\"optimal\""));
        let back: EstimatorConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<Constant>("\"best\"").is_err());
    }
}
