//! First-order bias and MSE of every estimator, their optimal constants and
//! relative efficiencies.
//!
//! All expressions are first-order Taylor approximations in the relative
//! deviations `e_p`, `e_1 = (xbar - Xbar)/Xbar` and `e_3 = (s^2 - S^2)/S^2`,
//! using `E(e_p^2) = f C_p^2`, `E(e_1^2) = f C_x^2`, `E(e_3^2) = f (l04 - 1)`,
//! `E(e_p e_1) = f rho C_p C_x`, `E(e_p e_3) = f C_p l12` and
//! `E(e_1 e_3) = f C_x l03`.

mod conditions;
mod report;
mod sensitivity;
mod t3;
mod tc;

pub use conditions::{comparison_conditions, ComparisonReport, ConditionCheck};
pub use report::{evaluate_theory, table_lineup, theory_for, EstimatorTheory, TheoryReport};
pub use sensitivity::{sensitivity, SensitivityInterval, SensitivityReport, PERTURBED_FIELDS};
pub use t3::{t3_bias, t3_bias_min, t3_constants, t3_min_mse, t3_mse, t3_optimal_m, T3Constants};
pub use tc::{tc_bias, tc_constants, tc_min_mse, tc_mse, tc_optimal_q, TcConstants};

use crate::error::{Error, Result};
use crate::population::PopulationParams;

/// Relative size below which a 2x2 determinant is treated as zero.
pub(crate) const SINGULAR_RTOL: f64 = 1e-12;

/// Negative first-order MSEs smaller than this fraction of `P^2` are
/// rounding noise and clamp to zero.
pub(crate) const NEGATIVE_MSE_RTOL: f64 = 1e-12;

pub(crate) fn check_mse(estimator: &str, mse: f64, pop: &PopulationParams) -> Result<f64> {
    if !mse.is_finite() {
        return Err(Error::NegativeMse {
            estimator: estimator.to_string(),
            value: mse,
        });
    }
    if mse >= 0.0 {
        return Ok(mse);
    }
    let scale = pop.proportion * pop.proportion;
    if -mse <= NEGATIVE_MSE_RTOL * scale {
        Ok(0.0)
    } else {
        Err(Error::NegativeMse {
            estimator: estimator.to_string(),
            value: mse,
        })
    }
}

fn rho_cp_cx(pop: &PopulationParams) -> f64 {
    pop.rho_pb * pop.cp * pop.cx
}

/// Variance of the sample proportion, `f P^2 C_p^2`.
pub fn var_usual(pop: &PopulationParams, f: f64) -> f64 {
    f * pop.proportion.powi(2) * pop.cp.powi(2)
}

pub fn mse_ta(pop: &PopulationParams, f: f64) -> f64 {
    f * pop.proportion.powi(2) * (pop.cp.powi(2) + pop.cx.powi(2) - 2.0 * rho_cp_cx(pop))
}

/// Classical ratio-estimator bias `f P (C_x^2 - rho C_p C_x)`.
pub fn bias_ta(pop: &PopulationParams, f: f64) -> f64 {
    f * pop.proportion * (pop.cx.powi(2) - rho_cp_cx(pop))
}

pub fn min_mse_tb(pop: &PopulationParams, f: f64) -> f64 {
    var_usual(pop, f) * (1.0 - pop.rho_pb.powi(2))
}

/// Slope `H1* = -P rho C_p / C_x` of the MSE-optimal regression member.
pub fn tb_optimal_h1(pop: &PopulationParams) -> Result<f64> {
    if pop.cx == 0.0 {
        return Err(Error::DegenerateAuxiliary);
    }
    Ok(-pop.proportion * pop.rho_pb * pop.cp / pop.cx)
}

/// Bias of a general member of the regression class in terms of its
/// second-order derivatives `h2 = H_uu/2`, `h3 = H_pu/2`, `h4 = H_pp/2`.
pub fn class_bias_tb(pop: &PopulationParams, f: f64, h2: f64, h3: f64, h4: f64) -> f64 {
    let p = pop.proportion;
    f * (p * rho_cp_cx(pop) * h3 + pop.cx.powi(2) * h2 + p * p * pop.cp.powi(2) * h4)
}

fn moment_gap(pop: &PopulationParams) -> Result<f64> {
    let gap = pop.pearson_gap();
    if !(gap > 0.0) {
        return Err(Error::DegenerateMoments(gap));
    }
    Ok(gap)
}

/// Optimal exponents `(alpha*, beta*)` of `p (Xbar/xbar)^alpha (S^2/s^2)^beta`.
pub fn t1_optimal(pop: &PopulationParams) -> Result<(f64, f64)> {
    let gap = moment_gap(pop)?;
    if pop.cx == 0.0 {
        return Err(Error::DegenerateAuxiliary);
    }
    let (rho, l03, l04, l12) = (pop.rho_pb, pop.lambda03, pop.lambda04, pop.lambda12);
    let alpha = pop.cp * (rho * (l04 - 1.0) - l03 * l12) / (pop.cx * gap);
    let beta = pop.cp * (l12 - rho * l03) / gap;
    Ok((alpha, beta))
}

pub fn t1_mse(pop: &PopulationParams, f: f64, alpha: f64, beta: f64) -> f64 {
    let (cp, cx) = (pop.cp, pop.cx);
    f * pop.proportion.powi(2)
        * (cp * cp + alpha * alpha * cx * cx + beta * beta * (pop.lambda04 - 1.0)
            - 2.0 * alpha * rho_cp_cx(pop)
            - 2.0 * beta * cp * pop.lambda12
            + 2.0 * alpha * beta * cx * pop.lambda03)
}

/// `f P^2 C_p^2 [1 - rho^2 - (l03 rho - l12)^2 / (l04 - 1 - l03^2)]`.
pub fn t1_min_mse(pop: &PopulationParams, f: f64) -> Result<f64> {
    let gap = moment_gap(pop)?;
    let rho = pop.rho_pb;
    let reduction = rho * rho + (pop.lambda03 * rho - pop.lambda12).powi(2) / gap;
    Ok(var_usual(pop, f) * (1.0 - reduction))
}

pub fn t1_bias(pop: &PopulationParams, f: f64, alpha: f64, beta: f64) -> f64 {
    let (cp, cx) = (pop.cp, pop.cx);
    f * pop.proportion
        * (alpha * (alpha + 1.0) / 2.0 * cx * cx + beta * (beta + 1.0) / 2.0 * (pop.lambda04 - 1.0)
            - alpha * rho_cp_cx(pop)
            - beta * cp * pop.lambda12
            + alpha * beta * cx * pop.lambda03)
}

/// Optimal `(H1*, H2*)` of the linear member `p + H1 (u - 1) + H2 (v - 1)`.
pub fn t2_optimal(pop: &PopulationParams) -> Result<(f64, f64)> {
    let gap = moment_gap(pop)?;
    if pop.cx == 0.0 {
        return Err(Error::DegenerateAuxiliary);
    }
    let (rho, l03, l04, l12) = (pop.rho_pb, pop.lambda03, pop.lambda04, pop.lambda12);
    let p = pop.proportion;
    let h1 = p * pop.cp * (l03 * l12 - rho * (l04 - 1.0)) / (pop.cx * gap);
    let h2 = p * pop.cp * (rho * l03 - l12) / gap;
    Ok((h1, h2))
}

pub fn t2_mse(pop: &PopulationParams, f: f64, h1: f64, h2: f64) -> f64 {
    let p = pop.proportion;
    let (cp, cx) = (pop.cp, pop.cx);
    f * (p * p * cp * cp
        + h1 * h1 * cx * cx
        + h2 * h2 * (pop.lambda04 - 1.0)
        + 2.0 * p * h1 * rho_cp_cx(pop)
        + 2.0 * p * h2 * cp * pop.lambda12
        + 2.0 * h1 * h2 * cx * pop.lambda03)
}

/// Identical to [`t1_min_mse`].
pub fn t2_min_mse(pop: &PopulationParams, f: f64) -> Result<f64> {
    t1_min_mse(pop, f)
}

/// Bias of a general member of the mean-and-variance class in terms of the
/// second-order derivatives `h[0..6] = (H3, ..., H8)`.
pub fn class_bias_t2(pop: &PopulationParams, f: f64, h: [f64; 6]) -> f64 {
    let p = pop.proportion;
    let (cp, cx) = (pop.cp, pop.cx);
    f * (p * cp * cp * h[0]
        + cx * cx * h[1]
        + (pop.lambda04 - 1.0) * h[2]
        + p * rho_cp_cx(pop) * h[3]
        + cx * pop.lambda03 * h[4]
        + p * cp * pop.lambda12 * h[5])
}

/// Percent relative efficiency `100 * baseline / mse`.
pub fn pre(mse_baseline: f64, mse: f64) -> Result<f64> {
    if !(mse > 0.0 && mse.is_finite()) {
        return Err(Error::NonpositiveMse(mse));
    }
    Ok(100.0 * (mse_baseline / mse))
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn var_usual_examples() {
        let (pop, f) = home_ownership();
        // 29/440 * 0.525^2 * 0.963^2
        assert!((var_usual(&pop, f) - 0.0168467).abs() < 1e-6);
        assert_eq!(var_usual(&pop, 0.0), 0.0);
    }

    #[test]
    fn ratio_breakeven_and_inert_auxiliary() {
        let (mut pop, f) = home_ownership();
        pop.rho_pb = pop.cx / (2.0 * pop.cp);
        assert!((mse_ta(&pop, f) - var_usual(&pop, f)).abs() < 1e-15);

        let (mut pop, f) = home_ownership();
        pop.cx = 0.0;
        assert_eq!(mse_ta(&pop, f), var_usual(&pop, f));
        assert_eq!(bias_ta(&pop, f), 0.0);
    }

    #[test]
    fn ratio_pre_on_published_statistics() {
        let (pop, f) = home_ownership();
        let v = pre(var_usual(&pop, f), mse_ta(&pop, f)).unwrap();
        assert!((v - 189.2105).abs() < 1e-3, "{v}");
    }

    #[test]
    fn regression_examples() {
        let (pop, f) = home_ownership();
        let v = pre(var_usual(&pop, f), min_mse_tb(&pop, f)).unwrap();
        assert!((v - 511.79).abs() < 0.005, "{v}");

        let mut flat = pop;
        flat.rho_pb = 0.0;
        assert_eq!(min_mse_tb(&flat, f), var_usual(&flat, f));
        for r in [1.0, -1.0] {
            let mut perfect = pop;
            perfect.rho_pb = r;
            assert_eq!(min_mse_tb(&perfect, f), 0.0);
        }
        let mut degenerate = pop;
        degenerate.cx = 0.0;
        assert_eq!(tb_optimal_h1(&degenerate), Err(Error::DegenerateAuxiliary));
    }

    #[test]
    fn class_bias_tb_terms() {
        let (pop, f) = home_ownership();
        assert_eq!(class_bias_tb(&pop, f, 0.0, 0.0, 0.0), 0.0);
        assert!((class_bias_tb(&pop, f, 1.0, 0.0, 0.0) - f * pop.cx * pop.cx).abs() < 1e-16);
        let (h2, h3, h4) = (0.37, -1.2, 2.4);
        let p = pop.proportion;
        let direct = f * h3 * p * pop.rho_pb * pop.cp * pop.cx
            + f * h2 * pop.cx * pop.cx
            + f * h4 * p * p * pop.cp * pop.cp;
        assert!((class_bias_tb(&pop, f, h2, h3, h4) - direct).abs() < 1e-15);
    }

    #[test]
    fn class_bias_t2_terms() {
        let (pop, f) = home_ownership();
        assert_eq!(class_bias_t2(&pop, f, [0.0; 6]), 0.0);
        let only_h5 = class_bias_t2(&pop, f, [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((only_h5 - f * (pop.lambda04 - 1.0)).abs() < 1e-16);
        let h = [0.3, -0.7, 1.1, 2.0, -0.4, 0.9];
        let p = pop.proportion;
        let terms = [
            p * pop.cp * pop.cp,
            pop.cx * pop.cx,
            pop.lambda04 - 1.0,
            p * pop.rho_pb * pop.cp * pop.cx,
            pop.cx * pop.lambda03,
            p * pop.cp * pop.lambda12,
        ];
        let direct: f64 = f * h.iter().zip(terms).map(|(a, b)| a * b).sum::<f64>();
        assert!((class_bias_t2(&pop, f, h) - direct).abs() < 1e-15);
    }

    #[test]
    fn t1_examples() {
        let (mut pop, f) = home_ownership();
        let v = pre(var_usual(&pop, f), t1_min_mse(&pop, f).unwrap()).unwrap();
        assert!((v - 513.1324).abs() < 1e-3, "{v}");
        assert_eq!(t1_mse(&pop, f, 0.0, 0.0), var_usual(&pop, f));

        pop.lambda12 = 0.0;
        pop.lambda03 = 0.0;
        let (a, b) = t1_optimal(&pop).unwrap();
        assert!((a - pop.cp * pop.rho_pb / pop.cx).abs() < 1e-14);
        assert_eq!(b, 0.0);

        pop.rho_pb = 0.0;
        assert_eq!(t1_optimal(&pop).unwrap(), (0.0, 0.0));

        pop.lambda04 = 1.0;
        assert!(matches!(t1_optimal(&pop), Err(Error::DegenerateMoments(_))));
    }

    #[test]
    fn t1_stationary_on_published_statistics() {
        let (pop, f) = home_ownership();
        let (a, b) = t1_optimal(&pop).unwrap();
        let (ga, gb) = fd_gradient(|x, y| t1_mse(&pop, f, x, y), a, b, 1e-4);
        let curvature = var_usual(&pop, f);
        assert!(ga.abs() / curvature < 1e-8 && gb.abs() / curvature < 1e-8);
        let closed = t1_min_mse(&pop, f).unwrap();
        assert!((t1_mse(&pop, f, a, b) - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn t1_with_beta_fixed_reduces_to_regression() {
        let (pop, f) = home_ownership();
        // 1-d quadratic in alpha with beta = 0: minimise by golden-section search
        let (mut lo, mut hi) = (-20.0f64, 20.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if t1_mse(&pop, f, a, 0.0) < t1_mse(&pop, f, b, 0.0) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let best = t1_mse(&pop, f, 0.5 * (lo + hi), 0.0);
        let tb = min_mse_tb(&pop, f);
        assert!((best - tb).abs() <= 1e-10 * tb);
    }

    #[test]
    fn t1_bias_from_second_order_expansion() {
        // bias of p (1+e1)^-alpha (1+e3)^-beta, second-order terms only
        let (pop, f) = home_ownership();
        let (alpha, beta) = (0.7, -0.3);
        let e11 = f * pop.cx * pop.cx;
        let e33 = f * (pop.lambda04 - 1.0);
        let ep1 = f * pop.rho_pb * pop.cp * pop.cx;
        let ep3 = f * pop.cp * pop.lambda12;
        let e13 = f * pop.cx * pop.lambda03;
        let expected = pop.proportion
            * (alpha * (alpha + 1.0) / 2.0 * e11 + beta * (beta + 1.0) / 2.0 * e33
                - alpha * ep1
                - beta * ep3
                + alpha * beta * e13);
        assert!((t1_bias(&pop, f, alpha, beta) - expected).abs() < 1e-16);
        assert_eq!(t1_bias(&pop, 0.0, alpha, beta), 0.0);
    }

    #[test]
    fn t2_examples() {
        let (pop, f) = home_ownership();
        assert_eq!(t2_min_mse(&pop, f), t1_min_mse(&pop, f));
        let (h1, h2) = t2_optimal(&pop).unwrap();
        let closed = t2_min_mse(&pop, f).unwrap();
        assert!((t2_mse(&pop, f, h1, h2) - closed).abs() <= 1e-12 * closed);
        let (ga, gb) = fd_gradient(|x, y| t2_mse(&pop, f, x, y), h1, h2, 1e-4);
        assert!(ga.abs() < 1e-10 && gb.abs() < 1e-10);

        let mut inert = pop;
        inert.lambda03 = 0.0;
        inert.lambda12 = 0.0;
        let (h1, h2) = t2_optimal(&inert).unwrap();
        assert_eq!(h2, 0.0);
        assert!((h1 - tb_optimal_h1(&inert).unwrap()).abs() < 1e-14);
        let tb = min_mse_tb(&inert, f);
        assert!((t2_min_mse(&inert, f).unwrap() - tb).abs() <= 1e-15 * tb);
    }

    #[test]
    fn pre_examples() {
        assert_eq!(pre(0.0168, 0.0168).unwrap(), 100.0);
        assert!((pre(0.0168, 0.0033).unwrap() - 509.0909).abs() < 1e-3);
        assert_eq!(pre(1.0, 0.0), Err(Error::NonpositiveMse(0.0)));
        assert!(pre(1.0, -1.0).is_err());
    }

    #[test]
    fn census_collapses_everything() {
        let (pop, _) = home_ownership();
        assert_eq!(var_usual(&pop, 0.0), 0.0);
        assert_eq!(mse_ta(&pop, 0.0), 0.0);
        assert_eq!(bias_ta(&pop, 0.0), 0.0);
        assert_eq!(min_mse_tb(&pop, 0.0), 0.0);
        assert_eq!(t1_min_mse(&pop, 0.0).unwrap(), 0.0);
        assert_eq!(t2_mse(&pop, 0.0, 0.3, 0.1), 0.0);
    }

    proptest! {
        #[test]
        fn pre_identity_and_antitone(x in 1e-8f64..10.0, y in 1e-8f64..10.0) {
            prop_assert_eq!(pre(x, x).unwrap(), 100.0);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(pre(1.0, lo).unwrap() >= pre(1.0, hi).unwrap());
        }
    }
}
