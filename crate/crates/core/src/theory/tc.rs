use serde::{Deserialize, Serialize};

use super::{check_mse, SINGULAR_RTOL};
use crate::error::{Error, Result};
use crate::population::PopulationParams;

/// Second-moment constants of `[q1 p + q2 (Xbar - xbar)] T(xbar)`, where the
/// transform `T` expands as `1 - B e1 + A e1^2`.
///
/// The MSE is the quadratic form
/// `P^2 + d1 q1^2 + 2 d2 q1 q2 + d3 q2^2 - 2 d4 q1 - 2 d5 q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcConstants {
    pub theta: f64,
    pub b_c: f64,
    pub a_c: f64,
    pub m: [f64; 5],
    pub delta: [f64; 5],
}

impl TcConstants {
    pub fn determinant(&self) -> f64 {
        let d = &self.delta;
        d[0] * d[2] - d[1] * d[1]
    }
}

pub fn tc_constants(
    pop: &PopulationParams,
    f: f64,
    a: f64,
    b: f64,
    alpha_c: f64,
    beta_c: f64,
) -> Result<TcConstants> {
    let shifted = a * pop.xbar + b;
    if !(shifted > 0.0) {
        return Err(Error::NonpositiveTransform(shifted));
    }
    let theta = a * pop.xbar / shifted;
    let b_c = theta * (alpha_c + beta_c / 2.0);
    let a_c = theta
        * theta
        * (alpha_c * (alpha_c + 1.0) / 2.0
            + alpha_c * beta_c / 2.0
            + beta_c * beta_c / 8.0
            + beta_c / 4.0);

    let p = pop.proportion;
    let xbar = pop.xbar;
    let (cp, cx) = (pop.cp, pop.cx);
    let cx2 = cx * cx;
    let rcc = pop.rho_pb * cp * cx;

    let m1 = p * p * f * (cp * cp + b_c * b_c * cx2 - 2.0 * b_c * rcc);
    let m2 = xbar * xbar * f * cx2;
    // the cross term enters E[p T] once, so a single B here
    let m3 = p * p * f * (a_c * cx2 - b_c * rcc);
    let m4 = p * xbar * f * (-b_c * cx2 + rcc);
    let m5 = xbar * p * f * (-b_c * cx2);

    let p2 = p * p;
    let delta = [p2 + m1 + 2.0 * m3, -m4 - m5, m2, p2 + m3, -m5];
    Ok(TcConstants {
        theta,
        b_c,
        a_c,
        m: [m1, m2, m3, m4, m5],
        delta,
    })
}

/// Stationary point of the `(q1, q2)` quadratic form.
pub fn tc_optimal_q(tc: &TcConstants) -> Result<(f64, f64)> {
    let [d1, d2, d3, d4, d5] = tc.delta;
    let det = tc.determinant();
    if det == 0.0 || det.abs() <= SINGULAR_RTOL * (d1 * d3).abs() {
        return Err(Error::SingularSystem(det));
    }
    Ok(((d3 * d4 - d2 * d5) / det, (d1 * d5 - d2 * d4) / det))
}

/// The `(q1, q2)` quadratic form at arbitrary weights.
pub fn tc_mse(tc: &TcConstants, pop: &PopulationParams, q1: f64, q2: f64) -> f64 {
    let [d1, d2, d3, d4, d5] = tc.delta;
    pop.proportion.powi(2) + d1 * q1 * q1 + 2.0 * d2 * q1 * q2 + d3 * q2 * q2
        - 2.0 * d4 * q1
        - 2.0 * d5 * q2
}

pub fn tc_min_mse(tc: &TcConstants, pop: &PopulationParams) -> Result<f64> {
    let [d1, d2, d3, d4, d5] = tc.delta;
    let det = tc.determinant();
    if det == 0.0 || det.abs() <= SINGULAR_RTOL * (d1 * d3).abs() {
        return Err(Error::SingularSystem(det));
    }
    let gain = (d1 * d5 * d5 + d3 * d4 * d4 - 2.0 * d2 * d4 * d5) / det;
    check_mse("tc", pop.proportion.powi(2) - gain, pop)
}

pub fn tc_bias(pop: &PopulationParams, f: f64, tc: &TcConstants, q1: f64, q2: f64) -> f64 {
    let p = pop.proportion;
    let cx2 = pop.cx * pop.cx;
    p * (q1 - 1.0)
        + f * ((q2 * pop.xbar * tc.b_c + q1 * p * tc.a_c) * cx2
            - q1 * p * tc.b_c * pop.rho_pb * pop.cp * pop.cx)
}
