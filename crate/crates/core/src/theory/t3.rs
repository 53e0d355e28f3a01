use serde::{Deserialize, Serialize};

use super::{check_mse, SINGULAR_RTOL};
use crate::error::{Error, Result};
use crate::population::PopulationParams;

/// Moments of the two terms `R1 = (1+e_p)(1+gamma e1)^-g` and
/// `R2 = (1+e_p) exp(-delta e3 / (2 + e3))`:
/// `a = E R1^2`, `b = E R1`, `c = E R2^2`, `d = E R1 R2`, `e = E R2`.
///
/// The MSE of `m1 p R1' + m2 p R2'` is
/// `P^2 [1 + m1^2 a + m2^2 c + 2 m1 m2 d - 2 m1 b - 2 m2 e]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T3Constants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl T3Constants {
    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.d * self.d
    }

    fn check_determinant(&self) -> Result<f64> {
        let det = self.determinant();
        if det == 0.0 || det.abs() <= SINGULAR_RTOL * (self.a * self.c).abs() {
            return Err(Error::SingularSystem(det));
        }
        Ok(det)
    }
}

pub fn t3_constants(pop: &PopulationParams, f: f64, gamma: f64, g: f64, delta: f64) -> T3Constants {
    let (cp, cx) = (pop.cp, pop.cx);
    let rcc = pop.rho_pb * cp * cx;
    let kurt = pop.lambda04 - 1.0;
    let cp2 = cp * cp;
    let cx2 = cx * cx;

    let a = 1.0 + f * (cp2 - 4.0 * gamma * g * rcc + gamma * gamma * g * (2.0 * g + 1.0) * cx2);
    let b = 1.0 - gamma * g * f * rcc + g * (g + 1.0) / 2.0 * gamma * gamma * f * cx2;
    let c = 1.0
        + f * (cp2 - 2.0 * delta * cp * pop.lambda12
            + (delta * delta + delta * (delta + 2.0)) * kurt / 4.0);
    let d = 1.0
        + f * (cp2 - delta * cp * pop.lambda12 + delta * (delta + 2.0) / 8.0 * kurt
            - 2.0 * gamma * g * rcc
            + gamma * delta * g / 2.0 * cx * pop.lambda03
            + g * (g + 1.0) / 2.0 * gamma * gamma * cx2);
    // E[R2] from exp(-delta e3/2 + delta e3^2/4) to second order
    let e = 1.0 - delta / 2.0 * f * cp * pop.lambda12 + delta * (delta + 2.0) / 8.0 * f * kurt;

    T3Constants { a, b, c, d, e }
}

pub fn t3_optimal_m(k: &T3Constants) -> Result<(f64, f64)> {
    let det = k.check_determinant()?;
    Ok(((k.b * k.c - k.d * k.e) / det, (k.a * k.e - k.b * k.d) / det))
}

pub fn t3_mse(k: &T3Constants, pop: &PopulationParams, m1: f64, m2: f64) -> f64 {
    pop.proportion.powi(2)
        * (1.0 + m1 * m1 * k.a + m2 * m2 * k.c + 2.0 * m1 * m2 * k.d
            - 2.0 * m1 * k.b
            - 2.0 * m2 * k.e)
}

pub fn t3_bias(k: &T3Constants, pop: &PopulationParams, m1: f64, m2: f64) -> f64 {
    -pop.proportion * (1.0 - m1 * k.b - m2 * k.e)
}

fn explained_share(k: &T3Constants) -> Result<f64> {
    let det = k.check_determinant()?;
    if det < 0.0 {
        return Err(Error::SingularSystem(det));
    }
    Ok((k.b * k.b * k.c - 2.0 * k.b * k.d * k.e + k.a * k.e * k.e) / det)
}

/// `P^2 [1 - (b^2 c - 2 b d e + a e^2) / (a c - d^2)]`.
pub fn t3_min_mse(k: &T3Constants, pop: &PopulationParams) -> Result<f64> {
    let share = explained_share(k)?;
    check_mse("t3", pop.proportion.powi(2) * (1.0 - share), pop)
}

/// Bias at the optimal weights; equals `-min_mse / P`.
pub fn t3_bias_min(k: &T3Constants, pop: &PopulationParams) -> Result<f64> {
    let share = explained_share(k)?;
    Ok(-pop.proportion * (1.0 - share))
}
