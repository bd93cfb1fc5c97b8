//! Confluent hypergeometric function of the first kind.

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;
const MAX_TERMS: usize = 500;
/// Largest |x| accepted by [`kummer_1f1`].
pub const KUMMER_MAX_ARG: f64 = 50.0;

/// Kummer's function `₁F₁(a; b; x)`.
///
/// Negative arguments are mapped through `₁F₁(a,b,x) = eˣ ₁F₁(b−a,b,−x)` so
/// the series is always summed at a non-negative argument.
pub fn kummer_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::domain("kummer_1f1", "non-finite argument"));
    }
    if b <= 0.0 && b == b.round() {
        return Err(Error::domain(
            "kummer_1f1",
            format!("b = {b} is a non-positive integer"),
        ));
    }
    if x.abs() > KUMMER_MAX_ARG {
        return Err(Error::domain(
            "kummer_1f1",
            format!("|x| = {} exceeds {KUMMER_MAX_ARG}", x.abs()),
        ));
    }
    if x < 0.0 {
        return Ok(x.exp() * series(b - a, b, -x)?);
    }
    series(a, b, x)
}

fn series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * x / ((b + nf) * (nf + 1.0));
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Past the peak the terms shrink geometrically, so one small term suffices.
        if nf > x && term.abs() <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    if term.abs() <= TOL * sum.abs() {
        return Ok(sum);
    }
    Err(Error::NonConvergence {
        op: "kummer_1f1",
        detail: format!("a = {a}, b = {b}, x = {x} after {MAX_TERMS} terms"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::erf;

    #[test]
    fn value_at_zero_is_one() {
        for (a, b) in [(0.3, 1.5), (-2.0, 0.5), (7.0, 3.0)] {
            assert_eq!(kummer_1f1(a, b, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn exponential_identity() {
        let v = kummer_1f1(1.0, 1.0, 0.5).unwrap();
        assert!((v - 0.5f64.exp()).abs() < 1e-14);
        let v = kummer_1f1(1.0, 1.0, -3.0).unwrap();
        assert!((v / (-3.0f64).exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn error_function_identity() {
        let x: f64 = 0.7;
        let v = kummer_1f1(0.5, 1.5, -x * x).unwrap();
        let oracle = std::f64::consts::PI.sqrt() * erf(x) / (2.0 * x);
        assert!((v - oracle).abs() < 1e-13);
    }

    #[test]
    fn polynomial_case_terminates() {
        // 1F1(-2; 0.5; x) = 1 - 4x + 4x^2/3
        let x = 3.0;
        let v = kummer_1f1(-2.0, 0.5, x).unwrap();
        assert!((v - (1.0 - 4.0 * x + 4.0 * x * x / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(kummer_1f1(1.0, -2.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(kummer_1f1(1.0, 0.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(kummer_1f1(1.0, 1.5, 51.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn large_argument_within_budget() {
        // 1F1(1; 2; x) = (e^x - 1) / x
        let x = 50.0;
        let v = kummer_1f1(1.0, 2.0, x).unwrap();
        assert!((v / ((x.exp() - 1.0) / x) - 1.0).abs() < 1e-11);
    }
}
