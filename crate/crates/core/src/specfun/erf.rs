//! Error-function family.
//!
//! `erf`/`erfc` delegate to `libm`; the scaled and imaginary variants are
//! built on top with series or asymptotic expansions where the naive
//! formula would overflow or cancel.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Largest |x| accepted by [`erfi`].
pub const ERFI_MAX_ARG: f64 = 30.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 12.0 {
        if x < -26.0 {
            return f64::INFINITY;
        }
        return (x * x).exp() * erfc(x);
    }
    // Asymptotic series; at x >= 12 the smallest term is far below 1e-16.
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..12 {
        term *= -((2 * n - 1) as f64) * inv2x2;
        sum += term;
    }
    sum / (x * PI.sqrt())
}

/// `ln erfc(x)` without underflow for large positive x.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 1.0 {
        erfc(x).ln()
    } else {
        erfcx(x).ln() - x * x
    }
}

/// Imaginary error function `erfi(x) = -i·erf(ix)`.
///
/// The Taylor series has only positive terms, so summing it is stable for
/// every admissible argument.
pub fn erfi(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > ERFI_MAX_ARG {
        return Err(Error::Overflow {
            op: "erfi",
            detail: format!("|x| = {} exceeds {ERFI_MAX_ARG}", x.abs()),
        });
    }
    let x2 = x * x;
    // term_n = x^(2n+1) / n!, accumulated as term_n / (2n+1)
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if !sum.is_finite() {
            return Err(Error::Overflow {
                op: "erfi",
                detail: format!("erfi({x}) exceeds f64 range"),
            });
        }
        if (n as f64) > x2 && add.abs() <= 1e-17 * sum.abs() {
            break;
        }
        if n > 20_000 {
            return Err(Error::NonConvergence {
                op: "erfi",
                detail: format!("series at x = {x}"),
            });
        }
    }
    Ok(FRAC_2_SQRT_PI * sum)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `Γ(a) / Γ(b)` evaluated through log-gamma for positive arguments.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        (ln_gamma(a) - ln_gamma(b)).exp()
    } else {
        gamma(a) / gamma(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn erf_by_quadrature(x: f64) -> f64 {
        // Composite Simpson on 2/sqrt(pi) e^{-u^2}
        let n = 20_000;
        let h = x / n as f64;
        let f = |u: f64| (-u * u).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        FRAC_2_SQRT_PI * s * h / 3.0
    }

    #[test]
    fn erf_reference_points() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf(1.0) - erf_by_quadrature(1.0)).abs() < 1e-13);
        for x in [0.3, 1.7] {
            assert_eq!(erf(-x), -erf(x));
        }
    }

    #[test]
    fn erfi_reference_points() {
        assert_eq!(erfi(0.0).unwrap(), 0.0);
        assert!((erfi(1.0).unwrap() - 1.650_425_758_797_542_8).abs() < 1e-14);
        let two_term = FRAC_2_SQRT_PI * (0.1 + 0.001 / 3.0);
        assert!((erfi(0.1).unwrap() / two_term - 1.0).abs() < 1e-5);
        assert_eq!(erfi(-1.3).unwrap(), -erfi(1.3).unwrap());
    }

    #[test]
    fn erfi_rejects_large_arguments() {
        assert!(matches!(erfi(30.5), Err(Error::Overflow { .. })));
        assert!(matches!(erfi(27.0), Err(Error::Overflow { .. })));
        assert!(erfi(20.0).unwrap().is_finite());
    }

    #[test]
    fn erfcx_is_continuous_across_branches() {
        let below = (144.0f64).exp() * erfc(12.0);
        assert!((erfcx(12.0) / below - 1.0).abs() < 1e-12);
        // leading asymptote
        assert!((erfcx(1e4) * 1e4 * PI.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ln_erfc_large_argument() {
        assert!((ln_erfc(0.5) - erfc(0.5).ln()).abs() < 1e-15);
        let x = 40.0;
        let u = 1.0 / (2.0 * x * x);
        let approx = -x * x - (x * PI.sqrt()).ln() + (1.0 - u + 3.0 * u * u).ln();
        assert!((ln_erfc(x) - approx).abs() < 1e-8);
    }

    #[test]
    fn gamma_ratio_half_integers() {
        assert!((gamma_ratio(1.5, 1.0) - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((gamma_ratio(150.5, 150.0) - 150f64.sqrt()).abs() / 150f64.sqrt() < 1e-3);
    }
}
