use crate::error::{Error, Result};

/// The market maker's prior `φ(v)` on the participation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// `φ = 1` on `[0, 1]`.
    Flat,
    /// `φ = 1/ν̄` on `[0, ν̄]`.
    Cutoff { nu_bar: f64 },
    /// `φ = k·v^{k−1}` on `[0, 1]`.
    PowerLaw { k: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Flat => Ok(()),
            PriorSpec::Cutoff { nu_bar } if nu_bar > 0.0 && nu_bar <= 1.0 => Ok(()),
            PriorSpec::Cutoff { nu_bar } => Err(Error::Config(format!("nu_bar must lie in (0, 1], got {nu_bar}"))),
            PriorSpec::PowerLaw { k } if k > 0.0 && k.is_finite() => Ok(()),
            PriorSpec::PowerLaw { k } => Err(Error::Config(format!("k must be positive, got {k}"))),
        }
    }

    /// Upper end of the support.
    pub fn support_max(&self) -> f64 {
        match *self {
            PriorSpec::Cutoff { nu_bar } => nu_bar,
            _ => 1.0,
        }
    }

    /// Normalised density at `v ∈ (0, support_max]`.
    pub fn density(&self, v: f64) -> f64 {
        if v < 0.0 || v > self.support_max() {
            return 0.0;
        }
        match *self {
            PriorSpec::Flat => 1.0,
            PriorSpec::Cutoff { nu_bar } => 1.0 / nu_bar,
            PriorSpec::PowerLaw { k } => k * v.powf(k - 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PriorSpec::Cutoff { nu_bar: 0.0 }.validate().is_err());
        assert!(PriorSpec::Cutoff { nu_bar: 1.5 }.validate().is_err());
        assert!(PriorSpec::PowerLaw { k: -1.0 }.validate().is_err());
        assert!(PriorSpec::PowerLaw { k: 0.5 }.validate().is_ok());
    }

    #[test]
    fn densities_integrate_to_one() {
        for prior in [
            PriorSpec::Flat,
            PriorSpec::Cutoff { nu_bar: 0.3 },
            PriorSpec::PowerLaw { k: 2.5 },
        ] {
            let c = prior.support_max();
            let n = 100_000;
            let h = c / n as f64;
            let s: f64 = (0..n).map(|i| prior.density((i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((s - 1.0).abs() < 1e-8, "{prior:?}: {s}");
        }
    }
}
