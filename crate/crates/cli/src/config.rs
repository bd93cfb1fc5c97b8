//! Flat `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Omitted keys take the defaults of [`RunConfig::default`]. Every error
//! names the offending key and where it was set.

use std::fmt;

use impactlab::estimators::EstimatorMethod;
use impactlab::harness::{linear_grid, log_grid, ExperimentConfig, MarketConfig, PricingRule};
use impactlab::marketmaker::PriorSpec;
use impactlab::orderflow::{AfterMode, FlowModel, FundamentalSpec, MetaOrderSchedule};
use thiserror::Error;

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => write!(f, "--set"),
            Origin::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: expected key=value, got {text:?}")]
    Syntax { origin: Origin, text: String },
    #[error("{origin}: unknown key {key:?}")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: {key} expects {expected}, got {value:?}")]
    TypeMismatch {
        key: String,
        origin: Origin,
        expected: &'static str,
        value: String,
    },
    #[error("{origin}: {message}")]
    Constraint {
        key: String,
        origin: Origin,
        message: String,
    },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::TypeMismatch { key, .. }
            | ConfigError::Constraint { key, .. } => Some(key),
        }
    }
}

/// Recording grid written as `lo:hi:log` or `lo:hi:lin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub lo: usize,
    pub hi: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn points(&self, per_decade: usize) -> Vec<usize> {
        if self.log {
            log_grid(self.lo, self.hi, per_decade)
        } else {
            linear_grid(self.lo, self.hi)
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, if self.log { "log" } else { "lin" })
    }
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || format!("grid must look like lo:hi:log or lo:hi:lin, got {s:?}");
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: usize = parts[0].parse().map_err(|_| bad())?;
        let hi: usize = parts[1].parse().map_err(|_| bad())?;
        let log = match parts[2] {
            "log" => true,
            "lin" => false,
            _ => return Err(bad()),
        };
        if lo < 1 || hi < lo {
            return Err(format!("grid needs 1 <= lo <= hi, got {s:?}"));
        }
        Ok(Self { lo, hi, log })
    }
}

/// Every setting of a run. Fields mirror the config keys one to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Participation rate ν, or trade speed χ for volume flows.
    pub nu: f64,
    pub theta: f64,
    pub alpha_cal: f64,
    /// Meta-order sign `G` (written `Y` in some figure captions).
    pub direction: i8,
    /// Horizon `T`; `None` means `t_max`.
    pub horizon: Option<usize>,
    pub after_mode: AfterMode,
    pub flow: String,
    pub sigma_v: f64,
    pub alpha_stable: f64,
    pub tau_c: f64,
    pub eta: f64,
    pub prior: String,
    pub nu_bar: f64,
    pub k: f64,
    pub include_fundamental: bool,
    pub p_up: Option<f64>,
    pub t_max: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub grid: Option<GridSpec>,
    pub points_per_decade: usize,
    pub pricing: PricingRule,
    pub workers: usize,
    pub antithetic: bool,
    pub estimator: EstimatorMethod,
    pub n_bins: usize,
    pub fit_lo: Option<f64>,
    pub fit_hi: Option<f64>,
    pub expect_exponent: Option<f64>,
    /// Exponent tolerance; `None` uses the command's default.
    pub exponent_tol: Option<f64>,
    pub z_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            theta: 1.0,
            alpha_cal: 1.0,
            direction: 1,
            horizon: None,
            after_mode: AfterMode::Stop,
            flow: "unit".into(),
            sigma_v: 1.0,
            alpha_stable: 1.5,
            tau_c: 5.0,
            eta: 0.5,
            prior: "flat".into(),
            nu_bar: 0.2,
            k: 2.0,
            include_fundamental: false,
            p_up: None,
            t_max: 1000,
            n_paths: 10_000,
            seed: 42,
            grid: None,
            points_per_decade: 48,
            pricing: PricingRule::Exact,
            workers: 0,
            antithetic: false,
            estimator: EstimatorMethod::BayesExact,
            n_bins: 40,
            fit_lo: None,
            fit_hi: None,
            expect_exponent: None,
            exponent_tol: None,
            z_tol: 3.0,
        }
    }
}

/// All keys in serialization order.
pub const KEYS: &[&str] = &[
    "nu",
    "theta",
    "alpha_cal",
    "direction",
    "horizon",
    "after_mode",
    "flow",
    "sigma_v",
    "alpha_stable",
    "tau_c",
    "eta",
    "prior",
    "nu_bar",
    "k",
    "include_fundamental",
    "p_up",
    "t_max",
    "n_paths",
    "seed",
    "grid",
    "points_per_decade",
    "pricing",
    "workers",
    "antithetic",
    "estimator",
    "n_bins",
    "fit_lo",
    "fit_hi",
    "expect_exponent",
    "exponent_tol",
    "z_tol",
];

fn estimator_name(m: EstimatorMethod) -> &'static str {
    match m {
        EstimatorMethod::BayesFlat => "bayes_flat",
        EstimatorMethod::BayesCutoff => "bayes_cutoff",
        EstimatorMethod::BayesPowerLaw => "bayes_powerlaw",
        EstimatorMethod::BayesExact => "bayes_exact",
        EstimatorMethod::Mle => "mle",
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Canonical text for `key`.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "nu" => self.nu.to_string(),
            "theta" => self.theta.to_string(),
            "alpha_cal" => self.alpha_cal.to_string(),
            "direction" => self.direction.to_string(),
            "horizon" => opt(&self.horizon),
            "after_mode" => match self.after_mode {
                AfterMode::Stop => "stop".into(),
                AfterMode::Reverse => "reverse".into(),
            },
            "flow" => self.flow.clone(),
            "sigma_v" => self.sigma_v.to_string(),
            "alpha_stable" => self.alpha_stable.to_string(),
            "tau_c" => self.tau_c.to_string(),
            "eta" => self.eta.to_string(),
            "prior" => self.prior.clone(),
            "nu_bar" => self.nu_bar.to_string(),
            "k" => self.k.to_string(),
            "include_fundamental" => self.include_fundamental.to_string(),
            "p_up" => opt(&self.p_up),
            "t_max" => self.t_max.to_string(),
            "n_paths" => self.n_paths.to_string(),
            "seed" => self.seed.to_string(),
            "grid" => opt(&self.grid),
            "points_per_decade" => self.points_per_decade.to_string(),
            "pricing" => self.pricing.as_str().into(),
            "workers" => self.workers.to_string(),
            "antithetic" => self.antithetic.to_string(),
            "estimator" => estimator_name(self.estimator).into(),
            "n_bins" => self.n_bins.to_string(),
            "fit_lo" => opt(&self.fit_lo),
            "fit_hi" => opt(&self.fit_hi),
            "expect_exponent" => opt(&self.expect_exponent),
            "exponent_tol" => opt(&self.exponent_tol),
            "z_tol" => self.z_tol.to_string(),
            _ => return None,
        })
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let v = value.trim();
        let mismatch = |expected: &'static str| ConfigError::TypeMismatch {
            key: key.to_string(),
            origin,
            expected,
            value: v.to_string(),
        };
        let float = || v.parse::<f64>().map_err(|_| mismatch("a number"));
        let uint = || v.parse::<usize>().map_err(|_| mismatch("a non-negative integer"));
        let boolean = || v.parse::<bool>().map_err(|_| mismatch("true or false"));
        let optional = |s: &str| s.eq_ignore_ascii_case("none");
        match key {
            "nu" => self.nu = float()?,
            "theta" => self.theta = float()?,
            "alpha_cal" => self.alpha_cal = float()?,
            "direction" => {
                self.direction = match v {
                    "1" | "+1" => 1,
                    "-1" => -1,
                    _ => return Err(mismatch("+1 or -1")),
                }
            }
            "horizon" => self.horizon = if optional(v) { None } else { Some(uint()?) },
            "after_mode" => {
                self.after_mode = match v {
                    "stop" => AfterMode::Stop,
                    "reverse" => AfterMode::Reverse,
                    _ => return Err(mismatch("stop or reverse")),
                }
            }
            "flow" => match v {
                "unit" | "gaussian" | "levy" | "corr_exp" | "corr_power" => self.flow = v.to_string(),
                _ => return Err(mismatch("unit, gaussian, levy, corr_exp or corr_power")),
            },
            "sigma_v" => self.sigma_v = float()?,
            "alpha_stable" => self.alpha_stable = float()?,
            "tau_c" => self.tau_c = float()?,
            "eta" => self.eta = float()?,
            "prior" => match v {
                "flat" | "cutoff" | "powerlaw" => self.prior = v.to_string(),
                _ => return Err(mismatch("flat, cutoff or powerlaw")),
            },
            "nu_bar" => self.nu_bar = float()?,
            "k" => self.k = float()?,
            "include_fundamental" => self.include_fundamental = boolean()?,
            "p_up" => self.p_up = if optional(v) { None } else { Some(float()?) },
            "t_max" => self.t_max = uint()?,
            "n_paths" => self.n_paths = uint()?,
            "seed" => self.seed = v.parse().map_err(|_| mismatch("a 64-bit unsigned integer"))?,
            "grid" => {
                self.grid = if optional(v) {
                    None
                } else {
                    Some(v.parse().map_err(|_| mismatch("lo:hi:log or lo:hi:lin"))?)
                }
            }
            "points_per_decade" => self.points_per_decade = uint()?,
            "pricing" => {
                self.pricing = match v {
                    "exact" => PricingRule::Exact,
                    "asymptotic" => PricingRule::Asymptotic,
                    "known_nu" => PricingRule::KnownNu,
                    _ => return Err(mismatch("exact, asymptotic or known_nu")),
                }
            }
            "workers" => self.workers = uint()?,
            "antithetic" => self.antithetic = boolean()?,
            "estimator" => {
                self.estimator = match v {
                    "bayes_flat" => EstimatorMethod::BayesFlat,
                    "bayes_cutoff" => EstimatorMethod::BayesCutoff,
                    "bayes_powerlaw" => EstimatorMethod::BayesPowerLaw,
                    "bayes_exact" => EstimatorMethod::BayesExact,
                    "mle" => EstimatorMethod::Mle,
                    _ => return Err(mismatch("bayes_exact, bayes_flat, bayes_cutoff, bayes_powerlaw or mle")),
                }
            }
            "n_bins" => self.n_bins = uint()?,
            "fit_lo" => self.fit_lo = if optional(v) { None } else { Some(float()?) },
            "fit_hi" => self.fit_hi = if optional(v) { None } else { Some(float()?) },
            "expect_exponent" => self.expect_exponent = if optional(v) { None } else { Some(float()?) },
            "exponent_tol" => self.exponent_tol = if optional(v) { None } else { Some(float()?) },
            "z_tol" => self.z_tol = float()?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    origin,
                })
            }
        }
        Ok(())
    }

    /// One `key=value` line per key in canonical order.
    pub fn serialize(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn prior_spec(&self) -> PriorSpec {
        match self.prior.as_str() {
            "cutoff" => PriorSpec::Cutoff { nu_bar: self.nu_bar },
            "powerlaw" => PriorSpec::PowerLaw { k: self.k },
            _ => PriorSpec::Flat,
        }
    }

    pub fn flow_model(&self) -> FlowModel {
        match self.flow.as_str() {
            "gaussian" => FlowModel::GaussianVolume { sigma_v: self.sigma_v },
            "levy" => FlowModel::LevyVolume {
                alpha: self.alpha_stable,
                sigma_v: self.sigma_v,
            },
            "corr_exp" => FlowModel::CorrelatedExp {
                sigma_v: self.sigma_v,
                tau_c: self.tau_c,
            },
            "corr_power" => FlowModel::CorrelatedPower {
                sigma_v: self.sigma_v,
                eta: self.eta,
            },
            _ => FlowModel::UnitBinary,
        }
    }

    pub fn horizon_steps(&self) -> usize {
        self.horizon.unwrap_or(self.t_max)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.unwrap_or(GridSpec {
            lo: 1,
            hi: self.t_max,
            log: true,
        })
    }

    pub fn record_grid(&self) -> Vec<usize> {
        self.grid_spec().points(self.points_per_decade)
    }

    /// Checks cross-key constraints; `origins` tells where each key was set.
    pub fn validate(&self, origin_of: impl Fn(&str) -> Origin) -> Result<(), ConfigError> {
        let fail = |key: &str, message: String| ConfigError::Constraint {
            key: key.to_string(),
            origin: origin_of(key),
            message,
        };
        let unit = self.flow == "unit";
        if unit && !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(fail("nu", "nu must lie in (0,1)".into()));
        }
        if !unit && !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(fail("nu", "nu (trade speed) must be non-negative".into()));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(fail("theta", "theta must be positive".into()));
        }
        if !(self.alpha_cal > 0.0 && self.alpha_cal.is_finite()) {
            return Err(fail("alpha_cal", "alpha_cal must be positive".into()));
        }
        if self.t_max < 1 {
            return Err(fail("t_max", "t_max must be at least 1".into()));
        }
        if self.n_paths < 1 {
            return Err(fail("n_paths", "n_paths must be at least 1".into()));
        }
        if let Some(h) = self.horizon {
            if h < 1 {
                return Err(fail("horizon", "horizon must be at least 1".into()));
            }
        }
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            return Err(fail("sigma_v", "sigma_v must be positive".into()));
        }
        if !(self.alpha_stable > 0.0 && self.alpha_stable <= 2.0) {
            return Err(fail("alpha_stable", "alpha_stable must lie in (0,2]".into()));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(fail("tau_c", "tau_c must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(fail("eta", "eta must be positive".into()));
        }
        if !(self.nu_bar > 0.0 && self.nu_bar <= 1.0) {
            return Err(fail("nu_bar", "nu_bar must lie in (0,1]".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(fail("k", "k must be positive".into()));
        }
        if let Some(p) = self.p_up {
            if !(p > 0.0 && p < 1.0) {
                return Err(fail("p_up", "p_up must lie in (0,1)".into()));
            }
        }
        if let Some(g) = self.grid {
            if g.hi > self.t_max {
                return Err(fail(
                    "grid",
                    format!("grid end {} exceeds t_max = {}", g.hi, self.t_max),
                ));
            }
        }
        if self.points_per_decade < 1 || self.points_per_decade > 48 {
            return Err(fail("points_per_decade", "points_per_decade must lie in [1,48]".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(fail("antithetic", "antithetic runs need an even n_paths".into()));
        }
        if self.n_bins < 2 || !self.n_bins.is_multiple_of(2) {
            return Err(fail("n_bins", "n_bins must be even and at least 2".into()));
        }
        if self.pricing == PricingRule::KnownNu && !unit {
            return Err(fail("pricing", "known_nu pricing applies to unit flows only".into()));
        }
        if self.exponent_tol.is_some_and(|e| e.is_nan() || e < 0.0) {
            return Err(fail("exponent_tol", "exponent_tol must be non-negative".into()));
        }
        if self.z_tol.is_nan() || self.z_tol <= 0.0 {
            return Err(fail("z_tol", "z_tol must be positive".into()));
        }
        Ok(())
    }

    /// The harness configuration this run describes.
    pub fn experiment(&self) -> Result<ExperimentConfig, impactlab::Error> {
        let schedule = MetaOrderSchedule::new(self.direction, self.nu, self.horizon_steps(), self.after_mode)?;
        let market = MarketConfig {
            schedule,
            flow: self.flow_model(),
            prior: self.prior_spec(),
            fundamental: FundamentalSpec::new(self.theta, self.alpha_cal)?,
            include_fundamental: self.include_fundamental,
            p_up: self.p_up,
        };
        let mut cfg = ExperimentConfig::new(market, self.n_paths, self.t_max, self.seed);
        cfg.record_grid = self.record_grid();
        cfg.pricing_rule = self.pricing;
        cfg.workers = self.workers;
        cfg.antithetic = self.antithetic;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A config being assembled from text and overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    config: RunConfig,
    origins: Vec<(String, Origin)>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn assign(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        self.config.set(key, value, origin)?;
        self.origins.retain(|(k, _)| k != key);
        self.origins.push((key.to_string(), origin));
        Ok(())
    }

    /// Reads a config file body.
    pub fn text(mut self, text: &str) -> Result<Self, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    origin,
                    text: raw.to_string(),
                });
            };
            self.assign(key.trim(), value, origin)?;
        }
        Ok(self)
    }

    /// Applies one `key=value` override.
    pub fn override_pair(mut self, pair: &str) -> Result<Self, ConfigError> {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin: Origin::Override,
                text: pair.to_string(),
            });
        };
        self.assign(key.trim(), value, Origin::Override)?;
        Ok(self)
    }

    pub fn origin(&self, key: &str) -> Origin {
        self.origins
            .iter()
            .find(|(k, _)| k == key)
            .map_or(Origin::Default, |(_, o)| *o)
    }

    pub fn finish(self) -> Result<RunConfig, ConfigError> {
        self.config.validate(|k| self.origin(k))?;
        Ok(self.config)
    }
}

/// Parses and validates a config file body.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    ConfigBuilder::new().text(text)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_input() {
        let c = parse_config("nu=0.1\ntheta=1\nt_max=1000\nn_paths=100000\nprior=flat\nseed=42").unwrap();
        assert_eq!(c.nu, 0.1);
        assert_eq!(c.n_paths, 100_000);
        assert_eq!(c.seed, 42);
        assert_eq!(c.prior_spec(), PriorSpec::Flat);
        assert!(c.experiment().is_ok());
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse_config("theta=1\nnu=1.5").unwrap_err();
        assert_eq!(e.key(), Some("nu"));
        let msg = e.to_string();
        assert!(msg.contains("nu must lie in (0,1)") && msg.contains("line 2"), "{msg}");

        let e = parse_config("# header\nbogus=3").unwrap_err();
        assert!(matches!(
            e,
            ConfigError::UnknownKey {
                origin: Origin::Line(2),
                ..
            }
        ));
        let e = parse_config("n_paths=many").unwrap_err();
        assert!(matches!(e, ConfigError::TypeMismatch { .. }));
        assert!(e.to_string().contains("n_paths"));
        assert!(matches!(
            parse_config("just text").unwrap_err(),
            ConfigError::Syntax { .. }
        ));
    }

    #[test]
    fn cutoff_round_trip() {
        let c = parse_config("prior=cutoff\nnu_bar=0.2").unwrap();
        assert_eq!(c.prior_spec(), PriorSpec::Cutoff { nu_bar: 0.2 });
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn grid_spec() {
        let g: GridSpec = "1:1000:log".parse().unwrap();
        assert_eq!(g.to_string(), "1:1000:log");
        assert_eq!(g.points(48)[0], 1);
        assert!("1:10".parse::<GridSpec>().is_err());
        assert!("10:1:lin".parse::<GridSpec>().is_err());
        assert_eq!("2:5:lin".parse::<GridSpec>().unwrap().points(1), vec![2, 3, 4, 5]);
    }
}
