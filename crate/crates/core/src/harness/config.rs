//! Experiment configuration.

use crate::error::{Error, Result};
use crate::marketmaker::PriorSpec;
use crate::orderflow::{AfterMode, FlowModel, FundamentalSpec, MetaOrderSchedule};

/// Which pricing rule the market maker applies.
///
/// For unit flows `Exact` integrates the posterior over the prior,
/// `Asymptotic` uses the scaling limit in `ξ` and `KnownNu` the
/// full-information rule. Volume flows have a single rule per flow model,
/// used for both `Exact` and `Asymptotic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingRule {
    Exact,
    Asymptotic,
    KnownNu,
}

impl PricingRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            PricingRule::Exact => "exact",
            PricingRule::Asymptotic => "asymptotic",
            PricingRule::KnownNu => "known_nu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    pub schedule: MetaOrderSchedule,
    pub flow: FlowModel,
    pub prior: PriorSpec,
    pub fundamental: FundamentalSpec,
    /// Add `F_t` to the recorded price change.
    pub include_fundamental: bool,
    /// Draw the meta-order sign per path with `P(G = +1) = p_up` instead of
    /// using `schedule.direction`.
    pub p_up: Option<f64>,
}

impl MarketConfig {
    /// Unit flow, flat prior, `θ = 1`, `α = 1`, stop mode.
    pub fn unit(nu: f64, horizon: usize) -> Result<Self> {
        Ok(Self {
            schedule: MetaOrderSchedule::new(1, nu, horizon, AfterMode::Stop)?,
            flow: FlowModel::UnitBinary,
            prior: PriorSpec::Flat,
            fundamental: FundamentalSpec::new(1.0, 1.0)?,
            include_fundamental: false,
            p_up: None,
        })
    }

    pub fn theta(&self) -> f64 {
        self.fundamental.theta
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.flow.validate()?;
        self.prior.validate()?;
        FundamentalSpec::new(self.fundamental.theta, self.fundamental.alpha_cal)?;
        if self.flow == FlowModel::UnitBinary && self.schedule.participation >= 1.0 {
            return Err(Error::Config(format!(
                "nu must lie in (0,1) for unit flows, got {}",
                self.schedule.participation
            )));
        }
        if let Some(p) = self.p_up {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("p_up must lie in (0,1), got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub market: MarketConfig,
    pub n_paths: usize,
    pub t_max: usize,
    /// Recording times, strictly increasing within `[1, t_max]`.
    pub record_grid: Vec<usize>,
    pub master_seed: u64,
    pub pricing_rule: PricingRule,
    /// Worker threads; 0 lets the pool choose.
    pub workers: usize,
    /// Run paths in antithetic pairs that share draws but mirror the noise.
    pub antithetic: bool,
}

impl ExperimentConfig {
    /// Config recording on the default log grid up to `t_max`.
    pub fn new(market: MarketConfig, n_paths: usize, t_max: usize, master_seed: u64) -> Self {
        Self {
            market,
            n_paths,
            t_max,
            record_grid: log_grid(1, t_max, MAX_POINTS_PER_DECADE),
            master_seed,
            pricing_rule: PricingRule::Exact,
            workers: 0,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.n_paths < 1 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if self.t_max < 1 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if self.record_grid.is_empty() {
            return Err(Error::Config("record_grid must not be empty".into()));
        }
        if self.record_grid[0] < 1 || self.record_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("record_grid must be strictly increasing from 1".into()));
        }
        if *self.record_grid.last().unwrap() > self.t_max {
            return Err(Error::Config("record_grid must lie within [1, t_max]".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::Config("antithetic runs need an even n_paths".into()));
        }
        if self.pricing_rule == PricingRule::KnownNu && self.market.flow != FlowModel::UnitBinary {
            return Err(Error::Config("known_nu pricing applies to unit flows only".into()));
        }
        Ok(())
    }
}

/// Grid density cap for CSV output.
pub const MAX_POINTS_PER_DECADE: usize = 48;

/// Distinct integers spaced logarithmically on `[lo, hi]` with at most
/// `per_decade` points per decade; both ends are included.
pub fn log_grid(lo: usize, hi: usize, per_decade: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if hi <= lo || per_decade == 0 {
        return vec![lo.min(hi.max(1))];
    }
    let decades = (hi as f64 / lo as f64).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<usize> = (0..=n)
        .map(|i| (lo as f64 * 10f64.powf(decades * i as f64 / n as f64)).round() as usize)
        .map(|t| t.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Every integer in `[lo, hi]`.
pub fn linear_grid(lo: usize, hi: usize) -> Vec<usize> {
    (lo.max(1)..=hi).collect()
}
