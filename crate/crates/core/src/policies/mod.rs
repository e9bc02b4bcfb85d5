//! Platform strategies.
//!
//! Every strategy implements [`Policy`]: before the agent moves it quotes a
//! [`PaymentVector`] next to its displayed estimates, and afterwards it
//! absorbs the observed reward. A policy never sees ground truth; the shape of
//! the trait is what enforces that.

mod aligned;
mod chained;
mod heterogeneity;
mod passive;

pub use aligned::{linucb_choose, wrap_calc_payment, AlignedPayments};
pub use chained::{build_chain, chained_payment, Budget, ChainedPayment, ChainedPayments, ChainedSet};
pub use heterogeneity::{het_calc_payment, HeterogeneityPayments};
pub use passive::NoPayments;

use serde::{Deserialize, Serialize};

use crate::estimation::{EstimatorMode, EstimatorState, DEFAULT_DELTA, DEFAULT_RIDGE_LAMBDA};
use crate::model::PaymentVector;

pub const DEFAULT_SIGMA_PAY: f64 = 1.0;
pub const DEFAULT_LINUCB_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    NoPayments,
    #[serde(alias = "cbw_heterogeniety")]
    CbwHeterogeneity,
    CbwPayments,
    CbChainedUnrestricted,
    CbChainedRestricted,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::NoPayments,
        PolicyKind::CbwHeterogeneity,
        PolicyKind::CbwPayments,
        PolicyKind::CbChainedUnrestricted,
        PolicyKind::CbChainedRestricted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::NoPayments => "no_payments",
            Self::CbwHeterogeneity => "cbw_heterogeneity",
            Self::CbwPayments => "cbw_payments",
            Self::CbChainedUnrestricted => "cb_chained_unrestricted",
            Self::CbChainedRestricted => "cb_chained_restricted",
        }
    }

    pub fn default_estimator(self) -> EstimatorMode {
        match self {
            Self::NoPayments | Self::CbwHeterogeneity => EstimatorMode::Ols,
            Self::CbwPayments | Self::CbChainedUnrestricted | Self::CbChainedRestricted => {
                EstimatorMode::Ridge
            }
        }
    }

    /// Kinds whose payment rule needs ridge confidence widths.
    pub fn requires_ridge(self) -> bool {
        matches!(
            self,
            Self::CbwPayments | Self::CbChainedUnrestricted | Self::CbChainedRestricted
        )
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Strategy selection and tuning. Unset knobs fall back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Output name; defaults to the kind's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_pay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linucb_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Overrides the instance's initial-exploration length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_explore_m: Option<usize>,
    /// Overrides the kind's default estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorMode>,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            label: None,
            sigma_pay: None,
            ridge_lambda: None,
            delta: None,
            linucb_alpha: None,
            budget: None,
            init_explore_m: None,
            estimator: None,
        }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma_pay = Some(sigma);
        self
    }

    pub fn with_estimator(mut self, mode: EstimatorMode) -> Self {
        self.estimator = Some(mode);
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.name())
    }

    pub fn sigma_pay(&self) -> f64 {
        self.sigma_pay.unwrap_or(DEFAULT_SIGMA_PAY)
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda.unwrap_or(DEFAULT_RIDGE_LAMBDA)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn linucb_alpha(&self) -> f64 {
        self.linucb_alpha.unwrap_or(DEFAULT_LINUCB_ALPHA)
    }

    pub fn estimator(&self) -> EstimatorMode {
        self.estimator.unwrap_or(self.kind.default_estimator())
    }

    pub fn init_explore_m(&self, instance_default: usize) -> usize {
        self.init_explore_m.unwrap_or(instance_default)
    }
}

/// What a policy shows the agent besides its estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    pub payments: PaymentVector,
    /// Arm the payments are meant to steer the agent to.
    pub target: Option<usize>,
}

impl Quote {
    pub fn none(n_arms: usize) -> Self {
        Self {
            payments: PaymentVector::zeros(n_arms),
            target: None,
        }
    }
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn n_arms(&self) -> usize;

    /// Attribute estimates displayed to the next agent.
    fn displayed_estimates(&self) -> &[Vec<f64>];

    /// Payment vector for 1-based round `t`. The context is that of the
    /// arriving agent; strategies that do not need it ignore it.
    fn quote(&mut self, t: usize, context: &[f64]) -> Quote;

    /// Absorbs the outcome of the round just quoted. `payment` is the amount
    /// disbursed to the agent. Returns the context the chosen arm's estimator
    /// absorbed.
    fn update(&mut self, context: &[f64], chosen: usize, observed: f64, payment: f64) -> Vec<f64>;

    /// Absorbs a mandated pull from the initial exploration phase.
    fn absorb_forced(&mut self, context: &[f64], arm: usize, observed: f64);

    fn budget_remaining(&self) -> Option<f64> {
        None
    }
}

/// Arm pulled in forced round `t` (1-based): round-robin.
pub fn forced_arm(t: usize, n_arms: usize) -> usize {
    (t - 1) % n_arms
}

/// Builds the policy described by `config`.
pub fn build_policy(
    config: &PolicyConfig,
    n_arms: usize,
    dim: usize,
    instance_m: usize,
    seed: u64,
) -> Box<dyn Policy> {
    let bank = EstimatorBank::new(n_arms, dim, config.estimator(), config.ridge_lambda());
    let rng = crate::seed::stream_rng(seed, crate::seed::Stream::Policy);
    match config.kind {
        PolicyKind::NoPayments => Box::new(NoPayments::new(bank)),
        PolicyKind::CbwHeterogeneity => Box::new(HeterogeneityPayments::new(bank, config.sigma_pay(), rng)),
        PolicyKind::CbwPayments => Box::new(AlignedPayments::new(bank, config.linucb_alpha())),
        PolicyKind::CbChainedUnrestricted => Box::new(ChainedPayments::new(
            bank,
            config.delta(),
            config.init_explore_m(instance_m),
            None,
            rng,
        )),
        PolicyKind::CbChainedRestricted => Box::new(ChainedPayments::new(
            bank,
            config.delta(),
            config.init_explore_m(instance_m),
            Some(Budget::new(config.budget.unwrap_or(0.0))),
            rng,
        )),
    }
}

/// One estimator per arm plus the cached displayed estimates.
#[derive(Debug, Clone)]
pub struct EstimatorBank {
    states: Vec<EstimatorState>,
    displayed: Vec<Vec<f64>>,
}

impl EstimatorBank {
    pub fn new(n_arms: usize, dim: usize, mode: EstimatorMode, lambda: f64) -> Self {
        let states: Vec<EstimatorState> = (0..n_arms)
            .map(|arm| match mode {
                EstimatorMode::Ols => EstimatorState::ols(arm, dim),
                EstimatorMode::Ridge => EstimatorState::ridge(arm, dim, lambda),
            })
            .collect();
        let displayed = states.iter().map(EstimatorState::estimate_or_zero).collect();
        Self { states, displayed }
    }

    pub fn n_arms(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[EstimatorState] {
        &self.states
    }

    pub fn displayed(&self) -> &[Vec<f64>] {
        &self.displayed
    }

    pub fn absorb(&mut self, arm: usize, context: &[f64], response: f64) {
        self.states[arm].absorb(context, response);
        self.displayed[arm] = self.states[arm].estimate_or_zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_forced_pulls() {
        let arms: Vec<usize> = (1..=4).map(|t| forced_arm(t, 2)).collect();
        assert_eq!(arms, vec![0, 1, 0, 1]);
    }

    #[test]
    fn config_defaults() {
        let c = PolicyConfig::new(PolicyKind::CbChainedRestricted);
        assert_eq!(c.delta(), 0.1);
        assert_eq!(c.ridge_lambda(), 1.0);
        assert_eq!(c.sigma_pay(), 1.0);
        assert_eq!(c.linucb_alpha(), 1.0);
        assert_eq!(c.estimator(), EstimatorMode::Ridge);
        assert_eq!(c.init_explore_m(7), 7);
        assert_eq!(c.label(), "cb_chained_restricted");
        assert_eq!(
            PolicyConfig::new(PolicyKind::NoPayments).estimator(),
            EstimatorMode::Ols
        );
    }

    #[test]
    fn kind_names_round_trip_through_json() {
        for kind in PolicyKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
            assert_eq!(serde_json::from_str::<PolicyKind>(&json).unwrap(), kind);
        }
        let legacy: PolicyKind = serde_json::from_str("\"cbw_heterogeniety\"").unwrap();
        assert_eq!(legacy, PolicyKind::CbwHeterogeneity);
    }

    #[test]
    fn bank_falls_back_to_zero_until_identifiable() {
        let mut bank = EstimatorBank::new(2, 2, EstimatorMode::Ols, 0.0);
        bank.absorb(0, &[1.0, 0.0], 0.5);
        assert_eq!(bank.displayed()[0], vec![0.0, 0.0]);
        bank.absorb(0, &[0.0, 1.0], 0.25);
        assert_eq!(bank.displayed()[0], vec![0.5, 0.25]);
        assert_eq!(bank.displayed()[1], vec![0.0, 0.0]);
    }
}
