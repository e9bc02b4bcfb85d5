//! Shared domain types: the instance description, payment vectors, per-round
//! records, and the agent's decision rule.

use serde::{Deserialize, Serialize};

use crate::environment::ContextSourceSpec;
use crate::linalg::{dot, norm};

/// Utilities closer than this are treated as tied by the agent.
///
/// Payments that exactly compensate a utility gap are computed as a
/// difference of two dot products, so the compensated utility can land one
/// ulp away from the utility it is meant to match.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Ground truth for one experiment: arms, contexts, noise, horizon and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n_arms: usize,
    pub dim: usize,
    pub horizon: usize,
    /// One attribute vector per arm. Empty for dataset-backed instances,
    /// whose rewards come from class labels instead.
    #[serde(default)]
    pub true_attrs: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_std: f64,
    pub context_source: ContextSourceSpec,
    #[serde(default)]
    pub init_explore_m: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// Payments (positive) or penalties (negative) displayed for every arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaymentVector(pub Vec<f64>);

impl PaymentVector {
    pub fn zeros(n_arms: usize) -> Self {
        Self(vec![0.0; n_arms])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&p| p == 0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for PaymentVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for PaymentVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Everything that happened in one platform–agent round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub context: Vec<f64>,
    pub payments: PaymentVector,
    pub chosen_arm: usize,
    pub displayed_estimates: Vec<Vec<f64>>,
    pub observed_reward: f64,
    pub true_mean_reward: f64,
    pub inst_regret: f64,
    /// Amount actually disbursed: the chosen arm's payment.
    pub payment_paid: f64,
    pub budget_remaining: Option<f64>,
    /// Round belongs to the forced initial-exploration phase; the arm was
    /// mandated by the platform rather than picked by the agent.
    pub forced: bool,
    /// Pre-payment choice of a myopic agent.
    pub greedy_arm: usize,
    /// Arm the policy tried to steer the agent towards, if any.
    pub target_arm: Option<usize>,
    /// Context the chosen arm's estimator absorbed (perturbed for the
    /// heterogeneity policy, otherwise equal to `context`).
    pub absorbed_context: Vec<f64>,
}

impl RoundRecord {
    /// Replays the agent's decision from the logged inputs.
    pub fn replay_choice(&self) -> usize {
        agent_choose(&self.displayed_estimates, &self.context, &self.payments)
    }
}

/// Design-matrix rows and responses collected for one arm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmHistory {
    pub arm: usize,
    pub contexts: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
}

impl ArmHistory {
    pub fn new(arm: usize) -> Self {
        Self {
            arm,
            ..Self::default()
        }
    }

    pub fn push(&mut self, context: Vec<f64>, response: f64) {
        self.contexts.push(context);
        self.responses.push(response);
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

/// The myopic agent: maximize `context·estimate + payment`.
///
/// Utilities within [`TIE_TOLERANCE`] of the best are tied; among tied arms
/// the larger payment wins, then the lower index.
pub fn agent_choose(estimates: &[Vec<f64>], context: &[f64], payments: &PaymentVector) -> usize {
    debug_assert_eq!(estimates.len(), payments.len());
    let utilities: Vec<f64> = estimates
        .iter()
        .zip(payments.as_slice())
        .map(|(est, p)| dot(context, est) + p)
        .collect();
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut choice = None::<usize>;
    for (arm, &u) in utilities.iter().enumerate() {
        if u < best - TIE_TOLERANCE {
            continue;
        }
        match choice {
            Some(c) if payments[arm] <= payments[c] => {}
            _ => choice = Some(arm),
        }
    }
    choice.unwrap_or(0)
}

/// Greedy pick on estimates alone: highest `context·estimate`, lowest index on ties.
pub fn greedy_choice(estimates: &[Vec<f64>], context: &[f64]) -> usize {
    argmax_first(estimates.iter().map(|e| dot(context, e)))
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// `max_j context·μ_j − context·μ_chosen`.
pub fn inst_regret(true_attrs: &[Vec<f64>], context: &[f64], chosen: usize) -> f64 {
    let rewards: Vec<f64> = true_attrs.iter().map(|mu| dot(context, mu)).collect();
    let best = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best - rewards[chosen]).max(0.0)
}

/// Returns `true` when every attribute vector lies in the closed unit ball.
pub fn attrs_in_unit_ball(true_attrs: &[Vec<f64>]) -> bool {
    true_attrs.iter().all(|mu| norm(mu) <= 1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn payment_can_flip_choice() {
        // context (1, 0): utilities 0.3 and 0.5
        let est = vec![vec![0.3, 0.0], vec![0.5, 0.0]];
        let ctx = [1.0, 0.0];
        assert_eq!(agent_choose(&est, &ctx, &PaymentVector(vec![0.3, 0.0])), 0);
        assert_eq!(agent_choose(&est, &ctx, &PaymentVector::zeros(2)), 1);
    }

    #[test]
    fn ties_go_to_lowest_index_then_payment() {
        let est = vec![vec![0.5], vec![0.5]];
        assert_eq!(agent_choose(&est, &[1.0], &PaymentVector::zeros(2)), 0);
        assert_eq!(agent_choose(&est, &[1.0], &PaymentVector(vec![0.0, 0.2])), 1);
        // exact compensation: 0.4 + 0.3 ties with 0.7, paid arm wins
        let est = vec![vec![0.7], vec![0.4]];
        let p = PaymentVector(vec![0.0, 0.7 - 0.4]);
        assert_eq!(agent_choose(&est, &[1.0], &p), 1);
    }

    #[test]
    fn regret_examples() {
        let attrs = vec![vec![0.8], vec![0.3]];
        assert_eq!(inst_regret(&attrs, &[1.0], 0), 0.0);
        assert!((inst_regret(&attrs, &[1.0], 1) - 0.5).abs() < 1e-15);
        let attrs = vec![vec![0.2], vec![0.9], vec![0.9]];
        assert_eq!(inst_regret(&attrs, &[1.0], 2), 0.0);
    }

    #[test]
    fn greedy_matches_zero_payment_agent() {
        let est = vec![vec![0.1, 0.2], vec![0.4, -0.1], vec![0.4, -0.1]];
        let ctx = [0.6, 0.8];
        assert_eq!(
            greedy_choice(&est, &ctx),
            agent_choose(&est, &ctx, &PaymentVector::zeros(3))
        );
    }

    fn estimates_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        (2usize..6, 1usize..5).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n),
                prop::collection::vec(-1.0f64..1.0, d),
                prop::collection::vec(-1.0f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn choice_invariant_under_constant_payment_shift(
            (est, ctx, pay) in estimates_strategy(),
            shift in -2.0f64..2.0,
        ) {
            let base = agent_choose(&est, &ctx, &PaymentVector(pay.clone()));
            let shifted: Vec<f64> = pay.iter().map(|p| p + shift).collect();
            // a shift can only matter when two utilities sit within rounding of each other
            let utils: Vec<f64> = est.iter().zip(&pay).map(|(e, p)| dot(&ctx, e) + p).collect();
            let mut sorted = utils.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            prop_assume!((sorted[0] - sorted[1]).abs() > 1e-9);
            prop_assert_eq!(base, agent_choose(&est, &ctx, &PaymentVector(shifted)));
        }

        #[test]
        fn regret_nonnegative_and_zero_at_best(
            (attrs, ctx, _p) in estimates_strategy(),
        ) {
            let best = greedy_choice(&attrs, &ctx);
            prop_assert_eq!(inst_regret(&attrs, &ctx, best), 0.0);
            for arm in 0..attrs.len() {
                prop_assert!(inst_regret(&attrs, &ctx, arm) >= 0.0);
            }
        }
    }
}
