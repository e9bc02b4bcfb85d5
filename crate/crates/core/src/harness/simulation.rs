//! The round loop of a single run.

use std::sync::Arc;

use thiserror::Error;

use crate::environment::{BanditDataset, EnvError, Environment};
use crate::metrics::RunTrace;
use crate::model::{agent_choose, greedy_choice, InstanceSpec, PaymentVector, RoundRecord};
use crate::policies::{build_policy, forced_arm, Policy, PolicyConfig};
use crate::seed::RunSeeds;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Environment(#[from] EnvError),
}

/// One policy facing one environment for `horizon` rounds.
///
/// Rounds `1..=m` are forced round-robin pulls with zero payments; from
/// round `m + 1` the agent picks freely given the policy's quote.
pub struct Simulation {
    env: Environment,
    policy: Box<dyn Policy>,
    config: PolicyConfig,
    seeds: RunSeeds,
    horizon: usize,
    init_explore_m: usize,
    forced_responses: Option<Vec<f64>>,
    t: usize,
}

impl Simulation {
    pub fn new(
        instance: &InstanceSpec,
        config: &PolicyConfig,
        dataset: Option<Arc<BanditDataset>>,
        seeds: RunSeeds,
    ) -> Result<Self, RunError> {
        let env = Environment::new(instance, dataset, seeds.environment)?;
        let m = config.init_explore_m(instance.init_explore_m);
        let policy = build_policy(
            config,
            env.n_arms(),
            env.dim(),
            instance.init_explore_m,
            seeds.policy,
        );
        Ok(Self {
            env,
            policy,
            config: config.clone(),
            seeds,
            horizon: instance.horizon,
            init_explore_m: m.min(instance.horizon),
            forced_responses: None,
            t: 0,
        })
    }

    /// Replaces the observed rewards of the forced rounds, in order. Used to
    /// script adversarial warm starts.
    pub fn with_forced_responses(mut self, responses: Vec<f64>) -> Self {
        self.forced_responses = Some(responses);
        self
    }

    pub fn policy(&self) -> &dyn Policy {
        self.policy.as_ref()
    }

    /// Plays the next round. Returns `None` once the horizon is reached.
    pub fn step(&mut self) -> Option<Result<RoundRecord, RunError>> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        Some(self.play_round())
    }

    fn play_round(&mut self) -> Result<RoundRecord, RunError> {
        let t = self.t;
        let n = self.env.n_arms();
        let arrival = self.env.next_context(t - 1)?;
        let context = &arrival.context;
        let estimates = self.policy.displayed_estimates().to_vec();
        let greedy = greedy_choice(&estimates, context);

        if t <= self.init_explore_m {
            let chosen = forced_arm(t, n);
            let mut outcome = self.env.realize(&arrival, chosen);
            if let Some(scripted) = self.forced_responses.as_ref().and_then(|r| r.get(t - 1)) {
                outcome.observed = *scripted;
            }
            self.policy.absorb_forced(context, chosen, outcome.observed);
            return Ok(RoundRecord {
                t,
                context: context.clone(),
                payments: PaymentVector::zeros(n),
                chosen_arm: chosen,
                displayed_estimates: estimates,
                observed_reward: outcome.observed,
                true_mean_reward: outcome.true_mean,
                inst_regret: outcome.regret,
                payment_paid: 0.0,
                budget_remaining: self.policy.budget_remaining(),
                forced: true,
                greedy_arm: greedy,
                target_arm: None,
                absorbed_context: context.clone(),
            });
        }

        let quote = self.policy.quote(t, context);
        let chosen = agent_choose(&estimates, context, &quote.payments);
        let outcome = self.env.realize(&arrival, chosen);
        let paid = quote.payments[chosen];
        let absorbed = self.policy.update(context, chosen, outcome.observed, paid);
        Ok(RoundRecord {
            t,
            context: context.clone(),
            payments: quote.payments,
            chosen_arm: chosen,
            displayed_estimates: estimates,
            observed_reward: outcome.observed,
            true_mean_reward: outcome.true_mean,
            inst_regret: outcome.regret,
            payment_paid: paid,
            budget_remaining: self.policy.budget_remaining(),
            forced: false,
            greedy_arm: greedy,
            target_arm: quote.target,
            absorbed_context: absorbed,
        })
    }

    /// Plays all remaining rounds.
    pub fn run(mut self, run: usize) -> Result<RunTrace, RunError> {
        let mut records = Vec::with_capacity(self.horizon);
        while let Some(rec) = self.step() {
            records.push(rec?);
        }
        Ok(RunTrace {
            records,
            policy: self.config,
            seed: self.seeds.policy,
            run,
        })
    }
}

/// Runs one policy once.
pub fn run_single(
    instance: &InstanceSpec,
    config: &PolicyConfig,
    dataset: Option<Arc<BanditDataset>>,
    seeds: RunSeeds,
) -> Result<RunTrace, RunError> {
    Simulation::new(instance, config, dataset, seeds)?.run(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::ContextSourceSpec;
    use crate::policies::PolicyKind;

    fn instance(m: usize) -> InstanceSpec {
        InstanceSpec {
            n_arms: 2,
            dim: 2,
            horizon: 30,
            true_attrs: vec![vec![0.6, 0.2], vec![-0.1, 0.7]],
            noise_std: 0.0,
            context_source: ContextSourceSpec::GaussianIid {
                mean: vec![0.3, 0.3],
                std: 0.4,
            },
            init_explore_m: m,
            master_seed: 1,
        }
    }

    #[test]
    fn forced_rounds_are_round_robin_and_free() {
        let tr = run_single(
            &instance(4),
            &PolicyConfig::new(PolicyKind::CbwHeterogeneity),
            None,
            RunSeeds::single(3),
        )
        .unwrap();
        let forced: Vec<usize> = tr
            .records
            .iter()
            .filter(|r| r.forced)
            .map(|r| r.chosen_arm)
            .collect();
        assert_eq!(forced, vec![0, 1, 0, 1]);
        assert!(tr.records[..4]
            .iter()
            .all(|r| r.payments.is_zero() && r.payment_paid == 0.0));
        assert!(tr.records[4..].iter().all(|r| !r.forced));
        assert!(tr.is_well_formed());
    }

    #[test]
    fn no_forced_rounds_when_m_is_zero() {
        let tr = run_single(
            &instance(0),
            &PolicyConfig::new(PolicyKind::NoPayments),
            None,
            RunSeeds::single(3),
        )
        .unwrap();
        assert!(tr.records.iter().all(|r| !r.forced));
    }

    #[test]
    fn round_robin_makes_ols_identifiable() {
        // after N·d forced rounds with independent contexts every arm is identified
        let inst = instance(4);
        let mut sim = Simulation::new(
            &inst,
            &PolicyConfig::new(PolicyKind::NoPayments),
            None,
            RunSeeds::single(8),
        )
        .unwrap();
        for _ in 0..4 {
            sim.step().unwrap().unwrap();
        }
        for (est, mu) in sim.policy().displayed_estimates().iter().zip(&inst.true_attrs) {
            for (a, b) in est.iter().zip(mu) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn agent_choices_replay() {
        for kind in PolicyKind::ALL {
            let cfg = PolicyConfig {
                budget: (kind == PolicyKind::CbChainedRestricted).then_some(1.0),
                ..PolicyConfig::new(kind)
            };
            let tr = run_single(&instance(4), &cfg, None, RunSeeds::single(5)).unwrap();
            for r in tr.records.iter().filter(|r| !r.forced) {
                assert_eq!(r.replay_choice(), r.chosen_arm, "{kind} round {}", r.t);
                assert_eq!(r.payment_paid, r.payments[r.chosen_arm]);
            }
        }
    }
}
