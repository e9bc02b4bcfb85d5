use super::{EstimatorBank, Policy, PolicyKind, Quote};
use crate::estimation::EstimatorState;
use crate::linalg::dot;
use crate::model::{argmax_first, greedy_choice, PaymentVector};

/// Disjoint LinUCB: `argmax_i θ·μ̂_i + α‖θ‖_{(ΘᵢᵀΘᵢ+λI)⁻¹}`, lowest index on ties.
pub fn linucb_choose(states: &[EstimatorState], context: &[f64], alpha: f64) -> usize {
    argmax_first(states.iter().map(|s| {
        let bonus = if alpha > 0.0 {
            s.width_norm(context).unwrap_or(f64::INFINITY)
        } else {
            0.0
        };
        dot(context, &s.estimate_or_zero()) + alpha * bonus
    }))
}

/// Pays the base algorithm's arm exactly the utility gap to the greedy arm.
pub fn wrap_calc_payment(
    estimates: &[Vec<f64>],
    context: &[f64],
    base_choice: usize,
    greedy_choice: usize,
) -> PaymentVector {
    let mut p = PaymentVector::zeros(estimates.len());
    if base_choice != greedy_choice {
        let gap = dot(context, &estimates[greedy_choice]) - dot(context, &estimates[base_choice]);
        p[base_choice] = gap.max(0.0);
    }
    p
}

/// Buys whatever arm LinUCB would have pulled.
#[derive(Debug, Clone)]
pub struct AlignedPayments {
    bank: EstimatorBank,
    alpha: f64,
}

impl AlignedPayments {
    pub fn new(bank: EstimatorBank, alpha: f64) -> Self {
        Self { bank, alpha }
    }
}

impl Policy for AlignedPayments {
    fn kind(&self) -> PolicyKind {
        PolicyKind::CbwPayments
    }

    fn n_arms(&self) -> usize {
        self.bank.n_arms()
    }

    fn displayed_estimates(&self) -> &[Vec<f64>] {
        self.bank.displayed()
    }

    fn quote(&mut self, _t: usize, context: &[f64]) -> Quote {
        let greedy = greedy_choice(self.bank.displayed(), context);
        let base = linucb_choose(self.bank.states(), context, self.alpha);
        Quote {
            payments: wrap_calc_payment(self.bank.displayed(), context, base, greedy),
            target: Some(base),
        }
    }

    fn update(&mut self, context: &[f64], chosen: usize, observed: f64, _payment: f64) -> Vec<f64> {
        self.bank.absorb(chosen, context, observed);
        context.to_vec()
    }

    fn absorb_forced(&mut self, context: &[f64], arm: usize, observed: f64) {
        self.bank.absorb(arm, context, observed);
    }
}
