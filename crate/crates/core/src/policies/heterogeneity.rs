use rand::Rng;
use rand_distr::StandardNormal;

use super::{EstimatorBank, Policy, PolicyKind, Quote};
use crate::linalg::dot;
use crate::model::PaymentVector;
use crate::seed::StreamRng;

/// Draws `ζ ~ N(0, σ²I)` and prices every arm at `ζ·μ̂_i`.
///
/// The agent then maximizes `(θ + ζ)·μ̂_i`, so the payments act as a random
/// perturbation of the context. The context itself is not needed.
pub fn het_calc_payment(estimates: &[Vec<f64>], rng: &mut impl Rng, sigma: f64) -> (PaymentVector, Vec<f64>) {
    let dim = estimates.first().map_or(0, Vec::len);
    let zeta: Vec<f64> = (0..dim)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sigma * z
        })
        .collect();
    let payments = estimates.iter().map(|mu| dot(&zeta, mu)).collect();
    (PaymentVector(payments), zeta)
}

/// Payments that emulate perturbed contexts, with OLS on the perturbed
/// history.
#[derive(Debug, Clone)]
pub struct HeterogeneityPayments {
    bank: EstimatorBank,
    sigma: f64,
    rng: StreamRng,
    pending_zeta: Option<Vec<f64>>,
}

impl HeterogeneityPayments {
    pub fn new(bank: EstimatorBank, sigma: f64, rng: StreamRng) -> Self {
        Self {
            bank,
            sigma,
            rng,
            pending_zeta: None,
        }
    }

    pub fn estimator_count(&self, arm: usize) -> usize {
        self.bank.states()[arm].count
    }
}

impl Policy for HeterogeneityPayments {
    fn kind(&self) -> PolicyKind {
        PolicyKind::CbwHeterogeneity
    }

    fn n_arms(&self) -> usize {
        self.bank.n_arms()
    }

    fn displayed_estimates(&self) -> &[Vec<f64>] {
        self.bank.displayed()
    }

    fn quote(&mut self, _t: usize, _context: &[f64]) -> Quote {
        let (payments, zeta) = het_calc_payment(self.bank.displayed(), &mut self.rng, self.sigma);
        self.pending_zeta = Some(zeta);
        Quote {
            payments,
            target: None,
        }
    }

    /// Appends `(θ + ζ, y + p_chosen)` to the chosen arm's history.
    fn update(&mut self, context: &[f64], chosen: usize, observed: f64, payment: f64) -> Vec<f64> {
        let zeta = self
            .pending_zeta
            .take()
            .expect("update called without a preceding quote");
        let perturbed: Vec<f64> = context.iter().zip(&zeta).map(|(x, z)| x + z).collect();
        self.bank.absorb(chosen, &perturbed, observed + payment);
        perturbed
    }

    fn absorb_forced(&mut self, context: &[f64], arm: usize, observed: f64) {
        self.bank.absorb(arm, context, observed);
    }
}
