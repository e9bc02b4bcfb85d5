use super::{EstimatorBank, Policy, PolicyKind, Quote};

/// The platform never pays; agents act on the displayed estimates alone.
#[derive(Debug, Clone)]
pub struct NoPayments {
    bank: EstimatorBank,
}

impl NoPayments {
    pub fn new(bank: EstimatorBank) -> Self {
        Self { bank }
    }
}

impl Policy for NoPayments {
    fn kind(&self) -> PolicyKind {
        PolicyKind::NoPayments
    }

    fn n_arms(&self) -> usize {
        self.bank.n_arms()
    }

    fn displayed_estimates(&self) -> &[Vec<f64>] {
        self.bank.displayed()
    }

    fn quote(&mut self, _t: usize, _context: &[f64]) -> Quote {
        Quote::none(self.bank.n_arms())
    }

    fn update(&mut self, context: &[f64], chosen: usize, observed: f64, _payment: f64) -> Vec<f64> {
        self.bank.absorb(chosen, context, observed);
        context.to_vec()
    }

    fn absorb_forced(&mut self, context: &[f64], arm: usize, observed: f64) {
        self.bank.absorb(arm, context, observed);
    }
}
