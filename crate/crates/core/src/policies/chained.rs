use std::collections::BTreeSet;

use rand::Rng;

use super::{EstimatorBank, Policy, PolicyKind, Quote};
use crate::estimation::ConfidenceWidth;
use crate::linalg::dot;
use crate::model::{argmax_first, PaymentVector};
use crate::seed::StreamRng;

/// Arms reachable from `anchor` through overlapping confidence intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainedSet {
    pub anchor: usize,
    pub members: BTreeSet<usize>,
}

/// Builds the chained set of `anchor`.
///
/// Arms `i` and `j` are linked when `[e_i ± w_i]` and `[e_j ± w_j]` intersect;
/// the set is the connected component of the anchor under that relation.
pub fn build_chain(widths: &[ConfidenceWidth], point_estimates: &[f64], anchor: usize) -> ChainedSet {
    assert_eq!(widths.len(), point_estimates.len());
    let n = widths.len();
    let linked = |i: usize, j: usize| {
        (point_estimates[i] - point_estimates[j]).abs() <= widths[i].width + widths[j].width
    };
    let mut members = BTreeSet::from([anchor]);
    let mut frontier = vec![anchor];
    while let Some(i) = frontier.pop() {
        for j in 0..n {
            if !members.contains(&j) && linked(i, j) {
                members.insert(j);
                frontier.push(j);
            }
        }
    }
    ChainedSet { anchor, members }
}

/// Payment budget. Tracks the cumulative amount committed so that the total
/// never exceeds the initial budget, even under floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    initial: f64,
    spent: f64,
}

impl Budget {
    pub fn new(initial: f64) -> Self {
        Self {
            initial: initial.max(0.0),
            spent: 0.0,
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn remaining(&self) -> f64 {
        (self.initial - self.spent).max(0.0)
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() <= 0.0
    }

    /// Commits `min(amount, remaining)` and returns it.
    pub fn charge(&mut self, amount: f64) -> f64 {
        let mut p = amount.min(self.remaining()).max(0.0);
        while p > 0.0 && self.spent + p > self.initial {
            p = p.next_down();
        }
        self.spent += p;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainedPayment {
    pub payments: PaymentVector,
    /// Arm drawn from the chained set; `None` when the budget was already spent.
    pub pick: Option<usize>,
    /// Amount committed against the budget (the displayed payment).
    pub charged: f64,
}

/// Prices the pick `j` at `e_anchor − e_j`, clamped by the budget if any.
fn price_pick(
    point_estimates: &[f64],
    anchor: usize,
    pick: usize,
    budget: Option<&mut Budget>,
) -> (PaymentVector, f64) {
    let mut payments = PaymentVector::zeros(point_estimates.len());
    let gap = point_estimates[anchor] - point_estimates[pick];
    let amount = match budget {
        Some(b) => b.charge(gap),
        None => gap,
    };
    payments[pick] = amount;
    (payments, amount)
}

/// Draws `j` uniformly from the chained set and pays it the gap to the anchor.
///
/// With a budget: nothing is offered once it is spent, and otherwise the
/// payment is clamped to what remains.
pub fn chained_payment(
    set: &ChainedSet,
    point_estimates: &[f64],
    rng: &mut impl Rng,
    budget: Option<&mut Budget>,
) -> ChainedPayment {
    if budget.as_ref().is_some_and(|b| b.is_exhausted()) {
        return ChainedPayment {
            payments: PaymentVector::zeros(point_estimates.len()),
            pick: None,
            charged: 0.0,
        };
    }
    let members: Vec<usize> = set.members.iter().copied().collect();
    let pick = members[rng.random_range(0..members.len())];
    let (payments, charged) = price_pick(point_estimates, set.anchor, pick, budget);
    ChainedPayment {
        payments,
        pick: Some(pick),
        charged,
    }
}

/// Chaining-based payments over ridge estimates, optionally budgeted.
#[derive(Debug, Clone)]
pub struct ChainedPayments {
    bank: EstimatorBank,
    delta: f64,
    width_m: usize,
    budget: Option<Budget>,
    rng: StreamRng,
}

impl ChainedPayments {
    pub fn new(
        bank: EstimatorBank,
        delta: f64,
        width_m: usize,
        budget: Option<Budget>,
        rng: StreamRng,
    ) -> Self {
        Self {
            bank,
            delta,
            width_m,
            budget,
            rng,
        }
    }

    pub fn widths(&self, context: &[f64], t: usize) -> Vec<ConfidenceWidth> {
        self.bank
            .states()
            .iter()
            .map(|s| {
                s.confidence_width(context, self.delta, self.width_m, t)
                    .expect("chained policies run on ridge estimators")
            })
            .collect()
    }
}

impl Policy for ChainedPayments {
    fn kind(&self) -> PolicyKind {
        if self.budget.is_some() {
            PolicyKind::CbChainedRestricted
        } else {
            PolicyKind::CbChainedUnrestricted
        }
    }

    fn n_arms(&self) -> usize {
        self.bank.n_arms()
    }

    fn displayed_estimates(&self) -> &[Vec<f64>] {
        self.bank.displayed()
    }

    fn quote(&mut self, t: usize, context: &[f64]) -> Quote {
        if self.budget.is_some_and(|b| b.is_exhausted()) {
            return Quote::none(self.n_arms());
        }
        let point: Vec<f64> = self.bank.displayed().iter().map(|mu| dot(context, mu)).collect();
        let anchor = argmax_first(point.iter().copied());
        let set = build_chain(&self.widths(context, t), &point, anchor);
        let paid = chained_payment(&set, &point, &mut self.rng, self.budget.as_mut());
        Quote {
            payments: paid.payments,
            target: paid.pick,
        }
    }

    fn update(&mut self, context: &[f64], chosen: usize, observed: f64, _payment: f64) -> Vec<f64> {
        self.bank.absorb(chosen, context, observed);
        context.to_vec()
    }

    fn absorb_forced(&mut self, context: &[f64], arm: usize, observed: f64) {
        self.bank.absorb(arm, context, observed);
    }

    fn budget_remaining(&self) -> Option<f64> {
        self.budget.map(|b| b.remaining())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn widths(ws: &[f64]) -> Vec<ConfidenceWidth> {
        ws.iter()
            .enumerate()
            .map(|(arm, &width)| ConfidenceWidth {
                arm,
                width,
                delta: 0.1,
            })
            .collect()
    }

    /// Closure by repeated passes over explicit interval intersections.
    fn brute_force_chain(lo: &[f64], hi: &[f64], anchor: usize) -> BTreeSet<usize> {
        let n = lo.len();
        let mut reach = vec![false; n];
        reach[anchor] = true;
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if reach[i] && !reach[j] && lo[i].max(lo[j]) <= hi[i].min(hi[j]) {
                        reach[j] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (0..n).filter(|&i| reach[i]).collect()
    }

    #[test]
    fn chain_examples() {
        // intervals [0.4, 0.6], [0.55, 0.7], [0.8, 0.9]
        let e = [0.5, 0.625, 0.85];
        let w = widths(&[0.1, 0.075, 0.05]);
        let lo = [0.4, 0.55, 0.8];
        let hi = [0.6, 0.7, 0.9];
        assert_eq!(build_chain(&w, &e, 2).members, brute_force_chain(&lo, &hi, 2));
        assert_eq!(build_chain(&w, &e, 2).members, BTreeSet::from([2]));
        assert_eq!(build_chain(&w, &e, 1).members, BTreeSet::from([0, 1]));

        let zero = widths(&[0.0, 0.0, 0.0]);
        assert_eq!(
            build_chain(&zero, &[0.1, 0.2, 0.3], 1).members,
            BTreeSet::from([1])
        );
    }

    #[test]
    fn chain_is_transitive() {
        // 0–1 and 1–2 overlap, 0–2 do not
        let e = [0.0, 0.15, 0.3];
        let w = widths(&[0.1, 0.1, 0.1]);
        assert_eq!(build_chain(&w, &e, 0).members, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn self_selection_pays_nothing() {
        let set = ChainedSet {
            anchor: 1,
            members: BTreeSet::from([1]),
        };
        let mut rng = StreamRng::seed_from_u64(0);
        let paid = chained_payment(&set, &[0.2, 0.9], &mut rng, None);
        assert_eq!(paid.pick, Some(1));
        assert!(paid.payments.is_zero());
    }

    #[test]
    fn budget_clamps_payment() {
        let mut budget = Budget::new(0.2);
        let (p, charged) = price_pick(&[0.8, 0.5], 0, 1, Some(&mut budget));
        assert_eq!(p[1], 0.2);
        assert_eq!(charged, 0.2);
        assert_eq!(budget.remaining(), 0.0);
        assert!(budget.is_exhausted());

        let set = ChainedSet {
            anchor: 0,
            members: BTreeSet::from([0, 1]),
        };
        let mut rng = StreamRng::seed_from_u64(0);
        let paid = chained_payment(&set, &[0.8, 0.5], &mut rng, Some(&mut budget));
        assert_eq!(paid.pick, None);
        assert!(paid.payments.is_zero());
    }

    #[test]
    fn budget_total_never_exceeds_initial() {
        let mut rng = StreamRng::seed_from_u64(42);
        for initial in [0.3, 1.0 / 3.0, 5.0, 0.7] {
            let mut budget = Budget::new(initial);
            let mut total = 0.0;
            for _ in 0..1000 {
                total += budget.charge(rng.random_range(0.0..0.05));
                assert!(total <= initial);
            }
            assert!(budget.remaining() < 0.05);
        }
    }

    #[test]
    fn uniform_selection_over_members() {
        let set = ChainedSet {
            anchor: 0,
            members: BTreeSet::from([0, 1, 2, 3]),
        };
        let e = [0.9, 0.8, 0.7, 0.6];
        let mut rng = StreamRng::seed_from_u64(2718);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[chained_payment(&set, &e, &mut rng, None).pick.unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= 0.02, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn chain_matches_brute_force(
            pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.3), 1..8),
            anchor_seed in 0usize..100,
        ) {
            let e: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let w: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let lo: Vec<f64> = e.iter().zip(&w).map(|(a, b)| a - b).collect();
            let hi: Vec<f64> = e.iter().zip(&w).map(|(a, b)| a + b).collect();
            let anchor = anchor_seed % e.len();
            let got = build_chain(&widths(&w), &e, anchor);
            prop_assert!(got.members.contains(&anchor));
            // interval endpoints are rounded, so compare away from exact touching
            let touching = (0..e.len()).any(|i| (0..e.len()).any(|j| {
                i != j && ((e[i] - e[j]).abs() - (w[i] + w[j])).abs() < 1e-12
            }));
            prop_assume!(!touching);
            prop_assert_eq!(got.members, brute_force_chain(&lo, &hi, anchor));
        }

        #[test]
        fn chain_is_permutation_equivariant(
            pts in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.3), 2..8),
            anchor_seed in 0usize..100,
            rot in 0usize..8,
        ) {
            let n = pts.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
            let e: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let w: Vec<f64> = pts.iter().map(|p| p.1).collect();
            // arm i is relabeled perm[i]
            let mut pe = vec![0.0; n];
            let mut pw = vec![0.0; n];
            for i in 0..n {
                pe[perm[i]] = e[i];
                pw[perm[i]] = w[i];
            }
            let anchor = anchor_seed % n;
            let original = build_chain(&widths(&w), &e, anchor);
            let relabeled = build_chain(&widths(&pw), &pe, perm[anchor]);
            let mapped: BTreeSet<usize> = original.members.iter().map(|&i| perm[i]).collect();
            prop_assert_eq!(mapped, relabeled.members);
        }
    }
}
