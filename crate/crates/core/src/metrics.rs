//! Regret and payment accounting.
//!
//! Only the chosen arm's displayed payment changes hands, so "disbursed"
//! sums use `payment_paid`. Negative disbursements (penalties) reduce the
//! running total; the absolute column tracks gross volume instead. The full
//! displayed vector is summed separately.

use thiserror::Error;

use crate::model::RoundRecord;
use crate::policies::{PolicyConfig, PolicyKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no traces to aggregate")]
    Empty,
    #[error("cannot aggregate traces of different shape: {0}")]
    MixedConfig(String),
}

/// One run of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<RoundRecord>,
    pub policy: PolicyConfig,
    pub seed: u64,
    pub run: usize,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn n_arms(&self) -> usize {
        self.records.first().map_or(0, |r| r.payments.len())
    }

    /// Records sorted by `t` and contiguous from 1.
    pub fn is_well_formed(&self) -> bool {
        self.records.iter().enumerate().all(|(i, r)| r.t == i + 1)
    }
}

/// Prefix sums of one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulated {
    pub cum_regret: Vec<f64>,
    pub cum_payment: Vec<f64>,
    pub cum_payment_abs: Vec<f64>,
    pub cum_payment_vector: Vec<f64>,
    /// `per_arm[i][t]`: disbursed to arm `i` up to round `t`.
    pub per_arm: Vec<Vec<f64>>,
}

impl Accumulated {
    pub fn total_payment(&self) -> f64 {
        self.cum_payment.last().copied().unwrap_or(0.0)
    }

    pub fn total_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

pub fn accumulate(trace: &RunTrace) -> Accumulated {
    let n = trace.n_arms();
    let len = trace.records.len();
    let mut acc = Accumulated {
        cum_regret: Vec::with_capacity(len),
        cum_payment: Vec::with_capacity(len),
        cum_payment_abs: Vec::with_capacity(len),
        cum_payment_vector: Vec::with_capacity(len),
        per_arm: vec![Vec::with_capacity(len); n],
    };
    let (mut regret, mut paid, mut abs, mut vector) = (0.0, 0.0, 0.0, 0.0);
    let mut arm_totals = vec![0.0; n];
    for r in &trace.records {
        regret += r.inst_regret;
        paid += r.payment_paid;
        abs += r.payment_paid.abs();
        vector += r.payments.total();
        arm_totals[r.chosen_arm] += r.payment_paid;
        acc.cum_regret.push(regret);
        acc.cum_payment.push(paid);
        acc.cum_payment_abs.push(abs);
        acc.cum_payment_vector.push(vector);
        for (series, total) in acc.per_arm.iter_mut().zip(&arm_totals) {
            series.push(*total);
        }
    }
    acc
}

/// `|total| / (N·√(2·T·ln(N·T)))`.
pub fn payment_bound_ratio(total_payment: f64, n_arms: usize, horizon: usize) -> f64 {
    let (n, t) = (n_arms as f64, horizon as f64);
    total_payment.abs() / (n * (2.0 * t * (n * t).ln()).sqrt())
}

/// Pointwise mean and standard error of a family of curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Band {
    fn from_curves(curves: &[&[f64]]) -> Self {
        let k = curves.len() as f64;
        let len = curves[0].len();
        let mut mean = Vec::with_capacity(len);
        let mut stderr = Vec::with_capacity(len);
        for t in 0..len {
            let m = curves.iter().map(|c| c[t]).sum::<f64>() / k;
            let se = if curves.len() > 1 {
                let var = curves.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            mean.push(m);
            stderr.push(se);
        }
        Self { mean, stderr }
    }
}

/// Monte-Carlo averages over runs of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurves {
    pub kind: PolicyKind,
    pub n_runs: usize,
    pub cum_regret: Band,
    pub cum_payment: Band,
    pub cum_payment_abs: Band,
    pub cum_payment_vector: Band,
    /// Mean cumulative disbursement per arm.
    pub per_arm_payment: Vec<Vec<f64>>,
}

impl AggregateCurves {
    pub fn horizon(&self) -> usize {
        self.cum_regret.mean.len()
    }
}

pub fn aggregate(traces: &[RunTrace]) -> Result<AggregateCurves, MetricsError> {
    let first = traces.first().ok_or(MetricsError::Empty)?;
    for tr in traces {
        if tr.horizon() != first.horizon() {
            return Err(MetricsError::MixedConfig(format!(
                "horizons {} and {}",
                first.horizon(),
                tr.horizon()
            )));
        }
        if tr.policy.kind != first.policy.kind {
            return Err(MetricsError::MixedConfig(format!(
                "policies {} and {}",
                first.policy.kind, tr.policy.kind
            )));
        }
        if tr.n_arms() != first.n_arms() {
            return Err(MetricsError::MixedConfig(format!(
                "{} and {} arms",
                first.n_arms(),
                tr.n_arms()
            )));
        }
    }
    let acc: Vec<Accumulated> = traces.iter().map(accumulate).collect();
    let band = |f: fn(&Accumulated) -> &[f64]| {
        let curves: Vec<&[f64]> = acc.iter().map(f).collect();
        Band::from_curves(&curves)
    };
    let per_arm_payment = (0..first.n_arms())
        .map(|arm| {
            let curves: Vec<&[f64]> = acc.iter().map(|a| a.per_arm[arm].as_slice()).collect();
            Band::from_curves(&curves).mean
        })
        .collect();
    Ok(AggregateCurves {
        kind: first.policy.kind,
        n_runs: traces.len(),
        cum_regret: band(|a| &a.cum_regret),
        cum_payment: band(|a| &a.cum_payment),
        cum_payment_abs: band(|a| &a.cum_payment_abs),
        cum_payment_vector: band(|a| &a.cum_payment_vector),
        per_arm_payment,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PaymentVector;

    fn record(t: usize, chosen: usize, regret: f64, payments: Vec<f64>) -> RoundRecord {
        let paid = payments[chosen];
        RoundRecord {
            t,
            context: vec![1.0],
            payments: PaymentVector(payments),
            chosen_arm: chosen,
            displayed_estimates: vec![vec![0.0], vec![0.0]],
            observed_reward: 0.0,
            true_mean_reward: 0.0,
            inst_regret: regret,
            payment_paid: paid,
            budget_remaining: None,
            forced: false,
            greedy_arm: 0,
            target_arm: None,
            absorbed_context: vec![1.0],
        }
    }

    fn trace(kind: PolicyKind, records: Vec<RoundRecord>) -> RunTrace {
        RunTrace {
            records,
            policy: PolicyConfig::new(kind),
            seed: 0,
            run: 0,
        }
    }

    #[test]
    fn prefix_sums() {
        let tr = trace(
            PolicyKind::NoPayments,
            vec![
                record(1, 0, 0.5, vec![0.0, 0.0]),
                record(2, 1, 0.0, vec![0.0, 0.0]),
                record(3, 0, 0.25, vec![0.0, 0.0]),
            ],
        );
        let acc = accumulate(&tr);
        assert_eq!(acc.cum_regret, vec![0.5, 0.5, 0.75]);
        assert_eq!(acc.cum_payment, vec![0.0; 3]);
        assert!(tr.is_well_formed());
    }

    #[test]
    fn only_chosen_payment_is_disbursed() {
        let tr = trace(
            PolicyKind::CbwHeterogeneity,
            vec![
                record(1, 0, 0.0, vec![0.3, -0.2]),
                record(2, 1, 0.0, vec![0.1, -0.4]),
                record(3, 1, 0.0, vec![0.0, 0.5]),
            ],
        );
        let acc = accumulate(&tr);
        assert!((acc.total_payment() - (0.3 - 0.4 + 0.5)).abs() < 1e-15);
        assert!((acc.cum_payment_abs[2] - 1.2).abs() < 1e-15);
        assert!((acc.cum_payment_vector[2] - 0.3).abs() < 1e-15);
        let per_arm_total: f64 = acc.per_arm.iter().map(|s| s[2]).sum();
        assert!((per_arm_total - acc.total_payment()).abs() < 1e-15);
    }

    #[test]
    fn bound_ratio() {
        assert_eq!(payment_bound_ratio(0.0, 8, 800), 0.0);
        let scale = 8.0 * (2.0 * 800.0 * (6400f64).ln()).sqrt();
        assert!((payment_bound_ratio(scale, 8, 800) - 1.0).abs() < 1e-12);
        assert!((payment_bound_ratio(-scale, 8, 800) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_trace_aggregate_is_identity() {
        let tr = trace(
            PolicyKind::NoPayments,
            vec![
                record(1, 0, 0.5, vec![0.0, 0.0]),
                record(2, 1, 0.1, vec![0.0, 0.0]),
            ],
        );
        let agg = aggregate(std::slice::from_ref(&tr)).unwrap();
        assert_eq!(agg.cum_regret.mean, accumulate(&tr).cum_regret);
        assert_eq!(agg.cum_regret.stderr, vec![0.0, 0.0]);
        assert_eq!(agg.n_runs, 1);
    }

    #[test]
    fn two_trace_mean_and_order_invariance() {
        let a = trace(
            PolicyKind::NoPayments,
            vec![
                record(1, 0, 0.5, vec![0.0, 0.0]),
                record(2, 0, 0.5, vec![0.0, 0.0]),
            ],
        );
        let b = trace(
            PolicyKind::NoPayments,
            vec![
                record(1, 0, 0.1, vec![0.0, 0.0]),
                record(2, 0, 0.3, vec![0.0, 0.0]),
            ],
        );
        let ab = aggregate(&[a.clone(), b.clone()]).unwrap();
        assert!((ab.cum_regret.mean[0] - 0.3).abs() < 1e-15);
        assert!((ab.cum_regret.mean[1] - 0.7).abs() < 1e-15);
        let ba = aggregate(&[b, a]).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn mixed_traces_rejected() {
        let a = trace(PolicyKind::NoPayments, vec![record(1, 0, 0.5, vec![0.0, 0.0])]);
        let b = trace(PolicyKind::CbwPayments, vec![record(1, 0, 0.5, vec![0.0, 0.0])]);
        assert!(matches!(
            aggregate(&[a.clone(), b]),
            Err(MetricsError::MixedConfig(_))
        ));
        let c = trace(
            PolicyKind::NoPayments,
            vec![
                record(1, 0, 0.5, vec![0.0, 0.0]),
                record(2, 0, 0.0, vec![0.0, 0.0]),
            ],
        );
        assert!(matches!(aggregate(&[a, c]), Err(MetricsError::MixedConfig(_))));
        assert_eq!(aggregate(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1000.0, 2000.0, 4000.0, 8000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((log_log_slope(&xs, &ys) - 0.5).abs() < 1e-12);
    }
}
