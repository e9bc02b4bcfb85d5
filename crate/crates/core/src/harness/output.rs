//! CSV serialization of traces and aggregate curves.
//!
//! Per policy label two files are written: `<label>_aggregate.csv` with one
//! row per round, and, when full traces are requested, `<label>_trace.csv`
//! with one row per (run, round). Floats use the shortest representation
//! that round-trips, so identical results give identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentResult, PolicyResult};
use crate::metrics::{accumulate, AggregateCurves, RunTrace};

pub const TRACE_COLUMNS: [&str; 9] = [
    "t",
    "run",
    "arm",
    "inst_regret",
    "cum_regret",
    "inst_payment_disbursed",
    "cum_payment_disbursed",
    "cum_payment_abs",
    "budget_remaining",
];

pub fn trace_file_name(label: &str) -> String {
    format!("{label}_trace.csv")
}

pub fn aggregate_file_name(label: &str) -> String {
    format!("{label}_aggregate.csv")
}

pub fn write_traces<W: Write>(out: W, traces: &[RunTrace]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for tr in traces {
        let acc = accumulate(tr);
        for (i, r) in tr.records.iter().enumerate() {
            w.write_record([
                r.t.to_string(),
                tr.run.to_string(),
                r.chosen_arm.to_string(),
                r.inst_regret.to_string(),
                acc.cum_regret[i].to_string(),
                r.payment_paid.to_string(),
                acc.cum_payment[i].to_string(),
                acc.cum_payment_abs[i].to_string(),
                r.budget_remaining.map(|b| b.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn aggregate_header(n_arms: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "n_runs"].map(String::from).to_vec();
    for name in [
        "cum_regret",
        "cum_payment_disbursed",
        "cum_payment_abs",
        "cum_payment_vector",
    ] {
        cols.push(format!("mean_{name}"));
        cols.push(format!("stderr_{name}"));
    }
    cols.extend((0..n_arms).map(|i| format!("mean_cum_payment_arm_{i}")));
    cols
}

pub fn write_aggregate<W: Write>(out: W, curves: &AggregateCurves) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(aggregate_header(curves.per_arm_payment.len()))?;
    let bands = [
        &curves.cum_regret,
        &curves.cum_payment,
        &curves.cum_payment_abs,
        &curves.cum_payment_vector,
    ];
    for t in 0..curves.horizon() {
        let mut row = vec![(t + 1).to_string(), curves.n_runs.to_string()];
        for b in bands {
            row.push(b.mean[t].to_string());
            row.push(b.stderr[t].to_string());
        }
        row.extend(curves.per_arm_payment.iter().map(|a| a[t].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> std::io::Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn write_policy(
    dir: &Path,
    result: &PolicyResult,
    full_trace: bool,
    written: &mut Vec<PathBuf>,
) -> csv::Result<()> {
    let label = result.config.label();
    let path = dir.join(aggregate_file_name(label));
    write_aggregate(create(&path)?, &result.curves)?;
    written.push(path);
    if full_trace {
        let path = dir.join(trace_file_name(label));
        write_traces(create(&path)?, &result.traces)?;
        written.push(path);
    }
    Ok(())
}

/// Writes every policy's files into `dir`, creating it if needed. Returns the
/// written paths in (policy, kind) order.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, full_trace: bool) -> csv::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &result.policies {
        write_policy(dir, p, full_trace, &mut written)?;
    }
    Ok(written)
}
