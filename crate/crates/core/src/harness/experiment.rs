//! Monte-Carlo fan-out over (policy, run) pairs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{has_errors, validate_config, validate_dataset, Diagnostic, ExperimentConfig};
use super::simulation::{RunError, Simulation};
use crate::environment::{BanditDataset, ContextSourceSpec, EnvError};
use crate::metrics::{aggregate, AggregateCurves, MetricsError, RunTrace};
use crate::model::InstanceSpec;
use crate::policies::PolicyConfig;
use crate::seed::RunSeeds;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration ({} problems)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Dataset(#[from] EnvError),
    #[error("policy {label}, run {run}: {source}")]
    Run {
        label: String,
        run: usize,
        #[source]
        source: RunError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl ExperimentError {
    /// Whether the failure is a configuration problem rather than a runtime one.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Self::Invalid(_)
                | Self::Dataset(
                    EnvError::Parse { .. }
                        | EnvError::LabelOutOfRange { .. }
                        | EnvError::EmptyDataset
                        | EnvError::NotEnoughRows { .. }
                        | EnvError::DimensionMismatch { .. }
                        | EnvError::Io { .. }
                        | EnvError::Csv(_)
                        | EnvError::MissingDataset
                )
        )
    }
}

/// All runs of one policy.
#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub config: PolicyConfig,
    pub traces: Vec<RunTrace>,
    pub curves: AggregateCurves,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub policies: Vec<PolicyResult>,
}

/// Resolves a dataset path relative to the directory of the config file.
pub fn resolve_path(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_owned()
    } else {
        base_dir.join(path)
    }
}

/// Loads the dataset a dataset-backed instance replays; `None` otherwise.
pub fn load_dataset(
    instance: &InstanceSpec,
    base_dir: &Path,
) -> Result<Option<Arc<BanditDataset>>, EnvError> {
    let ContextSourceSpec::DatasetReplay {
        path,
        header,
        standardize,
        ..
    } = &instance.context_source
    else {
        return Ok(None);
    };
    let mut ds = BanditDataset::from_path(&resolve_path(base_dir, path), *header, instance.n_arms)?;
    if *standardize {
        ds.standardize();
    }
    Ok(Some(Arc::new(ds)))
}

/// Validates, loads data and plays every (policy, run) pair. `jobs` caps the
/// worker count; `None` uses every core. Results come back in (policy, run)
/// order whatever the scheduling.
pub fn run_experiment(
    config: &ExperimentConfig,
    base_dir: &Path,
    jobs: Option<usize>,
) -> Result<ExperimentResult, ExperimentError> {
    let diags = validate_config(config);
    if has_errors(&diags) {
        return Err(ExperimentError::Invalid(diags));
    }
    let dataset = load_dataset(&config.instance, base_dir)?;
    run_experiment_with_dataset(config, dataset, jobs)
}

/// Like [`run_experiment`] with the dataset already in memory.
pub fn run_experiment_with_dataset(
    config: &ExperimentConfig,
    dataset: Option<Arc<BanditDataset>>,
    jobs: Option<usize>,
) -> Result<ExperimentResult, ExperimentError> {
    let diags = validate_config(config);
    if has_errors(&diags) {
        return Err(ExperimentError::Invalid(diags));
    }
    if config.instance.context_source.is_dataset() && dataset.is_none() {
        return Err(ExperimentError::Dataset(EnvError::MissingDataset));
    }
    if let Some(ds) = &dataset {
        let diags = validate_dataset(&config.instance, ds);
        if has_errors(&diags) {
            return Err(ExperimentError::Invalid(diags));
        }
    }

    let pairs: Vec<(usize, usize)> = (0..config.policies.len())
        .flat_map(|p| (0..config.n_runs).map(move |r| (p, r)))
        .collect();
    let play = |&(p, r): &(usize, usize)| {
        let policy = &config.policies[p];
        let seeds = RunSeeds::for_run(config.instance.master_seed, p, r);
        Simulation::new(&config.instance, policy, dataset.clone(), seeds)
            .and_then(|sim| sim.run(r))
            .map_err(|source| ExperimentError::Run {
                label: policy.label().to_owned(),
                run: r,
                source,
            })
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build()?;
    let traces: Vec<RunTrace> = pool.install(|| pairs.par_iter().map(play).collect::<Result<_, _>>())?;

    let mut traces = traces.into_iter();
    let mut policies = Vec::with_capacity(config.policies.len());
    for policy in &config.policies {
        let runs: Vec<RunTrace> = traces.by_ref().take(config.n_runs).collect();
        let curves = aggregate(&runs)?;
        policies.push(PolicyResult {
            config: policy.clone(),
            traces: runs,
            curves,
        });
    }
    Ok(ExperimentResult { policies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            instance: InstanceSpec {
                n_arms: 3,
                dim: 2,
                horizon: 40,
                true_attrs: vec![vec![0.5, 0.1], vec![0.1, 0.5], vec![0.3, 0.3]],
                noise_std: 0.1,
                context_source: ContextSourceSpec::GaussianIid {
                    mean: vec![0.2, 0.2],
                    std: 0.5,
                },
                init_explore_m: 6,
                master_seed: 11,
            },
            policies: PolicyKind::ALL
                .iter()
                .map(|&k| {
                    let c = PolicyConfig::new(k);
                    if k == PolicyKind::CbChainedRestricted {
                        c.with_budget(1.0)
                    } else {
                        c
                    }
                })
                .collect(),
            n_runs: 4,
            output_dir: "out".into(),
            emit_full_trace: true,
        }
    }

    #[test]
    fn order_is_independent_of_worker_count() {
        let a = run_experiment(&config(), Path::new("."), Some(1)).unwrap();
        let b = run_experiment(&config(), Path::new("."), Some(4)).unwrap();
        for (pa, pb) in a.policies.iter().zip(&b.policies) {
            assert_eq!(pa.traces.len(), 4);
            for (ta, tb) in pa.traces.iter().zip(&pb.traces) {
                assert_eq!(ta.run, tb.run);
                assert_eq!(ta.records, tb.records);
            }
            assert_eq!(pa.curves, pb.curves);
        }
    }

    #[test]
    fn runs_of_a_policy_share_nothing_but_policies_share_contexts() {
        let res = run_experiment(&config(), Path::new("."), None).unwrap();
        let ctx = |p: usize, r: usize| res.policies[p].traces[r].records[0].context.clone();
        assert_ne!(ctx(0, 0), ctx(0, 1));
        assert_eq!(ctx(0, 2), ctx(3, 2));
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut c = config();
        c.instance.init_explore_m = 100;
        let err = run_experiment(&c, Path::new("."), None).unwrap_err();
        assert!(err.is_config_error());
    }
}
