//! Context streams, reward realization and the classification-to-bandit
//! adapter.
//!
//! The [`Environment`] is the only component that sees ground truth (arm
//! attributes or class labels). Policies receive contexts and noisy rewards,
//! nothing else.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, project_to_unit_ball, sym_eigenvalues, Matrix};
use crate::model::{inst_regret, InstanceSpec};
use crate::seed::{stream_rng, Stream, StreamRng};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("fixed context sequence of length {len} exhausted at round {t}")]
    ExhaustedSequence { t: usize, len: usize },
    #[error("row {row}: expected {expected} feature columns, found {actual}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("row {row}: label {label} out of range for {n_classes} classes")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("horizon {horizon} exceeds the {rows} dataset rows; enable sampling with replacement")]
    NotEnoughRows { horizon: usize, rows: usize },
    #[error("a dataset-backed context source needs a loaded dataset")]
    MissingDataset,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// How contexts are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSourceSpec {
    /// Adversarial stream given up front. With `cycle`, the list repeats.
    FixedSequence {
        contexts: Vec<Vec<f64>>,
        #[serde(default)]
        cycle: bool,
    },
    /// `mean + std·z` with `z ~ N(0, I)`.
    GaussianIid { mean: Vec<f64>, std: f64 },
    /// Rows of a labelled CSV file in shuffled order.
    DatasetReplay {
        path: PathBuf,
        #[serde(default)]
        header: bool,
        #[serde(default)]
        standardize: bool,
        #[serde(default)]
        with_replacement: bool,
    },
}

impl ContextSourceSpec {
    pub fn is_dataset(&self) -> bool {
        matches!(self, Self::DatasetReplay { .. })
    }
}

/// A labelled classification dataset used as a bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub standardized: bool,
}

impl BanditDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self, EnvError> {
        if features.is_empty() {
            return Err(EnvError::EmptyDataset);
        }
        let dim = features[0].len();
        for (i, (row, &label)) in features.iter().zip(&labels).enumerate() {
            if row.len() != dim {
                return Err(EnvError::DimensionMismatch {
                    row: i + 1,
                    expected: dim,
                    actual: row.len(),
                });
            }
            if label >= n_classes {
                return Err(EnvError::LabelOutOfRange {
                    row: i + 1,
                    label,
                    n_classes,
                });
            }
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            standardized: false,
        })
    }

    /// Parses `f_1,...,f_d,label` rows. `row` in errors counts data rows from 1.
    pub fn from_csv<R: Read>(reader: R, header: bool, n_classes: usize) -> Result<Self, EnvError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut dim = None;
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            if record.len() < 2 {
                return Err(EnvError::Parse {
                    row,
                    column: record.len(),
                    message: "need at least one feature and a label".into(),
                });
            }
            let d = record.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(expected) if expected != d => {
                    return Err(EnvError::DimensionMismatch {
                        row,
                        expected,
                        actual: d,
                    })
                }
                _ => {}
            }
            let mut x = Vec::with_capacity(d);
            for (c, field) in record.iter().take(d).enumerate() {
                let v: f64 = field.parse().map_err(|_| EnvError::Parse {
                    row,
                    column: c + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(EnvError::Parse {
                        row,
                        column: c + 1,
                        message: format!("non-finite value {v}"),
                    });
                }
                x.push(v);
            }
            let field = &record[d];
            let label: usize = field.parse().map_err(|_| EnvError::Parse {
                row,
                column: d + 1,
                message: format!("label is not a non-negative integer: {field:?}"),
            })?;
            if label >= n_classes {
                return Err(EnvError::LabelOutOfRange {
                    row,
                    label,
                    n_classes,
                });
            }
            features.push(x);
            labels.push(label);
        }
        Self::new(features, labels, n_classes)
    }

    pub fn from_path(path: &Path, header: bool, n_classes: usize) -> Result<Self, EnvError> {
        let file = std::fs::File::open(path).map_err(|source| EnvError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_csv(std::io::BufReader::new(file), header, n_classes)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// Per-column z-score (population standard deviation). Constant columns
    /// are only centered.
    pub fn standardize(&mut self) {
        let n = self.len() as f64;
        for c in 0..self.dim() {
            let mean = self.features.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = self.features.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            let scale = if sd > 0.0 { sd } else { 1.0 };
            for r in &mut self.features {
                r[c] = (r[c] - mean) / scale;
            }
        }
        self.standardized = true;
    }

    pub fn standardized(mut self) -> Self {
        self.standardize();
        self
    }
}

/// One arriving agent, as seen by the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival {
    /// Context shown to the agent and the platform (inside the unit ball).
    pub context: Vec<f64>,
    /// Context before the unit-ball projection.
    pub raw: Vec<f64>,
    /// True class for dataset-backed instances.
    pub label: Option<usize>,
}

#[derive(Debug, Clone)]
enum ContextStream {
    Fixed {
        contexts: Vec<Vec<f64>>,
        cycle: bool,
    },
    Gaussian {
        mean: Vec<f64>,
        std: f64,
        rng: StreamRng,
    },
    Replay {
        dataset: Arc<BanditDataset>,
        order: Vec<usize>,
        cursor: usize,
        with_replacement: bool,
        rng: StreamRng,
    },
}

impl ContextStream {
    /// Context for 0-based round `t`. Rounds must be requested in order.
    fn next(&mut self, t: usize) -> Result<(Vec<f64>, Option<usize>), EnvError> {
        match self {
            Self::Fixed { contexts, cycle } => {
                let len = contexts.len();
                if len == 0 || (t >= len && !*cycle) {
                    return Err(EnvError::ExhaustedSequence { t, len });
                }
                Ok((contexts[t % len].clone(), None))
            }
            Self::Gaussian { mean, std, rng } => {
                let x = mean
                    .iter()
                    .map(|&m| {
                        let z: f64 = rng.sample(StandardNormal);
                        m + *std * z
                    })
                    .collect();
                Ok((x, None))
            }
            Self::Replay {
                dataset,
                order,
                cursor,
                with_replacement,
                rng,
            } => {
                let idx = if *with_replacement {
                    rng.random_range(0..dataset.len())
                } else {
                    if *cursor == order.len() {
                        shuffle(order, rng);
                        *cursor = 0;
                    }
                    let i = order[*cursor];
                    *cursor += 1;
                    i
                };
                Ok((dataset.features[idx].clone(), Some(dataset.labels[idx])))
            }
        }
    }
}

fn shuffle(order: &mut [usize], rng: &mut StreamRng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// How rewards are generated.
#[derive(Debug, Clone)]
pub enum RewardModel {
    /// `y = θ·μ_i + η`
    Linear { true_attrs: Vec<Vec<f64>> },
    /// Supervised conversion: pulling the true label pays 1, anything else 0.
    Classification,
}

/// Reward and regret for one pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub observed: f64,
    pub true_mean: f64,
    pub regret: f64,
}

/// Observed and expected reward for pulling `chosen` under the linear model.
///
/// One standard normal draw is taken from `rng` even when `noise_std` is 0,
/// so noise streams stay aligned across noise levels.
pub fn realize_reward(
    true_attrs: &[Vec<f64>],
    context: &[f64],
    chosen: usize,
    noise_std: f64,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let true_mean = dot(context, &true_attrs[chosen]);
    let z: f64 = rng.sample(StandardNormal);
    (true_mean + noise_std * z, true_mean)
}

/// The simulated world for one run.
#[derive(Debug, Clone)]
pub struct Environment {
    n_arms: usize,
    dim: usize,
    stream: ContextStream,
    rewards: RewardModel,
    noise_std: f64,
    noise_rng: StreamRng,
}

impl Environment {
    /// Builds the environment of `instance`. Dataset-backed sources need the
    /// already-loaded (and, if requested, standardized) dataset.
    pub fn new(
        instance: &InstanceSpec,
        dataset: Option<Arc<BanditDataset>>,
        seed: u64,
    ) -> Result<Self, EnvError> {
        match &instance.context_source {
            ContextSourceSpec::FixedSequence { contexts, cycle } => Ok(Self::linear(
                instance,
                ContextStream::Fixed {
                    contexts: contexts.clone(),
                    cycle: *cycle,
                },
                seed,
            )),
            ContextSourceSpec::GaussianIid { mean, std } => Ok(Self::linear(
                instance,
                ContextStream::Gaussian {
                    mean: mean.clone(),
                    std: *std,
                    rng: stream_rng(seed, Stream::Contexts),
                },
                seed,
            )),
            ContextSourceSpec::DatasetReplay { with_replacement, .. } => {
                let dataset = dataset.ok_or(EnvError::MissingDataset)?;
                Self::from_dataset(
                    dataset,
                    instance.horizon,
                    *with_replacement,
                    instance.noise_std,
                    seed,
                )
            }
        }
    }

    fn linear(instance: &InstanceSpec, stream: ContextStream, seed: u64) -> Self {
        Self {
            n_arms: instance.n_arms,
            dim: instance.dim,
            stream,
            rewards: RewardModel::Linear {
                true_attrs: instance.true_attrs.clone(),
            },
            noise_std: instance.noise_std,
            noise_rng: stream_rng(seed, Stream::Noise),
        }
    }

    /// Supervised-to-bandit conversion: one arm per class, contexts are the
    /// dataset rows in an order shuffled by `seed`, reward is the label
    /// indicator plus optional Gaussian noise, regret is the 0/1 loss.
    pub fn from_dataset(
        dataset: Arc<BanditDataset>,
        horizon: usize,
        with_replacement: bool,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self, EnvError> {
        if dataset.is_empty() {
            return Err(EnvError::EmptyDataset);
        }
        if !with_replacement && horizon > dataset.len() {
            return Err(EnvError::NotEnoughRows {
                horizon,
                rows: dataset.len(),
            });
        }
        let mut rng = stream_rng(seed, Stream::Shuffle);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        if !with_replacement {
            shuffle(&mut order, &mut rng);
        }
        Ok(Self {
            n_arms: dataset.n_classes,
            dim: dataset.dim(),
            stream: ContextStream::Replay {
                dataset,
                order,
                cursor: 0,
                with_replacement,
                rng,
            },
            rewards: RewardModel::Classification,
            noise_std,
            noise_rng: stream_rng(seed, Stream::Noise),
        })
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The agent arriving in 0-based round `t`.
    pub fn next_context(&mut self, t: usize) -> Result<Arrival, EnvError> {
        let (raw, label) = self.stream.next(t)?;
        let mut context = raw.clone();
        project_to_unit_ball(&mut context);
        Ok(Arrival { context, raw, label })
    }

    pub fn realize(&mut self, arrival: &Arrival, chosen: usize) -> Outcome {
        match &self.rewards {
            RewardModel::Linear { true_attrs } => {
                let (observed, true_mean) = realize_reward(
                    true_attrs,
                    &arrival.context,
                    chosen,
                    self.noise_std,
                    &mut self.noise_rng,
                );
                Outcome {
                    observed,
                    true_mean,
                    regret: inst_regret(true_attrs, &arrival.context, chosen),
                }
            }
            RewardModel::Classification => {
                let label = arrival.label.expect("dataset arrivals carry labels");
                let hit = chosen == label;
                let true_mean = if hit { 1.0 } else { 0.0 };
                let z: f64 = self.noise_rng.sample(StandardNormal);
                Outcome {
                    observed: true_mean + self.noise_std * z,
                    true_mean,
                    regret: if hit { 0.0 } else { 1.0 },
                }
            }
        }
    }
}

/// Minimum eigenvalue of `(1/n) Σ θθᵀ`.
pub fn covariate_diversity_report<C: AsRef<[f64]>>(contexts: &[C]) -> f64 {
    assert!(
        !contexts.is_empty(),
        "diversity report needs at least one context"
    );
    let d = contexts[0].as_ref().len();
    let mut second_moment = Matrix::zeros(d);
    let w = 1.0 / contexts.len() as f64;
    for c in contexts {
        second_moment.add_outer(c.as_ref(), w);
    }
    sym_eigenvalues(&second_moment)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}
