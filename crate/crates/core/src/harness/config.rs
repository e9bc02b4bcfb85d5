//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "instance": {
//!     "n_arms": 2, "dim": 2, "horizon": 100,
//!     "true_attrs": [[0.5, 0.1], [0.1, 0.5]],
//!     "noise_std": 0.1,
//!     "context_source": { "kind": "gaussian_iid", "mean": [0.2, 0.2], "std": 0.5 },
//!     "init_explore_m": 4,
//!     "master_seed": 7
//!   },
//!   "policies": [ { "kind": "no_payments" }, { "kind": "cb_chained_restricted", "budget": 5.0 } ],
//!   "n_runs": 10,
//!   "output_dir": "out",
//!   "emit_full_trace": false
//! }
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{BanditDataset, ContextSourceSpec};
use crate::estimation::EstimatorMode;
use crate::linalg::{norm, MAX_DIM};
use crate::model::InstanceSpec;
use crate::policies::{PolicyConfig, PolicyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_full_trace: bool,
}

fn default_runs() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: String,
    pub constraint: String,
    pub actual: String,
    pub severity: Severity,
}

impl Diagnostic {
    fn error(field: impl Into<String>, constraint: impl Into<String>, actual: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            constraint: constraint.into(),
            actual: actual.to_string(),
            severity: Severity::Error,
        }
    }

    fn warning(field: impl Into<String>, constraint: impl Into<String>, actual: impl fmt::Display) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(field, constraint, actual)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{tag}: {}: {} (actual: {})",
            self.field, self.constraint, self.actual
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Checks every constraint that can be checked without loading data.
pub fn validate_config(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if config.n_runs < 1 {
        out.push(Diagnostic::error("n_runs", "must be at least 1", config.n_runs));
    }
    validate_instance(&config.instance, &mut out);
    if config.policies.is_empty() {
        out.push(Diagnostic::error(
            "policies",
            "at least one policy is required",
            0,
        ));
    }
    let mut labels = HashSet::new();
    for (i, p) in config.policies.iter().enumerate() {
        if !labels.insert(p.label()) {
            out.push(Diagnostic::error(
                format!("policies[{i}].label"),
                "labels must be unique (they name the output files)",
                p.label(),
            ));
        }
        validate_policy(i, p, &config.instance, &mut out);
    }
    out
}

fn check_vector(field: &str, v: &[f64], dim: usize, out: &mut Vec<Diagnostic>) {
    if v.len() != dim {
        out.push(Diagnostic::error(
            field,
            format!("length must equal dim = {dim}"),
            v.len(),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        out.push(Diagnostic::error(
            field,
            "entries must be finite",
            format!("{v:?}"),
        ));
    }
}

fn validate_instance(inst: &InstanceSpec, out: &mut Vec<Diagnostic>) {
    if inst.n_arms < 2 {
        out.push(Diagnostic::error(
            "instance.n_arms",
            "must be at least 2",
            inst.n_arms,
        ));
    }
    if inst.dim < 1 || inst.dim > MAX_DIM {
        out.push(Diagnostic::error(
            "instance.dim",
            format!("must lie in 1..={MAX_DIM}"),
            inst.dim,
        ));
    }
    if inst.horizon < 1 {
        out.push(Diagnostic::error(
            "instance.horizon",
            "must be at least 1",
            inst.horizon,
        ));
    }
    if inst.init_explore_m > inst.horizon {
        out.push(Diagnostic::error(
            "instance.init_explore_m",
            format!("must not exceed horizon = {}", inst.horizon),
            inst.init_explore_m,
        ));
    } else if inst.init_explore_m > 0 && inst.init_explore_m < inst.n_arms * inst.dim {
        out.push(Diagnostic::warning(
            "instance.init_explore_m",
            format!(
                "fewer than n_arms * dim = {} forced rounds leaves OLS estimates unidentified",
                inst.n_arms * inst.dim
            ),
            inst.init_explore_m,
        ));
    }
    if !(inst.noise_std >= 0.0 && inst.noise_std.is_finite()) {
        out.push(Diagnostic::error(
            "instance.noise_std",
            "must be finite and non-negative",
            inst.noise_std,
        ));
    }

    if inst.context_source.is_dataset() {
        if !inst.true_attrs.is_empty() {
            out.push(Diagnostic::error(
                "instance.true_attrs",
                "must be empty for dataset-backed instances (rewards come from labels)",
                format!("{} vectors", inst.true_attrs.len()),
            ));
        }
    } else {
        if inst.true_attrs.len() != inst.n_arms {
            out.push(Diagnostic::error(
                "instance.true_attrs",
                format!("needs one vector per arm (n_arms = {})", inst.n_arms),
                inst.true_attrs.len(),
            ));
        }
        for (i, mu) in inst.true_attrs.iter().enumerate() {
            let field = format!("instance.true_attrs[{i}]");
            check_vector(&field, mu, inst.dim, out);
            let n = norm(mu);
            if n > 1.0 + 1e-12 {
                out.push(Diagnostic::error(
                    field,
                    format!("true_attrs[{i}] norm exceeds 1"),
                    n,
                ));
            }
        }
    }

    match &inst.context_source {
        ContextSourceSpec::FixedSequence { contexts, cycle } => {
            if contexts.is_empty() {
                out.push(Diagnostic::error(
                    "instance.context_source.contexts",
                    "must not be empty",
                    0,
                ));
            } else if !cycle && contexts.len() < inst.horizon {
                out.push(Diagnostic::error(
                    "instance.context_source.contexts",
                    format!(
                        "needs at least horizon = {} contexts unless cycle is set",
                        inst.horizon
                    ),
                    contexts.len(),
                ));
            }
            for (i, c) in contexts.iter().enumerate() {
                check_vector(
                    &format!("instance.context_source.contexts[{i}]"),
                    c,
                    inst.dim,
                    out,
                );
            }
        }
        ContextSourceSpec::GaussianIid { mean, std } => {
            check_vector("instance.context_source.mean", mean, inst.dim, out);
            if !(*std >= 0.0 && std.is_finite()) {
                out.push(Diagnostic::error(
                    "instance.context_source.std",
                    "must be finite and non-negative",
                    std,
                ));
            }
        }
        ContextSourceSpec::DatasetReplay { .. } => {}
    }
}

fn validate_policy(i: usize, p: &PolicyConfig, inst: &InstanceSpec, out: &mut Vec<Diagnostic>) {
    let field = |name: &str| format!("policies[{i}].{name}");
    let restricted = p.kind == PolicyKind::CbChainedRestricted;
    match (restricted, p.budget) {
        (true, None) => out.push(Diagnostic::error(
            field("budget"),
            "required for cb_chained_restricted",
            "unset",
        )),
        (true, Some(b)) if !(b >= 0.0 && b.is_finite()) => out.push(Diagnostic::error(
            field("budget"),
            "must be finite and non-negative",
            b,
        )),
        (false, Some(b)) => out.push(Diagnostic::error(
            field("budget"),
            format!("only cb_chained_restricted takes a budget, not {}", p.kind),
            b,
        )),
        _ => {}
    }
    if let Some(s) = p.sigma_pay {
        if !(s >= 0.0 && s.is_finite()) {
            out.push(Diagnostic::error(
                field("sigma_pay"),
                "must be finite and non-negative",
                s,
            ));
        }
    }
    if let Some(a) = p.linucb_alpha {
        if !(a >= 0.0 && a.is_finite()) {
            out.push(Diagnostic::error(
                field("linucb_alpha"),
                "must be finite and non-negative",
                a,
            ));
        }
    }
    if let Some(d) = p.delta {
        if !(d > 0.0 && d < 1.0) {
            out.push(Diagnostic::error(field("delta"), "must lie in (0, 1)", d));
        }
    }
    if p.estimator() == EstimatorMode::Ridge && !(p.ridge_lambda() > 0.0 && p.ridge_lambda().is_finite()) {
        out.push(Diagnostic::error(
            field("ridge_lambda"),
            "ridge estimators need lambda > 0",
            p.ridge_lambda(),
        ));
    }
    if p.kind.requires_ridge() && p.estimator() != EstimatorMode::Ridge {
        out.push(Diagnostic::error(
            field("estimator"),
            format!("{} needs a ridge estimator", p.kind),
            "ols",
        ));
    }
    if let Some(m) = p.init_explore_m {
        if m > inst.horizon {
            out.push(Diagnostic::error(
                field("init_explore_m"),
                format!("must not exceed horizon = {}", inst.horizon),
                m,
            ));
        }
    }
}

/// Checks a loaded dataset against the instance it backs.
pub fn validate_dataset(inst: &InstanceSpec, dataset: &BanditDataset) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if dataset.dim() != inst.dim {
        out.push(Diagnostic::error(
            "instance.dim",
            "must equal the dataset's feature count",
            format!("{} vs {}", inst.dim, dataset.dim()),
        ));
    }
    if dataset.n_classes != inst.n_arms {
        out.push(Diagnostic::error(
            "instance.n_arms",
            "must equal the number of classes",
            format!("{} vs {}", inst.n_arms, dataset.n_classes),
        ));
    }
    if let ContextSourceSpec::DatasetReplay {
        with_replacement: false,
        ..
    } = inst.context_source
    {
        if inst.horizon > dataset.len() {
            out.push(Diagnostic::error(
                "instance.horizon",
                format!(
                    "must not exceed the {} dataset rows without with_replacement",
                    dataset.len()
                ),
                inst.horizon,
            ));
        }
    }
    out
}
