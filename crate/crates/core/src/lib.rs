//! Linear contextual bandits where a platform pays myopic agents to explore.
//!
//! Each round an agent with context `θ` sees per-arm attribute estimates and
//! a payment vector, and pulls `argmax θ·μ̂_j + p_j`. The platform chooses the
//! payments. [`policies`] holds the strategies, [`harness`] runs them.

pub mod environment;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod seed;

pub use environment::{BanditDataset, ContextSourceSpec, EnvError, Environment};
pub use estimation::{EstimatorMode, EstimatorState};
pub use harness::{run_experiment, ExperimentConfig, ExperimentResult};
pub use metrics::{accumulate, aggregate, AggregateCurves, RunTrace};
pub use model::{agent_choose, InstanceSpec, PaymentVector, RoundRecord};
pub use policies::{build_policy, Policy, PolicyConfig, PolicyKind};
pub use seed::RunSeeds;
