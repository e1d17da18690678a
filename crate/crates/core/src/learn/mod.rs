//! Datasets, costs, metrics and the restart-driven training loop.

pub mod dataset;
pub mod metrics;
pub mod optimizer;
pub mod train;

pub use dataset::{build_known_dataset, build_unknown_dataset, Dataset, LabeledState, Provenance, Split};
pub use metrics::{compute_metrics, cross_entropy, f_beta, Metrics};
pub use optimizer::{minimize, Minimum, OptimizerConfig};
pub use train::{train_known, train_unknown, TrainOutcome, TrainRun, TrainSettings};
