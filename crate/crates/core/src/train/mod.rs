//! Training loop, data splits and model persistence.

mod config;
mod io;
mod metrics;
mod runner;
mod sgd;
mod split;

pub use config::{SplitSpec, TrainConfig};
pub use io::{load_model, model_file_size, model_from_bytes, model_to_bytes, save_model, MAGIC, VERSION};
pub use metrics::{metrics_csv, parse_metrics_csv, write_metrics_csv, METRICS_HEADER};
pub use runner::{
    as_refs, evaluate, fit, overfit_gap, steps_per_epoch, train, EpochRecord, Evaluation, Fitted, TrainOutcome,
};
pub use sgd::sgd_nesterov_step;
pub use split::{allocate, split_indices, Split};
