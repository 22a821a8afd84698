//! Baseline architectures, parameter accounting and the plan executor.

mod config;
mod network;
mod params;
mod plan;

pub use config::{channel_schedule, BaselineConfig};
pub use network::{backward, forward, predict, Trace};
pub use params::{init_params, LayerParams, ParamBundle};
pub use plan::{
    build_plan, count_params, size_ratios, thousands, LayerSpec, ModelPlan, PartCounts,
    ReferenceModel, SizeRatios, REFERENCE_MODELS,
};
