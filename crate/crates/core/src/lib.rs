//! Road surface condition classification engine.
//!
//! A from-scratch CNN stack (layers, baseline architecture builder, SGD
//! training loop), an ablation harness over channel growth and dense widths,
//! a weather-fusion stage with classical classifiers, and a synthetic roadside
//! weather station data generator.

pub mod ablation;
pub mod data;
pub mod error;
pub mod fusion;
pub mod model;
pub mod nn;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Scalar, Tensor};
