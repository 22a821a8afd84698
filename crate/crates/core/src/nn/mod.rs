//! Layer primitives with hand-written forward and backward passes.
//!
//! Every layer works on a single sample laid out H×W×C (or a flat vector for
//! the dense stack). Batching is done by the training loop.

mod activation;
mod conv;
mod dense;
mod dropout;
mod loss;
mod pool;

pub use activation::{relu, relu_backward};
pub use conv::{conv3x3_backward, conv3x3_forward, conv3x3_param_count, ConvCache, ConvGrads};
pub use dense::{dense_backward, dense_forward, dense_param_count, DenseGrads};
pub use dropout::{check_rate, dropout_backward, dropout_forward, DropoutCache, Mode};
pub use loss::{softmax, softmax_crossentropy, softmax_f64, SoftmaxLoss};
pub use pool::{maxpool2x2_backward, maxpool2x2_forward, PoolMask};
