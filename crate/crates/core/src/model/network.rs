//! Runs a [`ModelPlan`] forward and backward for one sample.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::params::{LayerParams, ParamBundle};
use crate::model::plan::{LayerSpec, ModelPlan};
use crate::nn::{self, ConvCache, DropoutCache, Mode, PoolMask};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
enum StepCache<T: Scalar> {
    Conv(ConvCache<T>),
    Pool(PoolMask),
    Relu(Tensor<T>),
    Flatten(Vec<usize>),
    Dense(Tensor<T>),
    Dropout(DropoutCache<T>),
    Softmax,
}

/// Output logits of a forward pass, plus per-layer caches when run in train mode.
#[derive(Clone, Debug)]
pub struct Trace<T: Scalar = f32> {
    pub logits: Tensor<T>,
    caches: Vec<StepCache<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn has_cache(&self) -> bool {
        !self.caches.is_empty()
    }
}

/// Forward pass. In [`Mode::Eval`] no caches are kept and `rng` is unused.
pub fn forward<T: Scalar>(
    plan: &ModelPlan,
    params: &ParamBundle<T>,
    input: &Tensor<T>,
    mode: Mode,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<Trace<T>> {
    if input.shape() != plan.input_shape() {
        return Err(Error::shape(format!(
            "model input: expected {:?}, got {:?}",
            plan.input_shape(),
            input.shape()
        )));
    }
    let keep = mode == Mode::Train;
    let mut caches = Vec::new();
    let mut x = input.clone();
    let mut trainable = params.layers.iter();
    let mut next_params = |what: &str| -> Result<&LayerParams<T>> {
        trainable
            .next()
            .ok_or_else(|| Error::shape(format!("parameter bundle has no tensors for {what}")))
    };
    for spec in plan.layers() {
        match *spec {
            LayerSpec::Conv3x3 { .. } => {
                let p = next_params("conv")?;
                let y = nn::conv3x3_forward(&x, &p.weights, &p.bias)?;
                if keep {
                    caches.push(StepCache::Conv(ConvCache { input: x }));
                }
                x = y;
            }
            LayerSpec::MaxPool2x2 => {
                let (y, mask) = nn::maxpool2x2_forward(&x)?;
                if keep {
                    caches.push(StepCache::Pool(mask));
                }
                x = y;
            }
            LayerSpec::Relu => {
                let y = nn::relu(&x);
                if keep {
                    caches.push(StepCache::Relu(x));
                }
                x = y;
            }
            LayerSpec::Flatten => {
                let shape = x.shape().to_vec();
                let n = x.len();
                x = x.into_reshaped(&[n])?;
                if keep {
                    caches.push(StepCache::Flatten(shape));
                }
            }
            LayerSpec::Dense { .. } => {
                let p = next_params("dense")?;
                let y = nn::dense_forward(&x, &p.weights, &p.bias)?;
                if keep {
                    caches.push(StepCache::Dense(x));
                }
                x = y;
            }
            LayerSpec::Dropout { rate } => {
                let (y, cache) = match (mode, rng.as_deref_mut()) {
                    (Mode::Train, Some(r)) => nn::dropout_forward(&x, rate as f64, mode, r)?,
                    (Mode::Train, None) if rate > 0.0 => {
                        return Err(Error::input("train-mode dropout needs an rng"))
                    }
                    _ => {
                        nn::check_rate(rate as f64)?;
                        (x.clone(), DropoutCache::identity())
                    }
                };
                if keep {
                    caches.push(StepCache::Dropout(cache));
                }
                x = y;
            }
            // Softmax is folded into the loss; logits are returned.
            LayerSpec::Softmax => {
                if keep {
                    caches.push(StepCache::Softmax);
                }
            }
        }
    }
    Ok(Trace { logits: x, caches })
}

/// Class probabilities for one input (eval mode).
pub fn predict<T: Scalar>(plan: &ModelPlan, params: &ParamBundle<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    let trace = forward(plan, params, input, Mode::Eval, None)?;
    Ok(nn::softmax(&trace.logits))
}

/// Backpropagates `grad_logits` through a train-mode trace.
pub fn backward<T: Scalar>(
    plan: &ModelPlan,
    params: &ParamBundle<T>,
    trace: &Trace<T>,
    grad_logits: &Tensor<T>,
) -> Result<ParamBundle<T>> {
    if trace.caches.len() != plan.layers().len() {
        return Err(Error::input(
            "missing forward cache: backward needs a train-mode forward trace",
        ));
    }
    let mut grads: Vec<Option<LayerParams<T>>> = vec![None; params.layers.len()];
    let mut param_idx = params.layers.len();
    let mut g = grad_logits.clone();
    for (pos, (spec, cache)) in plan.layers().iter().zip(&trace.caches).enumerate().rev() {
        match (spec, cache) {
            (LayerSpec::Conv3x3 { .. }, StepCache::Conv(c)) => {
                param_idx -= 1;
                let p = &params.layers[param_idx];
                let need_input = pos > 0;
                let cg = nn::conv3x3_backward(&g, c, &p.weights, need_input)?;
                grads[param_idx] = Some(LayerParams {
                    weights: cg.weights,
                    bias: cg.bias,
                });
                match cg.input {
                    Some(gi) => g = gi,
                    None => break,
                }
            }
            (LayerSpec::MaxPool2x2, StepCache::Pool(mask)) => {
                g = nn::maxpool2x2_backward(&g, mask)?;
            }
            (LayerSpec::Relu, StepCache::Relu(input)) => {
                g = nn::relu_backward(&g, input)?;
            }
            (LayerSpec::Flatten, StepCache::Flatten(shape)) => {
                g = g.into_reshaped(shape)?;
            }
            (LayerSpec::Dense { .. }, StepCache::Dense(input)) => {
                param_idx -= 1;
                let p = &params.layers[param_idx];
                let dg = nn::dense_backward(&g, input, &p.weights)?;
                grads[param_idx] = Some(LayerParams {
                    weights: dg.weights,
                    bias: dg.bias,
                });
                g = dg.input;
            }
            (LayerSpec::Dropout { .. }, StepCache::Dropout(c)) => {
                g = nn::dropout_backward(&g, c)?;
            }
            (LayerSpec::Softmax, StepCache::Softmax) => {}
            _ => return Err(Error::input("forward cache does not match the plan")),
        }
    }
    let layers = grads
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::input("backward did not reach every trainable layer"))?;
    Ok(ParamBundle { layers })
}
