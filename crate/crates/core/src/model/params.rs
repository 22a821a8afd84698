use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::plan::{LayerSpec, ModelPlan};
use crate::tensor::{Scalar, Tensor};

/// Weight and bias of one trainable layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T: Scalar = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Parameters of every trainable layer, in plan order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBundle<T: Scalar = f32> {
    pub layers: Vec<LayerParams<T>>,
}

fn layer_shapes(spec: &LayerSpec) -> Option<(Vec<usize>, usize)> {
    match *spec {
        LayerSpec::Conv3x3 {
            in_channels,
            out_channels,
        } => Some((vec![3, 3, in_channels, out_channels], out_channels)),
        LayerSpec::Dense { n_in, n_out } => Some((vec![n_in, n_out], n_out)),
        _ => None,
    }
}

fn fan_in(spec: &LayerSpec) -> usize {
    match *spec {
        LayerSpec::Conv3x3 { in_channels, .. } => 9 * in_channels,
        LayerSpec::Dense { n_in, .. } => n_in,
        _ => 1,
    }
}

impl<T: Scalar> ParamBundle<T> {
    pub fn zeros_for(plan: &ModelPlan) -> Self {
        let layers = plan
            .trainable()
            .filter_map(layer_shapes)
            .map(|(w, b)| LayerParams {
                weights: Tensor::zeros(&w),
                bias: Tensor::zeros(&[b]),
            })
            .collect();
        ParamBundle { layers }
    }

    pub fn zeros_like(&self) -> Self {
        ParamBundle {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: Tensor::zeros(l.weights.shape()),
                    bias: Tensor::zeros(l.bias.shape()),
                })
                .collect(),
        }
    }

    /// Checks that every tensor has the shape `plan` requires.
    pub fn check_against(&self, plan: &ModelPlan) -> Result<()> {
        let specs: Vec<_> = plan.trainable().collect();
        if specs.len() != self.layers.len() {
            return Err(Error::shape(format!(
                "plan has {} trainable layers, bundle has {}",
                specs.len(),
                self.layers.len()
            )));
        }
        for (i, (spec, layer)) in specs.iter().zip(&self.layers).enumerate() {
            let (w, b) = layer_shapes(spec).expect("trainable layer");
            if layer.weights.shape() != w.as_slice() || layer.bias.shape() != [b] {
                return Err(Error::shape(format!(
                    "layer {i}: expected weights {w:?} / bias [{b}], got {:?} / {:?}",
                    layer.weights.shape(),
                    layer.bias.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn add_assign(&mut self, other: &ParamBundle<T>) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::shape("parameter bundles have different layer counts"));
        }
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            t.scale(factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.data().iter().all(|v| v.is_finite()))
    }
}

impl ParamBundle<f32> {
    /// FNV-1a over the raw bits of every parameter.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for v in t.data() {
                for b in v.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// He-normal weights (`std = sqrt(2 / fan_in)`), zero biases.
pub fn init_params(plan: &ModelPlan, seed: u64) -> ParamBundle<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = plan
        .trainable()
        .map(|spec| {
            let (w_shape, b_len) = layer_shapes(spec).expect("trainable layer");
            let std = (2.0 / fan_in(spec) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            let n: usize = w_shape.iter().product();
            let data: Vec<f32> = (0..n).map(|_| normal.sample(&mut rng) as f32).collect();
            LayerParams {
                weights: Tensor::new(w_shape, data).expect("shape matches"),
                bias: Tensor::zeros(&[b_len]),
            }
        })
        .collect();
    ParamBundle { layers }
}
