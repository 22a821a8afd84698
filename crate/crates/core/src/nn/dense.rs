//! Fully connected layer `y = Wᵀx + b` with weights shaped `(n_in, n_out)`.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct DenseGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn dense_param_count(n_in: usize, n_out: usize) -> usize {
    n_in * n_out + n_out
}

fn dims<T: Scalar>(weights: &Tensor<T>, bias: &Tensor<T>) -> Result<(usize, usize)> {
    let &[n_in, n_out] = weights.shape() else {
        return Err(Error::shape(format!(
            "dense weights must be n_in×n_out, got {:?}",
            weights.shape()
        )));
    };
    if bias.shape() != [n_out] {
        return Err(Error::shape(format!(
            "dense bias: expected length n_out={n_out}, got {:?}",
            bias.shape()
        )));
    }
    Ok((n_in, n_out))
}

pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (n_in, n_out) = dims(weights, bias)?;
    if input.len() != n_in {
        return Err(Error::shape(format!(
            "dense n_in: layer expects {n_in} inputs, got {}",
            input.len()
        )));
    }
    let wd = weights.data();
    let mut out = bias.data().to_vec();
    for (i, &x) in input.data().iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&wd[i * n_out..(i + 1) * n_out]) {
            *o += x * wv;
        }
    }
    Tensor::new(vec![n_out], out)
}

/// Returns `(W·g, x⊗g, g)`; the input gradient takes the input's shape.
pub fn dense_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    weights: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    let &[n_in, n_out] = weights.shape() else {
        return Err(Error::shape("dense weights must be rank 2"));
    };
    if input.len() != n_in {
        return Err(Error::shape(format!(
            "dense n_in: cached input has {} elements, weights expect {n_in}",
            input.len()
        )));
    }
    if grad_out.len() != n_out {
        return Err(Error::shape(format!(
            "dense n_out: grad has {} elements, weights produce {n_out}",
            grad_out.len()
        )));
    }
    let g = grad_out.data();
    let wd = weights.data();
    let mut gw = vec![T::zero(); n_in * n_out];
    let mut gx = Vec::with_capacity(n_in);
    for (i, &x) in input.data().iter().enumerate() {
        let row = &wd[i * n_out..(i + 1) * n_out];
        gx.push(row.iter().zip(g).fold(T::zero(), |acc, (&w, &gv)| acc + w * gv));
        if x != T::zero() {
            for (dst, &gv) in gw[i * n_out..(i + 1) * n_out].iter_mut().zip(g) {
                *dst = x * gv;
            }
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(input.shape().to_vec(), gx)?,
        weights: Tensor::new(vec![n_in, n_out], gw)?,
        bias: Tensor::new(vec![n_out], g.to_vec())?,
    })
}
