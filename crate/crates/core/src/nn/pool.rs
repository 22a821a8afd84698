//! 2×2 max pooling, stride 2, no padding.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Flat input index of the winning element for every output element.
///
/// Within a window the first maximum in row-major order wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolMask {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolMask {
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }
}

pub fn maxpool2x2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolMask)> {
    let &[h, w, c] = input.shape() else {
        return Err(Error::shape(format!(
            "maxpool input must be H×W×C, got {:?}",
            input.shape()
        )));
    };
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!(
            "maxpool needs even spatial dims, got H={h} W={w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let src = input.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut argmax = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = ((2 * oy) * w + 2 * ox) * c + ch;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                    if src[idx] > src[best] {
                        best = idx;
                    }
                }
                out.push(src[best]);
                argmax.push(best);
            }
        }
    }
    let output_shape = vec![oh, ow, c];
    Ok((
        Tensor::new(output_shape.clone(), out)?,
        PoolMask {
            input_shape: input.shape().to_vec(),
            output_shape,
            argmax,
        },
    ))
}

pub fn maxpool2x2_backward<T: Scalar>(grad_out: &Tensor<T>, mask: &PoolMask) -> Result<Tensor<T>> {
    if grad_out.shape() != mask.output_shape.as_slice() {
        return Err(Error::shape(format!(
            "maxpool grad_out {:?} does not match mask output {:?}",
            grad_out.shape(),
            mask.output_shape
        )));
    }
    let mut grad = Tensor::zeros(&mask.input_shape);
    let gd = grad.data_mut();
    for (&idx, &g) in mask.argmax.iter().zip(grad_out.data()) {
        gd[idx] += g;
    }
    Ok(grad)
}
