//! 3×3, stride 1, zero-padded ("same") convolution over H×W×C tensors.
//!
//! Weights are laid out `(3, 3, C_in, C_out)` row-major, which is exactly a
//! `(9·C_in) × C_out` matrix over im2col patches.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Input saved by [`conv3x3_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ConvCache<T: Scalar> {
    pub input: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct ConvGrads<T: Scalar> {
    /// `None` when the caller did not ask for the input gradient.
    pub input: Option<Tensor<T>>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Number of trainable scalars in a conv layer.
pub fn conv3x3_param_count(c_in: usize, c_out: usize) -> usize {
    9 * c_in * c_out + c_out
}

fn check_shapes<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(usize, usize, usize, usize)> {
    let &[h, w, c_in] = input.shape() else {
        return Err(Error::shape(format!(
            "conv input must be H×W×C, got {:?}",
            input.shape()
        )));
    };
    let &[kh, kw, wc_in, c_out] = weights.shape() else {
        return Err(Error::shape(format!(
            "conv weights must be 3×3×C_in×C_out, got {:?}",
            weights.shape()
        )));
    };
    if kh != 3 || kw != 3 {
        return Err(Error::shape(format!("conv kernel must be 3×3, got {kh}×{kw}")));
    }
    if wc_in != c_in {
        return Err(Error::shape(format!(
            "conv C_in: input has {c_in} channels, weights expect {wc_in}"
        )));
    }
    if bias.shape() != [c_out] {
        return Err(Error::shape(format!(
            "conv bias: expected length C_out={c_out}, got {:?}",
            bias.shape()
        )));
    }
    Ok((h, w, c_in, c_out))
}

fn im2col<T: Scalar>(input: &[T], h: usize, w: usize, c: usize) -> Vec<T> {
    let k = 9 * c;
    let mut patches = vec![T::zero(); h * w * k];
    for y in 0..h {
        for x in 0..w {
            let row = &mut patches[(y * w + x) * k..(y * w + x + 1) * k];
            for ky in 0..3 {
                let sy = y + ky;
                if sy == 0 || sy > h {
                    continue;
                }
                let sy = sy - 1;
                for kx in 0..3 {
                    let sx = x + kx;
                    if sx == 0 || sx > w {
                        continue;
                    }
                    let sx = sx - 1;
                    let src = &input[(sy * w + sx) * c..(sy * w + sx + 1) * c];
                    row[(ky * 3 + kx) * c..(ky * 3 + kx + 1) * c].copy_from_slice(src);
                }
            }
        }
    }
    patches
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

pub fn conv3x3_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (h, w, c_in, c_out) = check_shapes(input, weights, bias)?;
    let k = 9 * c_in;
    let patches = im2col(input.data(), h, w, c_in);
    let wd = weights.data();
    let mut out = vec![T::zero(); h * w * c_out];
    for (prow, orow) in patches.chunks_exact(k).zip(out.chunks_exact_mut(c_out)) {
        orow.copy_from_slice(bias.data());
        for (ki, &a) in prow.iter().enumerate() {
            if a != T::zero() {
                axpy(a, &wd[ki * c_out..(ki + 1) * c_out], orow);
            }
        }
    }
    Tensor::new(vec![h, w, c_out], out)
}

/// Gradients of a scalar loss with respect to input, weights and bias.
pub fn conv3x3_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    cache: &ConvCache<T>,
    weights: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    let input = &cache.input;
    let &[h, w, c_in] = input.shape() else {
        return Err(Error::shape("conv cache does not hold an H×W×C input"));
    };
    let c_out = match weights.shape() {
        &[3, 3, wc, co] if wc == c_in => co,
        s => {
            return Err(Error::shape(format!(
                "conv weights {s:?} do not match cached input channels {c_in}"
            )))
        }
    };
    if grad_out.shape() != [h, w, c_out] {
        return Err(Error::shape(format!(
            "conv grad_out: expected {:?}, got {:?}",
            [h, w, c_out],
            grad_out.shape()
        )));
    }
    let k = 9 * c_in;
    let g = grad_out.data();
    let wd = weights.data();

    let mut gb = vec![T::zero(); c_out];
    for grow in g.chunks_exact(c_out) {
        for (b, &v) in gb.iter_mut().zip(grow) {
            *b += v;
        }
    }

    let patches = im2col(input.data(), h, w, c_in);
    let mut gw = vec![T::zero(); k * c_out];
    for (prow, grow) in patches.chunks_exact(k).zip(g.chunks_exact(c_out)) {
        for (ki, &a) in prow.iter().enumerate() {
            if a != T::zero() {
                axpy(a, grow, &mut gw[ki * c_out..(ki + 1) * c_out]);
            }
        }
    }

    let grad_input = if need_input_grad {
        // Transposed weights: row o holds the 9·C_in taps feeding output channel o.
        let mut wt = vec![T::zero(); c_out * k];
        for ki in 0..k {
            for o in 0..c_out {
                wt[o * k + ki] = wd[ki * c_out + o];
            }
        }
        let mut gi = vec![T::zero(); h * w * c_in];
        for y in 0..h {
            for x in 0..w {
                let grow = &g[(y * w + x) * c_out..(y * w + x + 1) * c_out];
                for (o, &gv) in grow.iter().enumerate() {
                    if gv == T::zero() {
                        continue;
                    }
                    let taps = &wt[o * k..(o + 1) * k];
                    for ky in 0..3 {
                        let sy = y + ky;
                        if sy == 0 || sy > h {
                            continue;
                        }
                        let sy = sy - 1;
                        for kx in 0..3 {
                            let sx = x + kx;
                            if sx == 0 || sx > w {
                                continue;
                            }
                            let sx = sx - 1;
                            let t = (ky * 3 + kx) * c_in;
                            axpy(
                                gv,
                                &taps[t..t + c_in],
                                &mut gi[(sy * w + sx) * c_in..(sy * w + sx + 1) * c_in],
                            );
                        }
                    }
                }
            }
        }
        Some(Tensor::new(vec![h, w, c_in], gi)?)
    } else {
        None
    };

    Ok(ConvGrads {
        input: grad_input,
        weights: Tensor::new(vec![3, 3, c_in, c_out], gw)?,
        bias: Tensor::new(vec![c_out], gb)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_kernel(c: usize) -> Tensor<f64> {
        let mut w = Tensor::zeros(&[3, 3, c, c]);
        for ch in 0..c {
            // center tap (1,1), channel ch -> ch
            w.data_mut()[((3 + 1) * c + ch) * c + ch] = 1.0;
        }
        w
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let input = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = conv3x3_forward(&input, &identity_kernel(1), &Tensor::zeros(&[1])).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn channel_mismatch_names_dimension() {
        let input = Tensor::<f64>::zeros(&[4, 4, 2]);
        let w = Tensor::<f64>::zeros(&[3, 3, 3, 4]);
        let err = conv3x3_forward(&input, &w, &Tensor::zeros(&[4])).unwrap_err();
        assert!(err.to_string().contains("C_in"), "{err}");
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let input = Tensor::new(vec![3, 3, 2], (0..18).map(|v| v as f64 * 0.1).collect()).unwrap();
        let w = Tensor::filled(&[3, 3, 2, 2], 0.3);
        let cache = ConvCache { input };
        let g = conv3x3_backward(&Tensor::zeros(&[3, 3, 2]), &cache, &w, true).unwrap();
        assert!(g.weights.data().iter().all(|&v| v == 0.0));
        assert!(g.bias.data().iter().all(|&v| v == 0.0));
        assert!(g.input.unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_passes_gradient_through() {
        let input = Tensor::new(vec![4, 4, 1], (0..16).map(|v| v as f64).collect()).unwrap();
        let grad = Tensor::new(vec![4, 4, 1], (0..16).map(|v| (v as f64) - 7.5).collect()).unwrap();
        let g = conv3x3_backward(&grad, &ConvCache { input }, &identity_kernel(1), true).unwrap();
        assert_eq!(g.input.unwrap(), grad);
    }

    #[test]
    fn layer_param_count() {
        assert_eq!(conv3x3_param_count(3, 16), 448);
    }
}
