//! Inverted dropout: survivors are scaled by `1/(1-rate)` at train time so
//! evaluation is the identity.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-element multiplier applied in the forward pass; `None` means identity.
#[derive(Clone, Debug)]
pub struct DropoutCache<T: Scalar> {
    scale: Option<Vec<T>>,
}

impl<T: Scalar> DropoutCache<T> {
    pub fn identity() -> Self {
        DropoutCache { scale: None }
    }
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    Ok(())
}

pub fn dropout_forward<T: Scalar, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<T>, DropoutCache<T>)> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), DropoutCache { scale: None }));
    }
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    let scale: Vec<T> = (0..input.len())
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let data = input.data().iter().zip(&scale).map(|(&x, &s)| x * s).collect();
    Ok((
        Tensor::new(input.shape().to_vec(), data)?,
        DropoutCache { scale: Some(scale) },
    ))
}

pub fn dropout_backward<T: Scalar>(grad_out: &Tensor<T>, cache: &DropoutCache<T>) -> Result<Tensor<T>> {
    match &cache.scale {
        None => Ok(grad_out.clone()),
        Some(scale) if scale.len() == grad_out.len() => {
            let data = grad_out.data().iter().zip(scale).map(|(&g, &s)| g * s).collect();
            Tensor::new(grad_out.shape().to_vec(), data)
        }
        Some(scale) => Err(Error::shape(format!(
            "dropout grad has {} elements, mask has {}",
            grad_out.len(),
            scale.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::from_vec(vec![0.1f32, -3.0, 7.25, 1e-30]);
        assert_eq!(dropout_forward(&x, 0.0, Mode::Train, &mut rng).unwrap().0, x);
        for rate in [0.0, 0.3, 0.5, 0.99] {
            let (y, _) = dropout_forward(&x, rate, Mode::Eval, &mut rng).unwrap();
            let bits: Vec<u32> = y.data().iter().map(|v| v.to_bits()).collect();
            let want: Vec<u32> = x.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits, want);
        }
    }

    #[test]
    fn rate_one_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::from_vec(vec![1.0f32]);
        assert!(dropout_forward(&x, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout_forward(&x, -0.1, Mode::Eval, &mut rng).is_err());
    }

    #[test]
    fn expectation_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Tensor::<f32>::filled(&[1_000_000], 1.0);
        let (y, cache) = dropout_forward(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let mean = y.sum() / y.len() as f64;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
        let g = dropout_backward(&x, &cache).unwrap();
        assert_eq!(g, y);
    }
}
