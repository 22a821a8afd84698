use crate::error::{Error, Result};
use crate::model::ParamBundle;
use crate::tensor::Scalar;
use crate::train::config::TrainConfig;

/// One SGD step, in place.
///
/// `v ← μv − ηg`, then `θ ← θ + μv − ηg` with Nesterov, or `θ ← θ + v` without.
pub fn sgd_nesterov_step<T: Scalar>(
    params: &mut ParamBundle<T>,
    grads: &ParamBundle<T>,
    velocity: &mut ParamBundle<T>,
    config: &TrainConfig,
) -> Result<()> {
    let n = params.layers.len();
    if grads.layers.len() != n || velocity.layers.len() != n {
        return Err(Error::shape(format!(
            "sgd step: {n} parameter layers, {} gradient layers, {} velocity layers",
            grads.layers.len(),
            velocity.layers.len()
        )));
    }
    let lr = T::from_f64_lossy(config.learning_rate);
    let mu = T::from_f64_lossy(config.momentum);
    let triples = params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(velocity.tensors_mut());
    for ((p, g), v) in triples {
        if p.shape() != g.shape() || p.shape() != v.shape() {
            return Err(Error::shape(format!(
                "sgd step: parameter {:?}, gradient {:?}, velocity {:?}",
                p.shape(),
                g.shape(),
                v.shape()
            )));
        }
        let (p, g, v) = (p.data_mut(), g.data(), v.data_mut());
        for i in 0..p.len() {
            let step = lr * g[i];
            v[i] = mu * v[i] - step;
            p[i] = if config.nesterov {
                p[i] + mu * v[i] - step
            } else {
                p[i] + v[i]
            };
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LayerParams;
    use crate::Tensor;

    fn bundle(w: f64, b: f64) -> ParamBundle<f64> {
        ParamBundle {
            layers: vec![LayerParams {
                weights: Tensor::from_vec(vec![w]),
                bias: Tensor::from_vec(vec![b]),
            }],
        }
    }

    #[test]
    fn closed_form_example() {
        let mut p = bundle(1.0, 1.0);
        let mut v = bundle(0.0, 0.0);
        let cfg = TrainConfig::default();
        sgd_nesterov_step(&mut p, &bundle(2.0, 2.0), &mut v, &cfg).unwrap();
        assert!((v.layers[0].weights.data()[0] + 0.002).abs() < 1e-15);
        assert!((p.layers[0].weights.data()[0] - 0.9962).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = bundle(0.3, -0.7);
        let mut v = bundle(0.0, 0.0);
        sgd_nesterov_step(&mut p, &bundle(0.0, 0.0), &mut v, &TrainConfig::default()).unwrap();
        assert_eq!(p, bundle(0.3, -0.7));
    }

    #[test]
    fn zero_momentum_is_plain_sgd() {
        for nesterov in [true, false] {
            let cfg = TrainConfig {
                momentum: 0.0,
                nesterov,
                learning_rate: 0.1,
                ..Default::default()
            };
            let mut p = bundle(1.0, 0.0);
            let mut v = bundle(0.5, 0.5);
            sgd_nesterov_step(&mut p, &bundle(3.0, -1.0), &mut v, &cfg).unwrap();
            assert_eq!(p, bundle(1.0 - 0.1 * 3.0, 0.1));
        }
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut p = bundle(1.0, 1.0);
        let mut v = bundle(0.0, 0.0);
        let mut g = bundle(0.0, 0.0);
        g.layers[0].weights = Tensor::from_vec(vec![0.0, 0.0]);
        assert!(sgd_nesterov_step(&mut p, &g, &mut v, &TrainConfig::default()).is_err());
    }
}
