//! Reference implementations shared by the integration tests. Everything
//! here is written independently of the library's layer code.
#![allow(dead_code)]

pub mod gradcheck;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsc_core::Tensor;

pub const FD_EPS: f64 = 1e-3;
pub const FD_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Values that are pairwise at least 0.01 apart, so ±eps perturbations never
/// cross a max-pool tie.
pub fn tie_free_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - n as f64 * 0.005).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        vals.swap(i, j);
    }
    Tensor::new(shape.to_vec(), vals).unwrap()
}

/// Six nested loops over (y, x, o, ky, kx, c) with explicit zero padding.
pub fn conv_reference(input: &Tensor<f64>, weights: &Tensor<f64>, bias: &Tensor<f64>) -> Vec<f64> {
    let (h, w, ci) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let co = weights.shape()[3];
    let at = |y: i64, x: i64, c: usize| -> f64 {
        if y < 0 || x < 0 || y >= h as i64 || x >= w as i64 {
            0.0
        } else {
            input.data()[(y as usize * w + x as usize) * ci + c]
        }
    };
    let mut out = vec![0.0; h * w * co];
    for y in 0..h {
        for x in 0..w {
            for o in 0..co {
                let mut acc = bias.data()[o];
                for ky in 0..3 {
                    for kx in 0..3 {
                        for c in 0..ci {
                            let wv = weights.data()[((ky * 3 + kx) * ci + c) * co + o];
                            acc += wv * at(y as i64 + ky as i64 - 1, x as i64 + kx as i64 - 1, c);
                        }
                    }
                }
                out[(y * w + x) * co + o] = acc;
            }
        }
    }
    out
}

pub fn maxpool_reference(input: &Tensor<f64>) -> Vec<f64> {
    let (h, w, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let mut out = Vec::new();
    for oy in 0..h / 2 {
        for ox in 0..w / 2 {
            for ch in 0..c {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        m = m.max(input.data()[((2 * oy + dy) * w + 2 * ox + dx) * c + ch]);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

/// Central difference of `f` with respect to each element of `x`.
pub fn numeric_grad(x: &Tensor<f64>, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + FD_EPS;
            let up = f(&probe);
            probe.data_mut()[i] = orig - FD_EPS;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * FD_EPS)
        })
        .collect()
}

/// Relative error with a small floor on the denominator for near-zero entries.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force per-class tallies: (precision, recall, f1, support) for each class.
pub fn tally_f1(truth: &[usize], pred: &[usize], k: usize) -> Vec<(f64, f64, f64, usize)> {
    (0..k)
        .map(|c| {
            let mut tp = 0;
            let mut fp = 0;
            let mut fneg = 0;
            for (&t, &p) in truth.iter().zip(pred) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fneg += 1,
                    _ => {}
                }
            }
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (precision, recall, f1, tp + fneg)
        })
        .collect()
}
