//! Finite-difference checks for each layer kind. Each function builds one
//! random instance from `seed` and returns the worst relative error.

use rand::Rng;
use rsc_core::nn::{self, ConvCache, Mode};
use rsc_core::Tensor;

use super::{dot, max_rel_error, numeric_grad, random_tensor, rng, tie_free_tensor};

/// Scalar loss `Σ r ⊙ y` with fixed random `r`.
fn probe_weights(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed ^ 0xabcdef);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn conv(seed: u64) -> f64 {
    let mut r = rng(seed);
    let h = r.random_range(2..=6);
    let w = r.random_range(2..=6);
    let ci = r.random_range(1..=3);
    let co = r.random_range(1..=3);
    let x = random_tensor(&mut r, &[h, w, ci]);
    let wt = random_tensor(&mut r, &[3, 3, ci, co]);
    let b = random_tensor(&mut r, &[co]);
    let probe = probe_weights(seed, h * w * co);
    let loss = |x: &Tensor<f64>, wt: &Tensor<f64>, b: &Tensor<f64>| {
        dot(nn::conv3x3_forward(x, wt, b).unwrap().data(), &probe)
    };
    let g_out = Tensor::new(vec![h, w, co], probe.clone()).unwrap();
    let g = nn::conv3x3_backward(&g_out, &ConvCache { input: x.clone() }, &wt, true).unwrap();
    let nx = numeric_grad(&x, |p| loss(p, &wt, &b));
    let nw = numeric_grad(&wt, |p| loss(&x, p, &b));
    let nb = numeric_grad(&b, |p| loss(&x, &wt, p));
    max_rel_error(g.input.unwrap().data(), &nx)
        .max(max_rel_error(g.weights.data(), &nw))
        .max(max_rel_error(g.bias.data(), &nb))
}

pub fn maxpool(seed: u64) -> f64 {
    let mut r = rng(seed);
    let h = 2 * r.random_range(1..=4);
    let w = 2 * r.random_range(1..=4);
    let c = r.random_range(1..=4);
    let x = tie_free_tensor(&mut r, &[h, w, c]);
    let probe = probe_weights(seed, (h / 2) * (w / 2) * c);
    let (_, mask) = nn::maxpool2x2_forward(&x).unwrap();
    let g_out = Tensor::new(vec![h / 2, w / 2, c], probe.clone()).unwrap();
    let g = nn::maxpool2x2_backward(&g_out, &mask).unwrap();
    let n = numeric_grad(&x, |p| dot(nn::maxpool2x2_forward(p).unwrap().0.data(), &probe));
    max_rel_error(g.data(), &n)
}

pub fn dense(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n_in = r.random_range(1..=12);
    let n_out = r.random_range(1..=6);
    let x = random_tensor(&mut r, &[n_in]);
    let wt = random_tensor(&mut r, &[n_in, n_out]);
    let b = random_tensor(&mut r, &[n_out]);
    let probe = probe_weights(seed, n_out);
    let loss = |x: &Tensor<f64>, wt: &Tensor<f64>, b: &Tensor<f64>| {
        dot(nn::dense_forward(x, wt, b).unwrap().data(), &probe)
    };
    let g = nn::dense_backward(&Tensor::from_vec(probe.clone()), &x, &wt).unwrap();
    max_rel_error(g.input.data(), &numeric_grad(&x, |p| loss(p, &wt, &b)))
        .max(max_rel_error(g.weights.data(), &numeric_grad(&wt, |p| loss(&x, p, &b))))
        .max(max_rel_error(g.bias.data(), &numeric_grad(&b, |p| loss(&x, &wt, p))))
}

pub fn relu(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=30);
    // keep every input at least 0.05 from the kink
    let data = (0..n)
        .map(|_| {
            let v: f64 = r.random_range(0.05..1.0);
            if r.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let x = Tensor::new(vec![n], data).unwrap();
    let probe = probe_weights(seed, n);
    let g = nn::relu_backward(&Tensor::from_vec(probe.clone()), &x).unwrap();
    max_rel_error(g.data(), &numeric_grad(&x, |p| dot(nn::relu(p).data(), &probe)))
}

pub fn dropout(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=40);
    let rate = r.random_range(0.0..0.9);
    let x = random_tensor(&mut r, &[n]);
    let probe = probe_weights(seed, n);
    let mask_seed = seed.wrapping_mul(31);
    let (_, cache) = nn::dropout_forward(&x, rate, Mode::Train, &mut rng(mask_seed)).unwrap();
    let g = nn::dropout_backward(&Tensor::from_vec(probe.clone()), &cache).unwrap();
    let num = numeric_grad(&x, |p| {
        let (y, _) = nn::dropout_forward(p, rate, Mode::Train, &mut rng(mask_seed)).unwrap();
        dot(y.data(), &probe)
    });
    max_rel_error(g.data(), &num)
}

pub fn softmax_ce(seed: u64) -> f64 {
    let mut r = rng(seed);
    let k = r.random_range(2..=6);
    let label = r.random_range(0..k);
    let logits = random_tensor(&mut r, &[k]).map(|v| v * 3.0);
    let out = nn::softmax_crossentropy(&logits, label).unwrap();
    let num = numeric_grad(&logits, |p| nn::softmax_crossentropy(p, label).unwrap().loss);
    max_rel_error(out.grad_logits.data(), &num)
}

pub const LAYER_CHECKS: [(&str, fn(u64) -> f64); 6] = [
    ("conv3x3", conv),
    ("maxpool2x2", maxpool),
    ("dense", dense),
    ("relu", relu),
    ("dropout", dropout),
    ("softmax_crossentropy", softmax_ce),
];
