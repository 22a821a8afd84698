use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian naive Bayes. Every per-class variance is widened by
/// `smoothing × (largest feature variance over the whole training set)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub smoothing: f64,
    /// The amount added to every variance.
    pub epsilon: f64,
}

pub(crate) fn check_matrix(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::input("empty training set"));
    }
    if x.len() != y.len() {
        return Err(Error::input(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::shape("feature rows must share a nonzero width"));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::input(format!("label {bad} outside [0, {n_classes})")));
    }
    Ok(d)
}

pub fn nb_fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, smoothing: f64) -> Result<GaussianNb> {
    let d = check_matrix(x, y, n_classes)?;
    if !(smoothing >= 0.0) {
        return Err(Error::config("variance smoothing must be nonnegative"));
    }
    let n = x.len() as f64;
    let overall_mean: Vec<f64> = (0..d).map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let max_var = (0..d)
        .map(|k| x.iter().map(|r| (r[k] - overall_mean[k]).powi(2)).sum::<f64>() / n)
        .fold(0.0, f64::max);
    let epsilon = smoothing * max_var;

    let mut priors = Vec::with_capacity(n_classes);
    let mut means = Vec::with_capacity(n_classes);
    let mut variances = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        if rows.is_empty() {
            return Err(Error::input(format!("class {c} absent from training data")));
        }
        let m = rows.len() as f64;
        let mu: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / m).collect();
        let var: Vec<f64> = (0..d)
            .map(|k| rows.iter().map(|r| (r[k] - mu[k]).powi(2)).sum::<f64>() / m + epsilon)
            .collect();
        if let Some(k) = var.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::input(format!(
                "class {c} feature {k} has zero variance; increase smoothing"
            )));
        }
        priors.push(m / n);
        means.push(mu);
        variances.push(var);
    }
    Ok(GaussianNb {
        priors,
        means,
        variances,
        smoothing,
        epsilon,
    })
}

impl GaussianNb {
    /// Unnormalized log posterior per class.
    pub fn log_scores(&self, x: &[f64]) -> Vec<f64> {
        self.priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(&p, (mu, var))| {
                p.ln()
                    + x.iter()
                        .zip(mu.iter().zip(var))
                        .map(|(&v, (&m, &s2))| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m).powi(2) / s2))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        normalize_log(&self.log_scores(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.log_scores(x))
    }
}

/// Softmax of log scores (shift-invariant).
pub fn normalize_log(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
