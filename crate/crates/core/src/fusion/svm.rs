//! RBF-kernel support vector machine trained by SMO with maximal-violating-
//! pair working-set selection; multiclass by one-vs-one voting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::naive_bayes::check_matrix;

const TAU: f64 = 1e-12;
/// Rows above this count are recomputed on demand instead of cached.
const FULL_KERNEL_LIMIT: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 100.0,
            gamma: 0.1,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-gamma * d2).exp()
}

/// One binary machine: `f(x) = Σ coef_i K(sv_i, x) − rho`, positive means
/// `positive_class`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub positive_class: usize,
    pub negative_class: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i α_i`, each in `[-C, C]`.
    pub dual_coef: Vec<f64>,
    /// Row indices of the support vectors in the training matrix.
    pub support_indices: Vec<usize>,
    pub rho: f64,
    pub gamma: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &a)| a * rbf(sv, x, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub machines: Vec<BinarySvm>,
    pub n_classes: usize,
    pub params: SvmParams,
}

impl SvmModel {
    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    /// One-vs-one majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for m in &self.machines {
            let c = if m.decision(x) > 0.0 {
                m.positive_class
            } else {
                m.negative_class
            };
            votes[c] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }
}

struct Kernel<'a> {
    x: Vec<&'a [f64]>,
    gamma: f64,
    full: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(x: Vec<&'a [f64]>, gamma: f64) -> Self {
        let n = x.len();
        let full = (n <= FULL_KERNEL_LIMIT).then(|| {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rbf(x[i], x[j], gamma);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Kernel { x, gamma, full }
    }

    fn row(&self, i: usize, out: &mut Vec<f64>) {
        let n = self.x.len();
        out.clear();
        match &self.full {
            Some(k) => out.extend_from_slice(&k[i * n..(i + 1) * n]),
            None => out.extend(self.x.iter().map(|xj| rbf(self.x[i], xj, self.gamma))),
        }
    }
}

struct BinaryFit {
    alpha: Vec<f64>,
    rho: f64,
    converged: bool,
    iterations: usize,
}

/// Solves `min ½αᵀQα − Σα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0` with `Q_ij = y_i y_j K_ij`.
fn smo(kernel: &Kernel, y: &[f64], params: &SvmParams) -> BinaryFit {
    let n = y.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let (mut ki, mut kj) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut iterations = 0;
    let mut converged = false;
    let up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    while iterations < params.max_iter {
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        kernel.row(i, &mut ki);
        kernel.row(j, &mut kj);
        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let quad = (ki[i] + kj[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (ki[i] + kj[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    // rho: mean of y_t G_t over free vectors, else the midpoint of the feasible interval.
    let (mut sum, mut nfree) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            nfree += 1;
        }
    }
    let rho = if nfree > 0 { sum / nfree as f64 } else { (ub + lb) / 2.0 };
    BinaryFit {
        alpha,
        rho,
        converged,
        iterations,
    }
}

pub fn svm_fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &SvmParams) -> Result<SvmModel> {
    check_matrix(x, y, n_classes)?;
    if !(params.c > 0.0 && params.gamma > 0.0 && params.tol > 0.0) {
        return Err(Error::config("SVM needs C > 0, gamma > 0 and tol > 0"));
    }
    let present: Vec<usize> = (0..n_classes).filter(|c| y.contains(c)).collect();
    if present.len() < 2 {
        return Err(Error::input("SVM needs at least two classes in the training data"));
    }
    let mut machines = Vec::new();
    for (a_pos, &a) in present.iter().enumerate() {
        for &b in &present[a_pos + 1..] {
            let idx: Vec<usize> = (0..x.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let yy: Vec<f64> = idx.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
            let kernel = Kernel::new(idx.iter().map(|&i| x[i].as_slice()).collect(), params.gamma);
            let fit = smo(&kernel, &yy, params);
            if !fit.converged {
                log::warn!(
                    "SVM {a} vs {b} stopped after {} iterations without meeting tol {}",
                    fit.iterations,
                    params.tol
                );
            }
            let sv: Vec<usize> = (0..idx.len()).filter(|&t| fit.alpha[t] > 0.0).collect();
            machines.push(BinarySvm {
                positive_class: a,
                negative_class: b,
                support_vectors: sv.iter().map(|&t| x[idx[t]].clone()).collect(),
                dual_coef: sv.iter().map(|&t| yy[t] * fit.alpha[t]).collect(),
                support_indices: sv.iter().map(|&t| idx[t]).collect(),
                rho: fit.rho,
                gamma: params.gamma,
                converged: fit.converged,
                iterations: fit.iterations,
            });
        }
    }
    Ok(SvmModel {
        machines,
        n_classes,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_bisector() {
        let x = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let m = svm_fit(&x, &[0, 1], 2, &SvmParams::default()).unwrap();
        let mid = [2.0, 0.5];
        assert!(m.machines[0].decision(&mid).abs() < 1e-6);
        assert_eq!(m.predict(&x[0]), 0);
        assert_eq!(m.predict(&x[1]), 1);
    }

    #[test]
    fn single_class_rejected() {
        assert!(svm_fit(&[vec![0.0], vec![1.0]], &[1, 1], 3, &SvmParams::default()).is_err());
    }

    #[test]
    fn iteration_cap_sets_flag() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let p = SvmParams {
            max_iter: 1,
            ..Default::default()
        };
        assert!(!svm_fit(&x, &y, 2, &p).unwrap().converged());
    }
}
