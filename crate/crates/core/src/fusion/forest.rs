//! CART trees (Gini impurity) and a bootstrap random forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::naive_bayes::check_matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// ⌈√d⌉ candidates per split.
    Sqrt,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: Some(6),
            min_samples_leaf: 4,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node arena; node 0 is the root. `x[feature] <= threshold` goes left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

fn plurality(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    n_candidates: usize,
    nodes: Vec<Node>,
    depth: usize,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl Grower<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best threshold on one feature, or `None` if no split leaves
    /// `min_leaf` samples on both sides.
    fn best_on_feature(&self, idx: &mut [usize], feature: usize) -> Option<BestSplit> {
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let n = idx.len();
        let total = self.class_counts(idx);
        let mut left = vec![0usize; self.n_classes];
        let mut best: Option<BestSplit> = None;
        for pos in 1..n {
            left[self.y[idx[pos - 1]]] += 1;
            let (lo, hi) = (self.x[idx[pos - 1]][feature], self.x[idx[pos]][feature]);
            if lo == hi || pos < self.min_leaf || n - pos < self.min_leaf {
                continue;
            }
            let nr = (n - pos) as f64;
            let right_sq: f64 = total.iter().zip(&left).map(|(t, l)| ((t - l) as f64 / nr).powi(2)).sum();
            let imp = (pos as f64 * gini(&left, pos) + nr * (1.0 - right_sq)) / n as f64;
            if best.as_ref().is_none_or(|b| imp < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(BestSplit {
                    impurity: imp,
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                    n_left: pos,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        self.depth = self.depth.max(depth);
        let me = self.nodes.len();
        let counts = self.class_counts(idx);
        self.nodes.push(Node::Leaf {
            class: plurality(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || self.max_depth.is_some_and(|m| depth >= m) || idx.len() < 2 * self.min_leaf {
            return me;
        }
        let d = self.x[0].len();
        // Draw candidate features in random order; keep drawing past the
        // quota only while no valid split has been found.
        let order: Vec<usize> = sample(rng, d, d).into_vec();
        let mut best: Option<BestSplit> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.n_candidates && best.is_some() {
                break;
            }
            if let Some(s) = self.best_on_feature(idx, f) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else { return me };
        let f = split.feature;
        idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
        let mut right_idx = idx.split_off(split.n_left);
        let left = self.grow(idx, depth + 1, rng);
        let right = self.grow(&mut right_idx, depth + 1, rng);
        self.nodes[me] = Node::Split {
            feature: f,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }
}

pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    sample_idx: Vec<usize>,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let d = x[0].len();
    let n_candidates = match params.max_features {
        MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
        MaxFeatures::All => d,
    };
    let mut g = Grower {
        x,
        y,
        n_classes,
        max_depth: params.max_depth,
        min_leaf: params.min_samples_leaf.max(1),
        n_candidates,
        nodes: Vec::new(),
        depth: 0,
    };
    let mut idx = sample_idx;
    g.grow(&mut idx, 0, rng);
    DecisionTree {
        nodes: g.nodes,
        depth: g.depth,
    }
}

pub fn rf_fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &ForestParams) -> Result<RandomForest> {
    check_matrix(x, y, n_classes)?;
    if params.n_trees == 0 {
        return Err(Error::config("random forest needs at least one tree"));
    }
    let n = x.len();
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let idx = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, n_classes, params, idx, &mut rng)
        })
        .collect();
    Ok(RandomForest { trees, n_classes })
}

impl RandomForest {
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut v = vec![0; self.n_classes];
        for t in &self.trees {
            v[t.predict(x)] += 1;
        }
        v
    }

    /// Plurality vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        plurality(&self.votes(x))
    }
}
