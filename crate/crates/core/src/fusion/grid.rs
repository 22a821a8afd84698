//! Exhaustive grid search scored by stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::classifier::ClassifierSpec;
use crate::fusion::forest::ForestParams;
use crate::fusion::metrics::confusion_and_f1;
use crate::fusion::svm::SvmParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Accuracy,
    MacroF1,
    WeightedF1,
}

impl Scorer {
    pub fn score(self, truth: &[usize], pred: &[usize], n_classes: usize) -> Result<f64> {
        let r = confusion_and_f1(truth, pred, n_classes)?;
        Ok(match self {
            Scorer::Accuracy => r.accuracy,
            Scorer::MacroF1 => r.macro_f1,
            Scorer::WeightedF1 => r.weighted_f1,
        })
    }
}

/// Fold index of every sample. Each class is shuffled and dealt round-robin,
/// continuing the rotation across classes so fold sizes stay balanced.
pub fn stratified_folds(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::config(format!("k_folds must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    for f in 0..k {
        for c in 0..n_classes {
            let in_data = labels.contains(&c);
            let in_fold = labels.iter().zip(&fold).any(|(&l, &g)| l == c && g == f);
            if in_data && !in_fold {
                return Err(Error::input(format!("fold {f} has no samples of class {c}")));
            }
        }
    }
    Ok(fold)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best_index: usize,
    pub best: ClassifierSpec,
    /// Mean CV score per cell, in grid order.
    pub mean_scores: Vec<f64>,
    pub fold_scores: Vec<Vec<f64>>,
    pub fits: usize,
}

/// Scores every cell on the same folds. The best mean wins; ties go to the
/// earliest cell.
pub fn grid_search_cv(
    grid: &[ClassifierSpec],
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    k_folds: usize,
    scorer: Scorer,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::config("grid search needs at least one cell"));
    }
    if x.len() != y.len() {
        return Err(Error::input(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    let folds = stratified_folds(y, n_classes, k_folds, seed)?;
    let mut fits = 0;
    let mut fold_scores = Vec::with_capacity(grid.len());
    for cell in grid {
        let mut scores = Vec::with_capacity(k_folds);
        for f in 0..k_folds {
            let (mut xt, mut yt, mut xv, mut yv) = (vec![], vec![], vec![], vec![]);
            for i in 0..x.len() {
                if folds[i] == f {
                    xv.push(x[i].clone());
                    yv.push(y[i]);
                } else {
                    xt.push(x[i].clone());
                    yt.push(y[i]);
                }
            }
            let model = cell.fit(&xt, &yt, n_classes)?;
            fits += 1;
            scores.push(scorer.score(&yv, &model.predict_all(&xv), n_classes)?);
        }
        log::debug!("grid cell {} {}: {:?}", cell.name(), cell.describe(), scores);
        fold_scores.push(scores);
    }
    let mean_scores: Vec<f64> = fold_scores
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let mut best_index = 0;
    for (i, &s) in mean_scores.iter().enumerate() {
        if s > mean_scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_index,
        best: grid[best_index].clone(),
        mean_scores,
        fold_scores,
        fits,
    })
}

pub fn default_rf_grid(seed: u64) -> Vec<ClassifierSpec> {
    let mut g = Vec::new();
    for n_trees in [10, 50, 100] {
        for depth in [3, 6, 9] {
            for leaf in [1, 4, 8] {
                g.push(ClassifierSpec::RandomForest(ForestParams {
                    n_trees,
                    max_depth: Some(depth),
                    min_samples_leaf: leaf,
                    seed,
                    ..Default::default()
                }));
            }
        }
    }
    g
}

pub fn default_svm_grid() -> Vec<ClassifierSpec> {
    let mut g = Vec::new();
    for c in [1.0, 10.0, 100.0] {
        for gamma in [0.01, 0.1, 1.0] {
            g.push(ClassifierSpec::Svm(SvmParams {
                c,
                gamma,
                ..Default::default()
            }));
        }
    }
    g
}

pub fn default_nb_grid() -> Vec<ClassifierSpec> {
    [1e-9, 1e-3, 0.01]
        .into_iter()
        .map(|var_smoothing| ClassifierSpec::NaiveBayes { var_smoothing })
        .collect()
}
