use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fusion::forest::{rf_fit, ForestParams, RandomForest};
use crate::fusion::naive_bayes::{nb_fit, GaussianNb};
use crate::fusion::svm::{svm_fit, SvmModel, SvmParams};

/// Hyperparameters of one of the three fusion classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    NaiveBayes { var_smoothing: f64 },
    RandomForest(ForestParams),
    Svm(SvmParams),
}

/// Fitted classifier, tagged by variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FusionModel {
    NaiveBayes(GaussianNb),
    RandomForest(RandomForest),
    Svm(SvmModel),
}

impl ClassifierSpec {
    pub fn naive_bayes() -> Self {
        ClassifierSpec::NaiveBayes { var_smoothing: 0.01 }
    }

    pub fn random_forest(seed: u64) -> Self {
        ClassifierSpec::RandomForest(ForestParams {
            seed,
            ..Default::default()
        })
    }

    pub fn svm() -> Self {
        ClassifierSpec::Svm(SvmParams::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::NaiveBayes { .. } => "naive_bayes",
            ClassifierSpec::RandomForest(_) => "random_forest",
            ClassifierSpec::Svm(_) => "svm",
        }
    }

    /// Compact description of the hyperparameters.
    pub fn describe(&self) -> String {
        match self {
            ClassifierSpec::NaiveBayes { var_smoothing } => format!("var_smoothing={var_smoothing}"),
            ClassifierSpec::RandomForest(p) => format!(
                "n_trees={} max_depth={} min_samples_leaf={}",
                p.n_trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_samples_leaf
            ),
            ClassifierSpec::Svm(p) => format!("C={} gamma={}", p.c, p.gamma),
        }
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<FusionModel> {
        Ok(match self {
            ClassifierSpec::NaiveBayes { var_smoothing } => {
                FusionModel::NaiveBayes(nb_fit(x, y, n_classes, *var_smoothing)?)
            }
            ClassifierSpec::RandomForest(p) => FusionModel::RandomForest(rf_fit(x, y, n_classes, p)?),
            ClassifierSpec::Svm(p) => FusionModel::Svm(svm_fit(x, y, n_classes, p)?),
        })
    }
}

impl FusionModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            FusionModel::NaiveBayes(m) => m.predict(x),
            FusionModel::RandomForest(m) => m.predict(x),
            FusionModel::Svm(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Vec<usize> {
        x.iter().map(|r| self.predict(r)).collect()
    }
}
