//! Weather fusion: preprocessing, classical classifiers, cross-validated
//! grid search and confusion-matrix reporting.

mod classifier;
mod experiment;
mod forest;
mod grid;
mod metrics;
mod naive_bayes;
mod preprocess;
mod svm;

pub use classifier::{ClassifierSpec, FusionModel};
pub use experiment::{
    fuse, fusion_experiment, fusion_rows, fusion_rows_csv, read_fusion_csv, write_fusion_csv, FusedFeature, FusionReport,
    FusionRow, ImageOnlyMode, FUSED_FIELDS, FUSION_CSV_HEADER, REPORT_CSV_HEADER,
};
pub use forest::{fit_tree, rf_fit, DecisionTree, ForestParams, MaxFeatures, Node, RandomForest};
pub use grid::{
    default_nb_grid, default_rf_grid, default_svm_grid, grid_search_cv, stratified_folds, GridResult, Scorer,
};
pub use metrics::{confusion_and_f1, ConfusionReport};
pub use naive_bayes::{argmax, nb_fit, normalize_log, GaussianNb};
pub use preprocess::{fit_means, impute_mean, zscore_apply, zscore_fit, PreprocessState, ZScore};
pub use svm::{rbf, svm_fit, BinarySvm, SvmModel, SvmParams};
