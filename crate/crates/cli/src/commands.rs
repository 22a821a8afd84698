use std::fs;
use std::path::Path;

use rsc_core::ablation::{icf_sweep_points, neuron_schedule, neuron_sweep_points, run_sweep};
use rsc_core::data::{
    dataset_summary, generate_synthetic, join_weather, load_image_dataset, read_weather_csv, write_synthetic,
    LabeledSample,
};
use rsc_core::fusion::{
    default_nb_grid, default_rf_grid, default_svm_grid, fuse, fusion_experiment, fusion_rows, grid_search_cv,
    write_fusion_csv, ClassifierSpec, FusionReport, FusionRow, GridResult, PreprocessState,
};
use rsc_core::model::{build_plan, init_params};
use rsc_core::train::{as_refs, evaluate, overfit_gap, save_model, split_indices, train, write_metrics_csv};
use rsc_core::{Error, Result};

use crate::config::{ClassifierChoice, RunConfig};

pub const MODEL_FILE: &str = "model.wrml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AblationMode {
    Icf,
    Neurons,
}

fn prepare_out(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.write_effective(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Images from `data/<class>/`, joined to `data/weather.csv` when present.
fn load_samples(data: &Path, size: usize, need_weather: bool) -> Result<Vec<LabeledSample>> {
    if !data.is_dir() {
        return Err(Error::io(
            data,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    let report = load_image_dataset(data, size)?;
    if !report.skipped.is_empty() {
        log::warn!("skipped {} unreadable image(s)", report.skipped.len());
    }
    let mut samples = report.samples;
    let weather_path = data.join("weather.csv");
    if weather_path.exists() {
        let table = read_weather_csv(&weather_path)?;
        let j = join_weather(&mut samples, &table);
        log::info!("weather join: {} matched, {} unmatched", j.matched, j.unmatched);
    } else if need_weather {
        return Err(Error::io(
            &weather_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "weather table not found"),
        ));
    }
    Ok(samples)
}

pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.synthetic.validate()?;
    prepare_out(cfg, out)?;
    let data = generate_synthetic(&cfg.synthetic)?;
    write_synthetic(&data, out)?;
    println!("wrote {} images to {}", data.samples.len(), out.display());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let plan = build_plan(&cfg.model)?;
    cfg.train.validate()?;
    cfg.split.validate()?;
    let samples = load_samples(data, cfg.model.input_size, false)?;
    prepare_out(cfg, out)?;
    print!("{}", plan.summary_table());
    write(&out.join("param_summary.txt"), &plan.summary_table())?;

    let outcome = train(&plan, init_params(&plan, cfg.seed), &samples, &cfg.train, &cfg.split)?;
    save_model(&plan, &outcome.params, &out.join(MODEL_FILE))?;
    write_metrics_csv(&out.join("metrics.csv"), &outcome.records)?;

    let last = outcome.records.last().ok_or_else(|| Error::config("training ran zero epochs"))?;
    let test_refs: Vec<&LabeledSample> = outcome.split.test.iter().map(|&i| &samples[i]).collect();
    let test = evaluate(&plan, &outcome.params, &test_refs)?;
    let gap = overfit_gap(&outcome.records)?;
    let summary = format!(
        "metric,value\ntrain_accuracy,{}\nval_accuracy,{}\ntest_accuracy,{}\noverfit_gap,{}\n",
        last.train_accuracy, last.val_accuracy, test.accuracy, gap
    );
    write(&out.join("train_summary.csv"), &summary)?;
    println!(
        "train {:.4}  val {:.4}  test {:.4}  overfit gap {:+.4}",
        last.train_accuracy, last.val_accuracy, test.accuracy, gap
    );
    Ok(())
}

pub fn cmd_ablate(cfg: &RunConfig, data: &Path, out: &Path, mode: AblationMode) -> Result<()> {
    cfg.model.validate()?;
    let points = match mode {
        AblationMode::Icf => icf_sweep_points(&cfg.ablation.icf_values, &cfg.model)?,
        AblationMode::Neurons => {
            let a = &cfg.ablation;
            neuron_sweep_points(&neuron_schedule(&a.neuron_start, &a.neuron_step, a.neuron_floor)?, &cfg.model)
        }
    };
    let samples = load_samples(data, cfg.model.input_size, false)?;
    prepare_out(cfg, out)?;
    let report = run_sweep(&points, &samples, &cfg.train, &cfg.split)?;
    let name = match mode {
        AblationMode::Icf => "ablation_icf.csv",
        AblationMode::Neurons => "ablation_neurons.csv",
    };
    let csv = report.to_csv();
    write(&out.join(name), &csv)?;
    print!("{csv}");
    Ok(())
}

fn grid_for(choice: ClassifierChoice, seed: u64) -> Vec<ClassifierSpec> {
    match choice {
        ClassifierChoice::Nb => default_nb_grid(),
        ClassifierChoice::Rf => default_rf_grid(seed),
        ClassifierChoice::Svm => default_svm_grid(),
    }
}

fn optimum_for(choice: ClassifierChoice, seed: u64) -> ClassifierSpec {
    match choice {
        ClassifierChoice::Nb => ClassifierSpec::naive_bayes(),
        ClassifierChoice::Rf => ClassifierSpec::random_forest(seed),
        ClassifierChoice::Svm => ClassifierSpec::svm(),
    }
}

pub const GRID_HEADER: &str = "cell,classifier,hyperparameters,mean_score,fold_scores,selected";

/// One row per grid cell; fold scores are `;`-separated.
pub fn grid_csv(grid: &[ClassifierSpec], result: &GridResult) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for (i, cell) in grid.iter().enumerate() {
        let folds: Vec<String> = result.fold_scores[i].iter().map(f64::to_string).collect();
        out.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            cell.name(),
            cell.describe(),
            result.mean_scores[i],
            folds.join(";"),
            i == result.best_index
        ));
    }
    out
}

fn fused_matrix(state: &PreprocessState, rows: &[FusionRow]) -> Result<Vec<Vec<f64>>> {
    let weather: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.weather.to_vec()).collect();
    let z = state.transform(&weather)?;
    rows.iter()
        .zip(&z)
        .map(|(r, w)| fuse(&r.probabilities, w).map(|f| f.0.to_vec()))
        .collect()
}

fn print_report(report: &FusionReport) {
    let names = ["bare", "partial", "full"];
    for (title, r) in [("image only", &report.image_only), ("fused", &report.fused)] {
        println!("{title} ({}): accuracy {:.4}, macro F1 {:.4}, weighted F1 {:.4}", report.classifier, r.accuracy, r.macro_f1, r.weighted_f1);
        for (name, row) in names.iter().zip(&r.normalized) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            println!("  {name:<8}{}", cells.join("  "));
        }
    }
    let delta: Vec<String> = report.recall_delta().iter().map(|d| format!("{d:+.4}")).collect();
    println!("recall delta (fused - image only): {}", delta.join("  "));
}

pub fn cmd_fuse(
    cfg: &RunConfig,
    model_path: &Path,
    data: &Path,
    out: &Path,
    classifier: Option<ClassifierChoice>,
) -> Result<()> {
    let settings = &cfg.fusion;
    let choice = classifier.unwrap_or(settings.classifier);
    if settings.k_folds < 2 {
        return Err(Error::config("fusion k_folds must be at least 2"));
    }
    cfg.split.validate()?;
    let (plan, params) = rsc_core::train::load_model(model_path)?;
    let samples = load_samples(data, plan.input_size(), true)?;
    let mut cfg = cfg.clone();
    cfg.fusion.classifier = choice;
    prepare_out(&cfg, out)?;

    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let split = split_indices(&labels, plan.num_classes(), &cfg.split)?;
    let rows = fusion_rows(&plan, &params, &as_refs(&samples))?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>();
    let mut train_ix = split.train.clone();
    train_ix.extend(&split.validation);
    train_ix.sort_unstable();
    let train_rows = pick(&train_ix);
    let test_rows = pick(&split.test);
    write_fusion_csv(&out.join("fusion_train.csv"), &train_rows)?;
    write_fusion_csv(&out.join("fusion_test.csv"), &test_rows)?;

    let chosen = if settings.grid_search {
        let grid = grid_for(choice, cfg.seed);
        let state = PreprocessState::fit(&train_rows.iter().map(|r| r.weather.to_vec()).collect::<Vec<_>>())?;
        let x = fused_matrix(&state, &train_rows)?;
        let y: Vec<usize> = train_rows.iter().map(|r| r.label).collect();
        let result = grid_search_cv(&grid, &x, &y, plan.num_classes(), settings.k_folds, settings.scorer, cfg.seed)?;
        write(&out.join("grid_search.csv"), &grid_csv(&grid, &result))?;
        println!("grid search selected {} ({})", result.best.describe(), result.mean_scores[result.best_index]);
        result.best
    } else {
        optimum_for(choice, cfg.seed)
    };

    let report = fusion_experiment(&train_rows, &test_rows, &chosen, settings.image_only_mode)?;
    write(&out.join("fusion_report.csv"), &report.to_csv())?;
    print_report(&report);
    Ok(())
}

pub fn cmd_summary(cfg: &RunConfig, data: &Path, out: Option<&Path>) -> Result<()> {
    let samples = load_samples(data, cfg.model.input_size, false)?;
    let csv = dataset_summary(&samples)?.to_csv();
    if let Some(out) = out {
        prepare_out(cfg, out)?;
        write(&out.join("dataset_summary.csv"), &csv)?;
    }
    print!("{csv}");
    Ok(())
}
