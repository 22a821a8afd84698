//! Acceptance gate. Runs every criterion at its stated tolerance and prints
//! one `[PASS]` or `[FAIL]` line per criterion; exits nonzero on any failure.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rsc_core::ablation::{
    neuron_schedule, neuron_sweep_points, run_sweep, DEFAULT_NEURON_FLOOR, DEFAULT_NEURON_START, DEFAULT_NEURON_STEP,
};
use rsc_core::data::{generate_synthetic, write_synthetic, SyntheticSpec, WeatherMode};
use rsc_core::fusion::{
    confusion_and_f1, fusion_experiment, fusion_rows, nb_fit, rf_fit, svm_fit, ClassifierSpec, ForestParams,
    FusionRow, ImageOnlyMode, MaxFeatures, PreprocessState, SvmParams,
};
use rsc_core::model::{build_plan, count_params, init_params, predict, size_ratios, BaselineConfig, REFERENCE_MODELS};
use rsc_core::nn;
use rsc_core::train::{as_refs, model_from_bytes, model_to_bytes, split_indices, train, SplitSpec, TrainConfig};

use common::gradcheck::LAYER_CHECKS;
use common::{conv_reference, maxpool_reference, random_tensor, rng, tally_f1, FD_TOL};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1() -> Outcome {
    let plan = build_plan(&BaselineConfig::default()).map_err(|e| e.to_string())?;
    let p = count_params(&plan);
    let l = plan.layer_counts();
    let got = (p.feature, p.classification, p.total, l.feature, l.classification, l.total);
    ensure(got == (392_608, 603_411, 996_019, 10, 7, 17), || format!("got {got:?}"))?;
    Ok(format!("params {}/{}/{}, layers {}/{}/{}", got.0, got.1, got.2, got.3, got.4, got.5))
}

fn ac2() -> Outcome {
    let total = |fc: Vec<usize>| {
        let cfg = BaselineConfig { icf: 1.7, fc_neurons: fc, ..Default::default() };
        build_plan(&cfg).map(|p| count_params(&p).total).map_err(|e| e.to_string())
    };
    let (a, b) = (total(vec![48, 24, 3])?, total(vec![24, 12, 3])?);
    ensure(a == 460_247 && b == 301_727, || format!("got {a} and {b}"))?;
    Ok(format!("ICF 1.7: {a} with 48-24-3, {b} with 24-12-3"))
}

fn ac3() -> Outcome {
    let ratios = |cfg: BaselineConfig| {
        build_plan(&cfg)
            .and_then(|p| size_ratios(&p, &REFERENCE_MODELS))
            .map_err(|e| e.to_string())
    };
    let base = ratios(BaselineConfig::default())?;
    let sbm = ratios(BaselineConfig::simplified())?;
    let (bp, sp, bl) = (100.0 * base.param_ratio, 100.0 * sbm.param_ratio, 100.0 * base.layer_ratio);
    ensure((bp - 4.2).abs() <= 0.1, || format!("baseline param ratio {bp:.3}%"))?;
    ensure((sp - 1.3).abs() <= 0.1, || format!("simplified param ratio {sp:.3}%"))?;
    ensure((bl - 3.7).abs() <= 0.1, || format!("layer ratio {bl:.3}%"))?;
    Ok(format!("params {bp:.2}% and {sp:.2}%, layers {bl:.2}%"))
}

fn ac4() -> Outcome {
    let schedule = neuron_schedule(&DEFAULT_NEURON_START, &DEFAULT_NEURON_STEP, DEFAULT_NEURON_FLOOR)
        .map_err(|e| e.to_string())?;
    let totals: Vec<usize> = schedule.iter().map(|fc| fc.iter().sum()).collect();
    ensure(totals == [75, 66, 57, 48, 39, 30, 21, 12], || format!("totals {totals:?}"))?;
    ensure(schedule.iter().all(|fc| fc.last() == Some(&3)), || "final width moved".into())?;
    Ok(format!("totals {totals:?}"))
}

fn ac5() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, check) in LAYER_CHECKS {
        for seed in 0..20 {
            let err = check(seed);
            ensure(err < FD_TOL, || format!("{name} seed {seed}: relative error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("{} layer kinds x 20 instances, worst relative error {worst:.2e}", LAYER_CHECKS.len()))
}

fn ac6() -> Outcome {
    let mut r = rng(606);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for h in 1..=8 {
        for w in 1..=8 {
            for ci in 1..=4 {
                for co in 1..=4 {
                    let x = random_tensor(&mut r, &[h, w, ci]);
                    let wt = random_tensor(&mut r, &[3, 3, ci, co]);
                    let b = random_tensor(&mut r, &[co]);
                    let got = nn::conv3x3_forward(&x, &wt, &b).map_err(|e| e.to_string())?;
                    let want = conv_reference(&x, &wt, &b);
                    ensure(got.len() == want.len(), || format!("conv {h}x{w}x{ci}->{co} size"))?;
                    for (g, e) in got.data().iter().zip(&want) {
                        worst = worst.max((g - e).abs());
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("conv max error {worst:e}"))?;
    for h in (2..=8).step_by(2) {
        for w in (2..=8).step_by(2) {
            for c in 1..=4 {
                let x = random_tensor(&mut r, &[h, w, c]);
                let (got, _) = nn::maxpool2x2_forward(&x).map_err(|e| e.to_string())?;
                for (g, e) in got.data().iter().zip(maxpool_reference(&x)) {
                    worst = worst.max((g - e).abs());
                }
                cases += 1;
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("{cases} shapes, max error {worst:.1e}"))
}

fn ac7() -> Outcome {
    let t = Instant::now();
    let data = generate_synthetic(&SyntheticSpec { n_samples: 1200, image_size: 64, seed: 7, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let cfg = BaselineConfig { input_size: 64, num_blocks: 3, ..Default::default() };
    let plan = build_plan(&cfg).map_err(|e| e.to_string())?;
    let out = train(
        &plan,
        init_params(&plan, 7),
        &data.samples,
        &TrainConfig { epochs: 50, seed: 7, ..Default::default() },
        &SplitSpec { seed: 7, ..Default::default() },
    )
    .map_err(|e| e.to_string())?;
    let last = out.records.last().ok_or("no epochs recorded")?;
    let secs = t.elapsed().as_secs_f64();
    ensure(last.val_accuracy >= 0.90, || format!("final validation accuracy {:.4}", last.val_accuracy))?;
    ensure(secs <= 1200.0, || format!("took {secs:.0} s"))?;
    Ok(format!(
        "final val accuracy {:.4} after {} epochs in {secs:.0} s",
        last.val_accuracy,
        out.records.len()
    ))
}

fn ac8() -> Outcome {
    // Gaussian NB against its closed form
    let x = vec![vec![0.0], vec![2.0], vec![4.0], vec![8.0]];
    let nb = nb_fit(&x, &[0, 0, 1, 1], 2, 0.01).map_err(|e| e.to_string())?;
    let eps = 0.01 * 35.0 / 4.0;
    let density = |q: f64, m: f64, v: f64| (-(q - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
    let mut nb_err: f64 = 0.0;
    for q in [-1.0, 1.0, 3.0, 5.0, 9.0] {
        let (a, b) = (0.5 * density(q, 1.0, 1.0 + eps), 0.5 * density(q, 6.0, 4.0 + eps));
        let post = nb.posterior(&[q]);
        nb_err = nb_err.max((post[0] - a / (a + b)).abs()).max((post[1] - b / (a + b)).abs());
    }
    ensure(nb_err < 1e-9, || format!("NB posterior error {nb_err:e}"))?;

    // SMO on a separable set, checked against the KKT conditions
    let mut r = rng(88);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..20 {
        let c = i % 2;
        let sign = if c == 0 { -1.0 } else { 1.0 };
        xs.push(vec![sign * 1.5 + r.random_range(-0.6..0.6), sign + r.random_range(-0.6..0.6)]);
        ys.push(c);
    }
    let svm = svm_fit(&xs, &ys, 2, &SvmParams { gamma: 0.5, ..Default::default() }).map_err(|e| e.to_string())?;
    let acc = xs.iter().zip(&ys).filter(|(v, &l)| svm.predict(v) == l).count() as f64 / 20.0;
    let m = &svm.machines[0];
    let mut alpha = vec![0.0; xs.len()];
    for (&i, &c) in m.support_indices.iter().zip(&m.dual_coef) {
        alpha[i] = c.abs();
    }
    let mut kkt: f64 = 0.0;
    let mut balance = 0.0;
    for i in 0..xs.len() {
        let y = if ys[i] == m.positive_class { 1.0 } else { -1.0 };
        balance += y * alpha[i];
        let margin = y * m.decision(&xs[i]);
        let v = if alpha[i] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= svm.params.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        kkt = kkt.max(v);
    }
    kkt = kkt.max(balance.abs());
    ensure(acc == 1.0 && kkt < 1e-3, || format!("SVM accuracy {acc}, KKT violation {kkt:e}"))?;

    // one unrestricted tree memorizes consistent labels
    let xt: Vec<Vec<f64>> = (0..300).map(|_| vec![r.random(), r.random(), r.random()]).collect();
    let yt: Vec<usize> = (0..300).map(|_| r.random_range(0..3)).collect();
    let tree = ForestParams {
        n_trees: 1,
        max_depth: None,
        min_samples_leaf: 1,
        max_features: MaxFeatures::All,
        bootstrap: false,
        seed: 0,
    };
    let forest = rf_fit(&xt, &yt, 3, &tree).map_err(|e| e.to_string())?;
    let mem = xt.iter().zip(&yt).filter(|(v, &l)| forest.predict(v) == l).count();
    ensure(mem == 300, || format!("tree memorized {mem}/300"))?;
    Ok(format!("NB error {nb_err:.1e}, SVM KKT violation {kkt:.1e}, tree memorized 300/300"))
}

fn fusion_spec(n: usize, mode: WeatherMode, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_samples: n,
        image_size: 32,
        ambiguity_fraction: 0.5,
        weather_mode: mode,
        seed,
        ..Default::default()
    }
}

fn ac9() -> Outcome {
    let sbm = BaselineConfig { input_size: 32, num_blocks: 2, ..BaselineConfig::simplified() };
    let plan = build_plan(&sbm).map_err(|e| e.to_string())?;
    let mut informative = Vec::new();
    let mut uninformative: Vec<f64> = Vec::new();
    let mut test_n = 0;
    for seed in 1..=3u64 {
        let images = generate_synthetic(&fusion_spec(1200, WeatherMode::Informative, 1000 + seed))
            .map_err(|e| e.to_string())?;
        let model = train(
            &plan,
            init_params(&plan, seed),
            &images.samples,
            &TrainConfig { epochs: 15, seed, ..Default::default() },
            &SplitSpec { seed, ..Default::default() },
        )
        .map_err(|e| e.to_string())?;
        for mode in [WeatherMode::Informative, WeatherMode::Constant] {
            let data = generate_synthetic(&fusion_spec(10_000, mode, 2000 + seed)).map_err(|e| e.to_string())?;
            let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();
            let split = split_indices(&labels, 3, &SplitSpec { seed, ..Default::default() }).map_err(|e| e.to_string())?;
            let rows = fusion_rows(&plan, &model.params, &as_refs(&data.samples)).map_err(|e| e.to_string())?;
            let pick = |ix: &[usize]| ix.iter().map(|&i| rows[i].clone()).collect::<Vec<FusionRow>>();
            let mut train_ix = split.train.clone();
            train_ix.extend(&split.validation);
            let test = pick(&split.test);
            test_n = test.len();
            let report = fusion_experiment(
                &pick(&train_ix),
                &test,
                &ClassifierSpec::random_forest(seed),
                ImageOnlyMode::Classifier,
            )
            .map_err(|e| e.to_string())?;
            let delta = report.recall_delta();
            match mode {
                WeatherMode::Constant => uninformative.extend(delta),
                _ => informative.push(delta[2]),
            }
        }
    }
    let wins = informative.iter().filter(|&&d| d > 0.0).count();
    let worst = uninformative.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let fmt: Vec<String> = informative.iter().map(|d| format!("{d:+.4}")).collect();
    ensure(test_n >= 2000, || format!("only {test_n} test samples"))?;
    ensure(wins >= 2, || format!("full-cover deltas {fmt:?}"))?;
    ensure(worst < 0.02, || format!("uninformative max |delta| {worst:.4}"))?;
    Ok(format!(
        "full-cover recall deltas {} ({wins}/3 positive); uninformative max |delta| {worst:.4} over {test_n} test samples",
        fmt.join(", ")
    ))
}

fn ac10() -> Outcome {
    let mut r = rng(1010);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let n = r.random_range(20..300);
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let rep = confusion_and_f1(&truth, &pred, 3).map_err(|e| e.to_string())?;
        let tally = tally_f1(&truth, &pred, 3);
        let macro_f1 = tally.iter().map(|t| t.2).sum::<f64>() / 3.0;
        let weighted = tally.iter().map(|t| t.2 * t.3 as f64).sum::<f64>() / n as f64;
        worst = worst.max((rep.macro_f1 - macro_f1).abs()).max((rep.weighted_f1 - weighted).abs());
        for (row, &s) in rep.normalized.iter().zip(&rep.support) {
            let sum: f64 = row.iter().sum();
            ensure(s == 0 || (sum - 1.0).abs() <= 1e-9, || format!("trial {trial}: row sums to {sum}"))?;
        }
    }
    ensure(worst < 1e-12, || format!("F1 disagreement {worst:e}"))?;
    Ok(format!("10 label vectors, F1 disagreement {worst:.1e}"))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn ac11() -> Outcome {
    let spec = SyntheticSpec { n_samples: 90, image_size: 16, seed: 11, ..Default::default() };
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    for d in [&a, &b] {
        write_synthetic(&generate_synthetic(&spec).map_err(|e| e.to_string())?, d.path()).map_err(|e| e.to_string())?;
    }
    let (ha, hb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    ensure(ha == hb, || "dataset directories differ".into())?;

    let data = generate_synthetic(&spec).map_err(|e| e.to_string())?;
    let cfg = BaselineConfig { input_size: 16, num_blocks: 2, base_channels: 4, ..Default::default() };
    let plan = build_plan(&cfg).map_err(|e| e.to_string())?;
    let tc = TrainConfig { epochs: 2, seed: 11, ..Default::default() };
    let sc = SplitSpec { seed: 11, ..Default::default() };
    let run = || {
        train(&plan, init_params(&plan, 11), &data.samples, &tc, &sc)
            .and_then(|o| model_to_bytes(&plan, &o.params))
            .map_err(|e| e.to_string())
    };
    let bytes = run()?;
    ensure(bytes == run()?, || "trained model files differ".into())?;

    let (plan2, params2) = model_from_bytes(&bytes).map_err(|e| e.to_string())?;
    ensure(model_to_bytes(&plan2, &params2).map_err(|e| e.to_string())? == bytes, || "save/load not bit-exact".into())?;
    let original = model_from_bytes(&bytes).map_err(|e| e.to_string())?.1;
    for s in data.samples.iter().take(10) {
        let p1 = predict(&plan, &original, &s.image).map_err(|e| e.to_string())?;
        let p2 = predict(&plan2, &params2, &s.image).map_err(|e| e.to_string())?;
        ensure(p1.data() == p2.data(), || "forward outputs changed after reload".into())?;
    }

    let schedule = neuron_schedule(&[12, 6, 3], &[6, 3, 0], 12).map_err(|e| e.to_string())?;
    let points = neuron_sweep_points(&schedule, &cfg);
    let sweep = || run_sweep(&points, &data.samples, &tc, &sc).map(|r| r.to_csv()).map_err(|e| e.to_string());
    ensure(sweep()? == sweep()?, || "sweep reports differ".into())?;
    Ok(format!("{} dataset files, {}-byte model file, sweep report identical", ha.len(), bytes.len()))
}

fn ac12() -> Outcome {
    let data = generate_synthetic(&SyntheticSpec { n_samples: 14_000, image_size: 8, seed: 12, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();
    let split = split_indices(&labels, 3, &SplitSpec { seed: 12, ..Default::default() }).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<Option<f64>>> = data
        .samples
        .iter()
        .map(|s| s.weather.map(|w| w.fusion_fields().to_vec()).unwrap_or(vec![None; 4]))
        .collect();
    let train_rows: Vec<Vec<Option<f64>>> = split.train.iter().map(|&i| rows[i].clone()).collect();
    let state = PreprocessState::fit(&train_rows).map_err(|e| e.to_string())?;
    let z = state.transform(&train_rows).map_err(|e| e.to_string())?;
    let n = z.len() as f64;
    for k in 0..4 {
        let mean = z.iter().map(|r| r[k]).sum::<f64>() / n;
        let var = z.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
        ensure(mean.abs() <= 1e-9 && (var - 1.0).abs() <= 1e-9, || format!("feature {k}: mean {mean:e}, var {var}"))?;
    }

    let all = state.transform(&rows).map_err(|e| e.to_string())?;
    let remaining = all.iter().flatten().filter(|v| !v.is_finite()).count();
    let rh = rows.iter().filter(|r| r[1].is_none()).count();
    let wind = rows.iter().filter(|r| r[3].is_none()).count();
    let logged_rh = data.log.iter().filter(|g| g.rh_null).count();
    let logged_wind = data.log.iter().filter(|g| g.wind_null).count();
    ensure(remaining == 0, || format!("{remaining} nulls after imputation"))?;
    ensure(rh == logged_rh && wind == logged_wind, || {
        format!("nulls {rh}/{wind} but log says {logged_rh}/{logged_wind}")
    })?;
    let total = rows.len() as f64;
    Ok(format!(
        "train mean/var exact to 1e-9; 0 nulls after imputation; injected rh {} ({:.2}%), wind {} ({:.2}%) match the log",
        rh,
        100.0 * rh as f64 / total,
        wind,
        100.0 * wind as f64 / total
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Outcome); 12] = [
        ("AC-1", "parameter-count oracle", ac1),
        ("AC-2", "ablation arithmetic", ac2),
        ("AC-3", "size ratios", ac3),
        ("AC-4", "neuron schedule", ac4),
        ("AC-5", "gradient suite", ac5),
        ("AC-6", "forward oracles", ac6),
        ("AC-7", "end-to-end training", ac7),
        ("AC-8", "classifier oracles", ac8),
        ("AC-9", "fusion property", ac9),
        ("AC-10", "metric definitions", ac10),
        ("AC-11", "determinism and serialization", ac11),
        ("AC-12", "preprocessing", ac12),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC-")).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {why} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
