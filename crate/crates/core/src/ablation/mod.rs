//! Channel-growth and dense-width sweeps over the baseline architecture.
//!
//! Every point of a sweep trains on the same split. Each point draws its
//! weights, shuffles and dropout masks from a seed derived from the base seed
//! and its label, so a report is reproducible and independent of point order.

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::model::{build_plan, count_params, init_params, BaselineConfig};
use crate::train::{train, SplitSpec, TrainConfig};

pub const DEFAULT_ICF_GRID: [f64; 11] = [2.0, 1.9, 1.8, 1.7, 1.6, 1.5, 1.4, 1.3, 1.2, 1.1, 1.0];
pub const DEFAULT_NEURON_START: [usize; 3] = [48, 24, 3];
pub const DEFAULT_NEURON_STEP: [usize; 3] = [6, 3, 0];
pub const DEFAULT_NEURON_FLOOR: usize = 12;

pub const REPORT_HEADER: &str = "label,icf,fc_neurons,total_params,train_acc,val_acc,status";

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledConfig {
    pub label: String,
    pub config: BaselineConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub config: BaselineConfig,
    pub total_params: usize,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    /// Sorted by `total_params`, largest first.
    pub points: Vec<SweepPoint>,
}

fn fmt_real(v: f64) -> String {
    if (v * 10.0).round() == v * 10.0 {
        format!("{v:.1}")
    } else {
        v.to_string()
    }
}

pub fn fc_label(fc: &[usize]) -> String {
    fc.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// One config per ICF value, everything else taken from `base`.
pub fn icf_sweep_points(values: &[f64], base: &BaselineConfig) -> Result<Vec<LabeledConfig>> {
    values
        .iter()
        .map(|&icf| {
            if !(icf >= 1.0 && icf.is_finite()) {
                return Err(Error::config(format!("ICF values must be >= 1, got {icf}")));
            }
            Ok(LabeledConfig {
                label: format!("icf={}", fmt_real(icf)),
                config: BaselineConfig { icf, ..base.clone() },
            })
        })
        .collect()
}

/// Shrinks the dense widths by `step` per point, starting at `start`, while
/// every width stays positive and the total stays at or above `floor_total`.
/// The output width must not change.
pub fn neuron_schedule(start: &[usize], step: &[usize], floor_total: usize) -> Result<Vec<Vec<usize>>> {
    if start.is_empty() || start.len() != step.len() {
        return Err(Error::config(format!(
            "neuron schedule: start has {} widths, step has {}",
            start.len(),
            step.len()
        )));
    }
    if start.contains(&0) {
        return Err(Error::config("neuron schedule widths must be positive"));
    }
    if *step.last().expect("nonempty") != 0 {
        return Err(Error::config("neuron schedule must keep the output width fixed"));
    }
    let mut out = vec![start.to_vec()];
    if step.iter().all(|&s| s == 0) {
        return Ok(out);
    }
    loop {
        let prev = out.last().expect("nonempty");
        let next: Option<Vec<usize>> = prev
            .iter()
            .zip(step)
            .map(|(&w, &s)| w.checked_sub(s).filter(|&v| v > 0))
            .collect();
        match next {
            Some(n) if n.iter().sum::<usize>() >= floor_total => out.push(n),
            _ => return Ok(out),
        }
    }
}

pub fn neuron_sweep_points(schedule: &[Vec<usize>], base: &BaselineConfig) -> Vec<LabeledConfig> {
    schedule
        .iter()
        .map(|fc| LabeledConfig {
            label: format!("neurons={}", fc.iter().sum::<usize>()),
            config: BaselineConfig {
                fc_neurons: fc.clone(),
                ..base.clone()
            },
        })
        .collect()
}

/// Seed of one sweep point: FNV-1a over the label, keyed by the base seed.
/// Stable across platforms and releases.
pub fn point_seed(base_seed: u64, label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ base_seed;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn run_point(
    point: &LabeledConfig,
    data: &[LabeledSample],
    train_config: &TrainConfig,
    split: &SplitSpec,
) -> (usize, Result<(f64, f64)>) {
    let plan = match build_plan(&point.config) {
        Ok(p) => p,
        Err(e) => return (0, Err(e)),
    };
    let total = count_params(&plan).total;
    let seed = point_seed(train_config.seed, &point.label);
    let cfg = TrainConfig { seed, ..train_config.clone() };
    let result = train(&plan, init_params(&plan, seed), data, &cfg, split).and_then(|out| {
        let last = out
            .records
            .last()
            .ok_or_else(|| Error::input("training produced no epochs"))?;
        Ok((last.train_accuracy, last.val_accuracy))
    });
    (total, result)
}

/// Trains every point. A point that fails is kept with its error in the
/// status column.
pub fn run_sweep(
    points: &[LabeledConfig],
    data: &[LabeledSample],
    train_config: &TrainConfig,
    split: &SplitSpec,
) -> Result<SweepReport> {
    if points.is_empty() {
        return Err(Error::config("sweep needs at least one configuration"));
    }
    train_config.validate()?;
    let mut rows: Vec<SweepPoint> = points
        .iter()
        .map(|p| {
            log::info!("sweep point {}", p.label);
            let (total_params, result) = run_point(p, data, train_config, split);
            let (train_accuracy, val_accuracy, status) = match result {
                Ok((t, v)) => (Some(t), Some(v), PointStatus::Ok),
                Err(e) => {
                    log::warn!("sweep point {} failed: {e}", p.label);
                    (None, None, PointStatus::Failed(e.to_string()))
                }
            };
            SweepPoint {
                label: p.label.clone(),
                config: p.config.clone(),
                total_params,
                train_accuracy,
                val_accuracy,
                status,
            }
        })
        .collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.total_params));
    Ok(SweepReport { points: rows })
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.points {
            let status = match &p.status {
                PointStatus::Ok => "ok".to_string(),
                PointStatus::Failed(msg) => format!("failed: {}", msg.replace([',', '\n'], ";")),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.label,
                fmt_real(p.config.icf),
                fc_label(&p.config.fc_neurons),
                p.total_params,
                opt(p.train_accuracy),
                opt(p.val_accuracy),
                status
            ));
        }
        out
    }

    pub fn get(&self, label: &str) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.label == label)
    }
}
