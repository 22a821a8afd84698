//! Image-only versus fused comparison on a train/test pair.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::{format_timestamp, parse_timestamp, LabeledSample, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::fusion::classifier::ClassifierSpec;
use crate::fusion::metrics::{confusion_and_f1, ConfusionReport};
use crate::fusion::naive_bayes::argmax;
use crate::fusion::preprocess::PreprocessState;
use crate::model::{ModelPlan, ParamBundle};
use crate::train::evaluate;

pub const FUSED_FIELDS: [&str; 7] = [
    "p_bare",
    "p_partial",
    "p_full",
    "z_air_temp",
    "z_rh",
    "z_pressure",
    "z_wind",
];

const PROB_TOLERANCE: f64 = 1e-4;

/// Three class probabilities followed by four standardized weather values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedFeature(pub [f64; 7]);

impl FusedFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn fuse(probabilities: &[f64], weather: &[f64]) -> Result<FusedFeature> {
    if probabilities.len() != 3 || weather.len() != 4 {
        return Err(Error::shape(format!(
            "fusion needs 3 probabilities and 4 weather values, got {} and {}",
            probabilities.len(),
            weather.len()
        )));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE || probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::input(format!("probabilities must form a distribution, sum is {sum}")));
    }
    let mut v = [0.0; 7];
    v[..3].copy_from_slice(probabilities);
    v[3..].copy_from_slice(weather);
    Ok(FusedFeature(v))
}

/// One row of the fusion dataset file.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionRow {
    pub station_id: String,
    pub timestamp: Option<DateTime<Utc>>,
    pub probabilities: [f64; 3],
    /// air_temp, rh, pressure, wind_speed.
    pub weather: [Option<f64>; 4],
    pub label: usize,
}

/// Runs the image model over `samples` and pairs its probabilities with each
/// sample's joined weather (all-null when no record was joined).
pub fn fusion_rows(plan: &ModelPlan, params: &ParamBundle, samples: &[&LabeledSample]) -> Result<Vec<FusionRow>> {
    let eval = evaluate(plan, params, samples)?;
    Ok(samples
        .iter()
        .zip(&eval.probabilities)
        .map(|(s, p)| FusionRow {
            station_id: s.station_id.clone(),
            timestamp: s.timestamp,
            probabilities: [p[0] as f64, p[1] as f64, p[2] as f64],
            weather: s.weather.map(|w| w.fusion_fields()).unwrap_or([None; 4]),
            label: s.label,
        })
        .collect())
}

pub const FUSION_CSV_HEADER: &str =
    "station_id,timestamp,p_bare,p_partial,p_full,air_temp,rh,pressure,wind_speed,label";

pub fn fusion_rows_csv(rows: &[FusionRow]) -> String {
    let mut out = format!("{FUSION_CSV_HEADER}\n");
    for r in rows {
        let w: Vec<String> = r
            .weather
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.station_id,
            r.timestamp.as_ref().map(format_timestamp).unwrap_or_default(),
            r.probabilities[0],
            r.probabilities[1],
            r.probabilities[2],
            w.join(","),
            r.label
        ));
    }
    out
}

pub fn write_fusion_csv(path: &Path, rows: &[FusionRow]) -> Result<()> {
    std::fs::write(path, fusion_rows_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_fusion_csv(path: &Path) -> Result<Vec<FusionRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, reason: String| Error::Csv {
        path: path.to_path_buf(),
        line: line as u64,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FUSION_CSV_HEADER => {}
        _ => return Err(err(1, "header mismatch".into())),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let n = i + 1;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 10 {
                return Err(err(n, format!("expected 10 fields, got {}", f.len())));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| err(n, format!("bad number {:?}", f[k])));
            let opt = |k: usize| if f[k].is_empty() { Ok(None) } else { num(k).map(Some) };
            let timestamp = if f[1].is_empty() {
                None
            } else {
                Some(parse_timestamp(f[1]).ok_or_else(|| err(n, format!("bad timestamp {:?}", f[1])))?)
            };
            let label: usize = f[9].parse().map_err(|_| err(n, format!("bad label {:?}", f[9])))?;
            if label >= NUM_CLASSES {
                return Err(err(n, format!("label {label} out of range")));
            }
            Ok(FusionRow {
                station_id: f[0].to_string(),
                timestamp,
                probabilities: [num(2)?, num(3)?, num(4)?],
                weather: [opt(5)?, opt(6)?, opt(7)?, opt(8)?],
                label,
            })
        })
        .collect()
}

/// How the image-only baseline classifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageOnlyMode {
    /// Same classifier as the fused model, trained on the 3 probabilities.
    Classifier,
    /// Argmax of the image model's probabilities.
    SbmArgmax,
}

impl ImageOnlyMode {
    pub fn name(self) -> &'static str {
        match self {
            ImageOnlyMode::Classifier => "image_only_classifier",
            ImageOnlyMode::SbmArgmax => "image_only_sbm_argmax",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [ImageOnlyMode::Classifier, ImageOnlyMode::SbmArgmax]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionReport {
    pub classifier: String,
    /// Hyperparameters of the fitted classifier, as `key=value` pairs.
    pub hyperparameters: String,
    pub image_only_mode: ImageOnlyMode,
    pub image_only: ConfusionReport,
    pub fused: ConfusionReport,
}

impl FusionReport {
    /// Fused minus image-only recall, per class.
    pub fn recall_delta(&self) -> Vec<f64> {
        self.fused
            .recall
            .iter()
            .zip(&self.image_only.recall)
            .map(|(f, i)| f - i)
            .collect()
    }
}

pub fn fusion_experiment(
    train: &[FusionRow],
    test: &[FusionRow],
    classifier: &ClassifierSpec,
    mode: ImageOnlyMode,
) -> Result<FusionReport> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::input("fusion experiment needs nonempty train and test sets"));
    }
    let weather = |rows: &[FusionRow]| rows.iter().map(|r| r.weather.to_vec()).collect::<Vec<_>>();
    let state = PreprocessState::fit(&weather(train))?;
    let build = |rows: &[FusionRow]| -> Result<Vec<Vec<f64>>> {
        let z = state.transform(&weather(rows))?;
        rows.iter()
            .zip(&z)
            .map(|(r, w)| fuse(&r.probabilities, w).map(|f| f.0.to_vec()))
            .collect()
    };
    let (x_train, x_test) = (build(train)?, build(test)?);
    let y_train: Vec<usize> = train.iter().map(|r| r.label).collect();
    let y_test: Vec<usize> = test.iter().map(|r| r.label).collect();

    let fused_model = classifier.fit(&x_train, &y_train, NUM_CLASSES)?;
    let fused = confusion_and_f1(&y_test, &fused_model.predict_all(&x_test), NUM_CLASSES)?;

    let image_pred = match mode {
        ImageOnlyMode::Classifier => {
            let probs = |x: &[Vec<f64>]| x.iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>();
            classifier
                .fit(&probs(&x_train), &y_train, NUM_CLASSES)?
                .predict_all(&probs(&x_test))
        }
        ImageOnlyMode::SbmArgmax => test.iter().map(|r| argmax(&r.probabilities)).collect(),
    };
    let image_only = confusion_and_f1(&y_test, &image_pred, NUM_CLASSES)?;
    Ok(FusionReport {
        classifier: classifier.name().to_string(),
        hyperparameters: classifier.describe(),
        image_only_mode: mode,
        image_only,
        fused,
    })
}

pub const REPORT_CSV_HEADER: &str = "section,model,key,value";

fn push_confusion(out: &mut String, model: &str, r: &ConfusionReport) {
    let k = r.counts.len();
    for i in 0..k {
        for j in 0..k {
            out.push_str(&format!("confusion_counts,{model},{i}_{j},{}\n", r.counts[i][j]));
        }
    }
    for i in 0..k {
        for j in 0..k {
            out.push_str(&format!("confusion_normalized,{model},{i}_{j},{}\n", r.normalized[i][j]));
        }
    }
    for (key, v) in [("accuracy", r.accuracy), ("macro_f1", r.macro_f1), ("weighted_f1", r.weighted_f1)] {
        out.push_str(&format!("metrics,{model},{key},{v}\n"));
    }
    for c in 0..k {
        out.push_str(&format!("metrics,{model},recall_{c},{}\n", r.recall[c]));
        out.push_str(&format!("metrics,{model},precision_{c},{}\n", r.precision[c]));
        out.push_str(&format!("metrics,{model},f1_{c},{}\n", r.f1[c]));
        out.push_str(&format!("metrics,{model},support_{c},{}\n", r.support[c]));
    }
}

impl FusionReport {
    /// Long-format CSV `section,model,key,value`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        out.push_str(&format!("experiment,fused,classifier,{}\n", self.classifier));
        out.push_str(&format!("experiment,fused,hyperparameters,{}\n", self.hyperparameters));
        out.push_str(&format!("experiment,{},mode,{}\n", self.image_only_mode.name(), self.image_only_mode.name()));
        push_confusion(&mut out, "fused", &self.fused);
        push_confusion(&mut out, self.image_only_mode.name(), &self.image_only);
        for (c, d) in self.recall_delta().iter().enumerate() {
            out.push_str(&format!("recall_delta,fused_minus_image_only,{c},{d}\n"));
        }
        out
    }

    /// Rebuilds a report from [`to_csv`](Self::to_csv); derived values are
    /// recomputed from the counts and checked against the file.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |n: usize, why: String| Error::input(format!("fusion report line {n}: {why}"));
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l) != Some(REPORT_CSV_HEADER) {
            return Err(bad(1, "header mismatch".into()));
        }
        let mut classifier = None;
        let mut hyperparameters = None;
        let mut mode = None;
        let mut fused = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
        let mut image = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
        let mut derived = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let f: Vec<&str> = line.splitn(4, ',').collect();
            let [section, model, key, value] = f[..] else {
                return Err(bad(n, "expected 4 fields".into()));
            };
            match section {
                "experiment" if key == "classifier" => classifier = Some(value.to_string()),
                "experiment" if key == "hyperparameters" => hyperparameters = Some(value.to_string()),
                "experiment" if key == "mode" => {
                    mode = Some(ImageOnlyMode::from_name(value).ok_or_else(|| bad(n, format!("unknown mode {value}")))?)
                }
                "confusion_counts" => {
                    let (a, b) = key.split_once('_').ok_or_else(|| bad(n, "bad cell key".into()))?;
                    let (a, b): (usize, usize) = (
                        a.parse().map_err(|_| bad(n, "bad row".into()))?,
                        b.parse().map_err(|_| bad(n, "bad column".into()))?,
                    );
                    if a >= NUM_CLASSES || b >= NUM_CLASSES {
                        return Err(bad(n, "cell out of range".into()));
                    }
                    let v = value.parse().map_err(|_| bad(n, "bad count".into()))?;
                    if model == "fused" {
                        fused[a][b] = v;
                    } else {
                        image[a][b] = v;
                    }
                }
                "confusion_normalized" | "metrics" | "recall_delta" => derived.push((n, line.to_string())),
                _ => return Err(bad(n, format!("unknown section {section}"))),
            }
        }
        let report = FusionReport {
            classifier: classifier.ok_or_else(|| bad(0, "missing classifier".into()))?,
            hyperparameters: hyperparameters.unwrap_or_default(),
            image_only_mode: mode.ok_or_else(|| bad(0, "missing image-only mode".into()))?,
            image_only: ConfusionReport::from_counts(image)?,
            fused: ConfusionReport::from_counts(fused)?,
        };
        let regenerated = report.to_csv();
        for (n, line) in derived {
            if !regenerated.lines().any(|l| l == line) {
                return Err(bad(n, "derived value does not match the counts".into()));
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fuse_uniform() {
        let t = 1.0 / 3.0;
        let f = fuse(&[t, t, t], &[0.0; 4]).unwrap();
        assert_eq!(f.0, [t, t, t, 0.0, 0.0, 0.0, 0.0]);
        assert!(fuse(&[0.5, 0.5, 0.1], &[0.0; 4]).is_err());
        assert!(fuse(&[0.5, 0.5], &[0.0; 4]).is_err());
    }
}
