use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::train::runner::EpochRecord;

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

/// One row per epoch; epochs are numbered from 1.
pub fn metrics_csv(records: &[EpochRecord]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch + 1,
            r.train_loss,
            r.train_accuracy,
            r.val_loss,
            r.val_accuracy
        ));
    }
    out
}

pub fn write_metrics_csv(path: &Path, records: &[EpochRecord]) -> Result<()> {
    fs::write(path, metrics_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::input("metrics CSV header mismatch"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::input(format!("metrics CSV line {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
            let epoch: usize = f[0].parse().map_err(|_| bad())?;
            Ok(EpochRecord {
                epoch: epoch.checked_sub(1).ok_or_else(bad)?,
                train_loss: num(1)?,
                train_accuracy: num(2)?,
                val_loss: num(3)?,
                val_accuracy: num(4)?,
            })
        })
        .collect()
}
