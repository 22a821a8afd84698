//! Mean imputation and z-score standardization, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-12;

/// Per-feature mean of non-null values.
pub fn fit_means(rows: &[Vec<Option<f64>>]) -> Result<Vec<f64>> {
    let d = rows.first().map(Vec::len).ok_or_else(|| Error::input("no rows to fit means on"))?;
    let mut sum = vec![0.0; d];
    let mut cnt = vec![0usize; d];
    for r in rows {
        if r.len() != d {
            return Err(Error::shape(format!("row has {} features, expected {d}", r.len())));
        }
        for (k, v) in r.iter().enumerate() {
            if let Some(x) = v {
                sum[k] += x;
                cnt[k] += 1;
            }
        }
    }
    sum.iter()
        .zip(&cnt)
        .enumerate()
        .map(|(k, (&s, &c))| {
            if c == 0 {
                Err(Error::input(format!("feature {k} is null in every training row")))
            } else {
                Ok(s / c as f64)
            }
        })
        .collect()
}

pub fn impute_mean(rows: &[Vec<Option<f64>>], means: &[f64]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != means.len() {
                return Err(Error::shape(format!(
                    "row has {} features, {} means fitted",
                    r.len(),
                    means.len()
                )));
            }
            Ok(r.iter().zip(means).map(|(v, &m)| v.unwrap_or(m)).collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stds: Vec<f64>,
}

pub fn zscore_fit(rows: &[Vec<f64>]) -> Result<ZScore> {
    if rows.len() < 2 {
        return Err(Error::input(format!("z-score needs at least 2 rows, got {}", rows.len())));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::shape("ragged feature matrix"));
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let stds = (0..d)
        .map(|k| (rows.iter().map(|r| (r[k] - means[k]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    Ok(ZScore { means, stds })
}

pub fn zscore_apply(state: &ZScore, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != state.means.len() {
                return Err(Error::shape(format!(
                    "row has {} features, z-score fitted on {}",
                    r.len(),
                    state.means.len()
                )));
            }
            Ok(r.iter()
                .zip(state.means.iter().zip(&state.stds))
                .map(|(&x, (&m, &s))| if s < STD_FLOOR { 0.0 } else { (x - m) / s })
                .collect())
        })
        .collect()
}

/// Imputation means plus z-score statistics (the latter fitted after imputing).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    pub impute_means: Vec<f64>,
    pub zscore: ZScore,
}

impl PreprocessState {
    pub fn fit(train: &[Vec<Option<f64>>]) -> Result<Self> {
        let impute_means = fit_means(train)?;
        let zscore = zscore_fit(&impute_mean(train, &impute_means)?)?;
        Ok(PreprocessState { impute_means, zscore })
    }

    pub fn transform(&self, rows: &[Vec<Option<f64>>]) -> Result<Vec<Vec<f64>>> {
        zscore_apply(&self.zscore, &impute_mean(rows, &self.impute_means)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impute_examples() {
        let rows = vec![vec![Some(1.0)], vec![None], vec![Some(3.0)]];
        let m = fit_means(&rows).unwrap();
        assert_eq!(m, vec![2.0]);
        assert_eq!(impute_mean(&rows, &m).unwrap(), vec![vec![1.0], vec![2.0], vec![3.0]]);
        assert!(fit_means(&[vec![None], vec![None]]).is_err());
    }

    #[test]
    fn zscore_examples() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let z = zscore_apply(&zscore_fit(&rows).unwrap(), &rows).unwrap();
        let want = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((z[0][0] + want).abs() < 1e-12 && z[1][0] == 0.0 && (z[2][0] - want).abs() < 1e-12);
        assert!(z.iter().all(|r| r[1] == 0.0));
        assert!(zscore_fit(&rows[..1]).is_err());
    }
}
