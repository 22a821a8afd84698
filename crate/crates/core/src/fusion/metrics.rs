use crate::error::{Error, Result};

/// Confusion matrix with per-class and aggregate scores.
///
/// `counts[i][j]` counts samples of true class `i` predicted as `j`. Rows of
/// `normalized` sum to 1 except for classes with no support, which are zero
/// and flagged in `zero_support`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionReport {
    pub counts: Vec<Vec<usize>>,
    pub normalized: Vec<Vec<f64>>,
    pub zero_support: Vec<bool>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

pub fn confusion_and_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionReport> {
    if truth.len() != pred.len() {
        return Err(Error::input(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut counts = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::input(format!("label ({t}, {p}) outside [0, {n_classes})")));
        }
        counts[t][p] += 1;
    }
    ConfusionReport::from_counts(counts)
}

impl ConfusionReport {
    /// Derives every score from a square count matrix.
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::shape("confusion counts must be a nonempty square matrix"));
        }
        let support: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let predicted: Vec<usize> = (0..k).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let total: usize = support.iter().sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };

        let normalized = counts
            .iter()
            .zip(&support)
            .map(|(row, &s)| row.iter().map(|&c| ratio(c, s)).collect())
            .collect();
        let precision: Vec<f64> = (0..k).map(|c| ratio(counts[c][c], predicted[c])).collect();
        let recall: Vec<f64> = (0..k).map(|c| ratio(counts[c][c], support[c])).collect();
        let f1: Vec<f64> = precision
            .iter()
            .zip(&recall)
            .map(|(&p, &r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
            .collect();
        let correct: usize = (0..k).map(|c| counts[c][c]).sum();
        let weighted = f1.iter().zip(&support).map(|(f, &s)| f * s as f64).sum::<f64>();
        Ok(ConfusionReport {
            zero_support: support.iter().map(|&s| s == 0).collect(),
            normalized,
            accuracy: ratio(correct, total),
            macro_f1: f1.iter().sum::<f64>() / k as f64,
            weighted_f1: if total == 0 { 0.0 } else { weighted / total as f64 },
            precision,
            recall,
            f1,
            support,
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1];
        let r = confusion_and_f1(&y, &y, 3).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        for (i, row) in r.normalized.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn hand_example() {
        let r = confusion_and_f1(&[0, 0, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(r.normalized[0], vec![0.5, 0.5, 0.0]);
        // class f1: 2/3, 2/3, 1 with supports 2, 1, 1
        assert!((r.weighted_f1 - (2.0 * 2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_class_predictions_fill_one_column() {
        let r = confusion_and_f1(&[0, 1, 2, 1], &[1, 1, 1, 1], 3).unwrap();
        for row in &r.counts {
            assert_eq!(row[0] + row[2], 0);
        }
    }

    #[test]
    fn zero_support_rows_flagged() {
        let r = confusion_and_f1(&[0, 0], &[0, 2], 3).unwrap();
        assert_eq!(r.zero_support, vec![false, true, true]);
        assert_eq!(r.normalized[1], vec![0.0; 3]);
        assert!(confusion_and_f1(&[3], &[0], 3).is_err());
    }
}
