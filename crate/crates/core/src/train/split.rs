use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::train::config::SplitSpec;

/// Sample indices of each partition, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `total = round(Σ sizes · fraction)` across groups in proportion to
/// their sizes, by largest remainder (ties to the lower group index).
pub fn allocate(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let total = (n as f64 * fraction).round() as usize;
    let quotas: Vec<f64> = sizes.iter().map(|&s| s as f64 * fraction).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(alloc.iter().sum());
    for &g in order.iter().cycle().take(sizes.len() * 2) {
        if left == 0 {
            break;
        }
        if alloc[g] < sizes[g] {
            alloc[g] += 1;
            left -= 1;
        }
    }
    alloc
}

/// Stratified test / validation / train partition of `labels`.
pub fn split_indices(labels: &[usize], n_classes: usize, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::input(format!("label {l} at index {i} out of range")))?
            .push(i);
    }
    let empty: Vec<String> = (0..n_classes)
        .filter(|&c| by_class[c].is_empty())
        .map(|c| c.to_string())
        .collect();
    if !empty.is_empty() {
        return Err(Error::input(format!("no samples for class(es) {}", empty.join(", "))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for group in &mut by_class {
        group.shuffle(&mut rng);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let n_test = allocate(&sizes, spec.test_fraction);
    let rest: Vec<usize> = sizes.iter().zip(&n_test).map(|(s, t)| s - t).collect();
    let n_val = allocate(&rest, spec.validation_fraction_of_train);

    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for ((group, &t), &v) in by_class.iter().zip(&n_test).zip(&n_val) {
        split.test.extend_from_slice(&group[..t]);
        split.validation.extend_from_slice(&group[t..t + v]);
        split.train.extend_from_slice(&group[t + v..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
