use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recipe for the baseline CNN family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Pixels per side of the square input.
    pub input_size: usize,
    pub input_channels: usize,
    pub base_channels: usize,
    /// Incremental channels factor: growth rate of channels between blocks.
    pub icf: f64,
    pub num_blocks: usize,
    /// Dense widths; the last entry is the number of classes.
    pub fc_neurons: Vec<usize>,
    pub dropout_rate: f64,
    pub num_classes: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            input_size: 224,
            input_channels: 3,
            base_channels: 16,
            icf: 2.0,
            num_blocks: 5,
            fc_neurons: vec![48, 24, 3],
            dropout_rate: 0.5,
            num_classes: 3,
        }
    }
}

impl BaselineConfig {
    /// The ablated model used for weather fusion: ICF 1.7 with a (24, 12, 3) head.
    pub fn simplified() -> Self {
        BaselineConfig {
            icf: 1.7,
            fc_neurons: vec![24, 12, 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 {
            return Err(Error::config("num_blocks must be at least 1"));
        }
        if self.input_size == 0 || !self.input_size.is_multiple_of(1usize << self.num_blocks.min(63)) {
            return Err(Error::config(format!(
                "input_size {} must be divisible by 2^num_blocks = {}",
                self.input_size,
                1u64 << self.num_blocks.min(63)
            )));
        }
        if self.input_channels == 0 {
            return Err(Error::config("input_channels must be at least 1"));
        }
        if self.base_channels == 0 {
            return Err(Error::config("base_channels must be at least 1"));
        }
        if !(self.icf >= 1.0) || !self.icf.is_finite() {
            return Err(Error::config(format!("icf must be a finite value >= 1, got {}", self.icf)));
        }
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        match self.fc_neurons.last() {
            None => return Err(Error::config("fc_neurons must not be empty")),
            Some(&last) if last != self.num_classes => {
                return Err(Error::config(format!(
                    "last fc_neurons entry ({last}) must equal num_classes ({})",
                    self.num_classes
                )))
            }
            _ => {}
        }
        if self.fc_neurons.contains(&0) {
            return Err(Error::config("fc_neurons entries must be positive"));
        }
        crate::nn::check_rate(self.dropout_rate)?;
        Ok(())
    }
}

/// Round half away from zero. `f64::round` already has these semantics.
fn round_half_away(v: f64) -> usize {
    v.round() as usize
}

/// Channels per conv block: `round(base · icf^i)` for each block `i`.
pub fn channel_schedule(base_channels: usize, icf: f64, num_blocks: usize) -> Vec<usize> {
    (0..num_blocks)
        .map(|i| round_half_away(base_channels as f64 * icf.powi(i as i32)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(channel_schedule(16, 2.0, 5), vec![16, 32, 64, 128, 256]);
        assert_eq!(channel_schedule(16, 1.7, 5), vec![16, 27, 46, 79, 134]);
        assert_eq!(channel_schedule(16, 1.0, 5), vec![16; 5]);
    }

    #[test]
    fn doubling_for_any_base() {
        for base in 1..40 {
            let s = channel_schedule(base, 2.0, 6);
            for (i, &c) in s.iter().enumerate() {
                assert_eq!(c, base << i);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(BaselineConfig::default().validate().is_ok());
        let bad = BaselineConfig {
            fc_neurons: vec![48, 24, 4],
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("num_classes"));
        let bad = BaselineConfig {
            input_size: 100,
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("divisible"));
        let bad = BaselineConfig {
            icf: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
