use std::path::Path;

use rsc_core::ablation::{DEFAULT_ICF_GRID, DEFAULT_NEURON_FLOOR, DEFAULT_NEURON_START, DEFAULT_NEURON_STEP};
use rsc_core::data::SyntheticSpec;
use rsc_core::fusion::{ImageOnlyMode, Scorer};
use rsc_core::model::BaselineConfig;
use rsc_core::train::{SplitSpec, TrainConfig};
use rsc_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierChoice {
    Nb,
    Rf,
    Svm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSettings {
    pub icf_values: Vec<f64>,
    pub neuron_start: Vec<usize>,
    pub neuron_step: Vec<usize>,
    pub neuron_floor: usize,
}

impl Default for AblationSettings {
    fn default() -> Self {
        AblationSettings {
            icf_values: DEFAULT_ICF_GRID.to_vec(),
            neuron_start: DEFAULT_NEURON_START.to_vec(),
            neuron_step: DEFAULT_NEURON_STEP.to_vec(),
            neuron_floor: DEFAULT_NEURON_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSettings {
    pub classifier: ClassifierChoice,
    /// Off: fit the classifier's default hyperparameters directly.
    pub grid_search: bool,
    pub k_folds: usize,
    pub scorer: Scorer,
    pub image_only_mode: ImageOnlyMode,
}

impl Default for FusionSettings {
    fn default() -> Self {
        FusionSettings {
            classifier: ClassifierChoice::Rf,
            grid_search: true,
            k_folds: 5,
            scorer: Scorer::MacroF1,
            image_only_mode: ImageOnlyMode::Classifier,
        }
    }
}

/// Everything a run needs. Every key is optional; `seed` is the only source
/// of randomness and is copied into each section that consumes one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: BaselineConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub synthetic: SyntheticSpec,
    pub ablation: AblationSettings,
    pub fusion: FusionSettings,
}

const SEEDED_SECTIONS: [&str; 3] = ["train", "split", "synthetic"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: toml::Table = toml::from_str(text).map_err(|e| Error::config(one_line(&e.to_string())))?;
        for section in SEEDED_SECTIONS {
            if let Some(toml::Value::Table(t)) = raw.get(section) {
                if t.contains_key("seed") {
                    return Err(Error::config(format!(
                        "[{section}] seed is not settable; use the top-level seed key"
                    )));
                }
            }
        }
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(one_line(&e.to_string())))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    /// Applies a command-line seed, then propagates the seed.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Self {
        if let Some(s) = seed_override {
            self.seed = s;
        }
        self.train.seed = self.seed;
        self.split.seed = self.seed;
        self.synthetic.seed = self.seed;
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    pub fn write_effective(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("effective_config.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
