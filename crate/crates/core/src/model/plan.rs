use std::fmt;

use crate::error::{Error, Result};
use crate::model::config::{channel_schedule, BaselineConfig};
use crate::nn::{conv3x3_param_count, dense_param_count};

/// One step of a model plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    Conv3x3 { in_channels: usize, out_channels: usize },
    MaxPool2x2,
    Relu,
    Flatten,
    Dense { n_in: usize, n_out: usize },
    Dropout { rate: f32 },
    Softmax,
}

impl LayerSpec {
    /// Activations ride along with the layer they follow and are not tallied.
    pub fn is_counted(&self) -> bool {
        !matches!(self, LayerSpec::Relu | LayerSpec::Softmax)
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
            } => conv3x3_param_count(in_channels, out_channels),
            LayerSpec::Dense { n_in, n_out } => dense_param_count(n_in, n_out),
            _ => 0,
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerSpec::Conv3x3 { .. } | LayerSpec::Dense { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartCounts {
    pub feature: usize,
    pub classification: usize,
    pub total: usize,
}

/// Ordered layer list plus everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPlan {
    layers: Vec<LayerSpec>,
    input_size: usize,
    input_channels: usize,
    channels: Vec<usize>,
    fc_neurons: Vec<usize>,
    flatten_width: usize,
    dropout_rate: f32,
}

pub fn build_plan(config: &BaselineConfig) -> Result<ModelPlan> {
    config.validate()?;
    let channels = channel_schedule(config.base_channels, config.icf, config.num_blocks);
    if channels.contains(&0) {
        return Err(Error::config("channel schedule produced an empty block"));
    }
    ModelPlan::from_schedule(
        config.input_size,
        config.input_channels,
        &channels,
        &config.fc_neurons,
        config.dropout_rate as f32,
    )
}

impl ModelPlan {
    /// Assemble `blocks × [conv+relu, pool]`, then flatten and
    /// `[dropout, dense(+relu)]` per hidden width, then `dropout, dense, softmax`.
    pub fn from_schedule(
        input_size: usize,
        input_channels: usize,
        channels: &[usize],
        fc_neurons: &[usize],
        dropout_rate: f32,
    ) -> Result<ModelPlan> {
        if channels.is_empty() || fc_neurons.is_empty() {
            return Err(Error::config("plan needs at least one conv block and one dense layer"));
        }
        let halvings = 1usize << channels.len();
        if !input_size.is_multiple_of(halvings) {
            return Err(Error::config(format!(
                "input_size {input_size} must be divisible by 2^num_blocks = {halvings}"
            )));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::config(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
        }
        let mut layers = Vec::new();
        let mut c_in = input_channels;
        for &c in channels {
            layers.push(LayerSpec::Conv3x3 {
                in_channels: c_in,
                out_channels: c,
            });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::MaxPool2x2);
            c_in = c;
        }
        let side = input_size / halvings;
        let flatten_width = side * side * c_in;
        layers.push(LayerSpec::Flatten);
        let mut n_in = flatten_width;
        for (i, &n_out) in fc_neurons.iter().enumerate() {
            layers.push(LayerSpec::Dropout { rate: dropout_rate });
            layers.push(LayerSpec::Dense { n_in, n_out });
            layers.push(if i + 1 == fc_neurons.len() {
                LayerSpec::Softmax
            } else {
                LayerSpec::Relu
            });
            n_in = n_out;
        }
        Ok(ModelPlan {
            layers,
            input_size,
            input_channels,
            channels: channels.to_vec(),
            fc_neurons: fc_neurons.to_vec(),
            flatten_width,
            dropout_rate,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.input_size, self.input_size, self.input_channels]
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn fc_neurons(&self) -> &[usize] {
        &self.fc_neurons
    }

    pub fn num_classes(&self) -> usize {
        *self.fc_neurons.last().expect("plan has a dense head")
    }

    pub fn flatten_width(&self) -> usize {
        self.flatten_width
    }

    pub fn dropout_rate(&self) -> f32 {
        self.dropout_rate
    }

    fn flatten_index(&self) -> usize {
        self.layers
            .iter()
            .position(|l| *l == LayerSpec::Flatten)
            .expect("plan always contains a flatten layer")
    }

    pub fn layer_counts(&self) -> PartCounts {
        let split = self.flatten_index();
        let feature = self.layers[..split].iter().filter(|l| l.is_counted()).count();
        let classification = self.layers[split..].iter().filter(|l| l.is_counted()).count();
        PartCounts {
            feature,
            classification,
            total: feature + classification,
        }
    }

    /// Trainable layers in execution order.
    pub fn trainable(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().filter(|l| l.is_trainable())
    }

    /// Text table of parameter and layer counts per model part.
    pub fn summary_table(&self) -> String {
        let p = count_params(self);
        let l = self.layer_counts();
        let mut out = String::new();
        out.push_str(&format!("{:<18}{:>14}{:>10}\n", "Part", "# Parameters", "# Layers"));
        for (name, params, layers) in [
            ("Feature learning", p.feature, l.feature),
            ("Classification", p.classification, l.classification),
            ("Complete model", p.total, l.total),
        ] {
            out.push_str(&format!(
                "{:<18}{:>14}{:>10}\n",
                name,
                thousands(params),
                layers
            ));
        }
        out
    }
}

impl fmt::Display for ModelPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary_table())
    }
}

pub fn count_params(plan: &ModelPlan) -> PartCounts {
    let split = plan.flatten_index();
    let feature = plan.layers[..split].iter().map(LayerSpec::param_count).sum();
    let classification = plan.layers[split..].iter().map(LayerSpec::param_count).sum();
    PartCounts {
        feature,
        classification,
        total: feature + classification,
    }
}

pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Size of a pretrained comparison network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceModel {
    pub name: &'static str,
    pub feature_params: usize,
    pub feature_layers: usize,
    pub classification_params: usize,
    pub classification_layers: usize,
}

impl ReferenceModel {
    pub fn total_params(&self) -> usize {
        self.feature_params + self.classification_params
    }

    pub fn total_layers(&self) -> usize {
        self.feature_layers + self.classification_layers
    }
}

pub const REFERENCE_MODELS: [ReferenceModel; 6] = [
    ReferenceModel {
        name: "Inception-v3",
        feature_params: 21_802_784,
        feature_layers: 311,
        classification_params: 6_292_755,
        classification_layers: 7,
    },
    ReferenceModel {
        name: "Inception-ResNet-v2",
        feature_params: 54_336_736,
        feature_layers: 780,
        classification_params: 4_719_891,
        classification_layers: 7,
    },
    ReferenceModel {
        name: "Xception",
        feature_params: 20_861_480,
        feature_layers: 132,
        classification_params: 9_831_699,
        classification_layers: 7,
    },
    ReferenceModel {
        name: "DenseNet169",
        feature_params: 12_642_880,
        feature_layers: 595,
        classification_params: 3_915_027,
        classification_layers: 7,
    },
    ReferenceModel {
        name: "MobileNetV2",
        feature_params: 2_257_984,
        feature_layers: 155,
        classification_params: 62_739,
        classification_layers: 7,
    },
    ReferenceModel {
        name: "NASNetMobile",
        feature_params: 4_269_716,
        feature_layers: 769,
        classification_params: 51_987,
        classification_layers: 7,
    },
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeRatios {
    pub param_ratio: f64,
    pub layer_ratio: f64,
}

/// Plan size relative to the mean size of `references`.
pub fn size_ratios(plan: &ModelPlan, references: &[ReferenceModel]) -> Result<SizeRatios> {
    if references.is_empty() {
        return Err(Error::input("size_ratios needs at least one reference model"));
    }
    let n = references.len() as f64;
    let mean_params = references.iter().map(|r| r.total_params() as f64).sum::<f64>() / n;
    let mean_layers = references.iter().map(|r| r.total_layers() as f64).sum::<f64>() / n;
    Ok(SizeRatios {
        param_ratio: count_params(plan).total as f64 / mean_params,
        layer_ratio: plan.layer_counts().total as f64 / mean_layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_structure() {
        let plan = build_plan(&BaselineConfig::default()).unwrap();
        assert_eq!(plan.flatten_width(), 7 * 7 * 256);
        let l = plan.layer_counts();
        assert_eq!((l.feature, l.classification, l.total), (10, 7, 17));
        let kinds: Vec<_> = plan.layers()[plan.flatten_index()..]
            .iter()
            .filter(|l| l.is_counted())
            .map(std::mem::discriminant)
            .collect();
        let d = std::mem::discriminant(&LayerSpec::Dropout { rate: 0.0 });
        let dense = std::mem::discriminant(&LayerSpec::Dense { n_in: 0, n_out: 0 });
        let flat = std::mem::discriminant(&LayerSpec::Flatten);
        assert_eq!(kinds, vec![flat, d, dense, d, dense, d, dense]);
    }

    #[test]
    fn small_plan_flatten() {
        let cfg = BaselineConfig {
            input_size: 64,
            num_blocks: 3,
            ..Default::default()
        };
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(plan.flatten_width(), 8 * 8 * plan.channels()[2]);
        assert_eq!(plan.flatten_width(), 8 * 8 * 64);
    }

    #[test]
    fn default_counts() {
        let c = count_params(&build_plan(&BaselineConfig::default()).unwrap());
        assert_eq!((c.feature, c.classification, c.total), (392_608, 603_411, 996_019));
        let icf = BaselineConfig {
            icf: 1.7,
            ..Default::default()
        };
        assert_eq!(count_params(&build_plan(&icf).unwrap()).total, 460_247);
        assert_eq!(count_params(&build_plan(&BaselineConfig::simplified()).unwrap()).total, 301_727);
    }

    #[test]
    fn ratios() {
        let base = build_plan(&BaselineConfig::default()).unwrap();
        let r = size_ratios(&base, &REFERENCE_MODELS).unwrap();
        assert!((r.param_ratio * 100.0 - 4.2).abs() <= 0.1, "{r:?}");
        assert!((r.layer_ratio * 100.0 - 3.7).abs() <= 0.1, "{r:?}");
        assert!(size_ratios(&base, &[]).is_err());
    }

    #[test]
    fn table_text() {
        let t = build_plan(&BaselineConfig::default()).unwrap().summary_table();
        assert!(t.contains("392,608") && t.contains("603,411") && t.contains("996,019"));
        assert_eq!(thousands(12), "12");
        assert_eq!(thousands(1_000), "1,000");
    }
}
