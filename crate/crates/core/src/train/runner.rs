//! Mini-batch training and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::model::{backward, forward, ModelPlan, ParamBundle};
use crate::nn::{self, Mode};
use crate::train::config::{SplitSpec, TrainConfig};
use crate::train::sgd::sgd_nesterov_step;
use crate::train::split::{split_indices, Split};

/// Metrics for one epoch. Training figures are running averages over the
/// epoch's batches (dropout active); validation figures use eval mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    /// Softmax output per sample, in input order.
    pub probabilities: Vec<Vec<f32>>,
    pub predictions: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ParamBundle,
    pub records: Vec<EpochRecord>,
    /// Optimizer steps taken over all epochs.
    pub steps: usize,
    pub split: Split,
}

#[derive(Clone, Debug)]
pub struct Fitted {
    pub params: ParamBundle,
    pub records: Vec<EpochRecord>,
    pub steps: usize,
}

const DROPOUT_STREAM_SALT: u64 = 0x6a09_e667_f3bc_c909;

fn dropout_rng(seed: u64, epoch: usize, position: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ DROPOUT_STREAM_SALT);
    r.set_stream(((epoch as u64) << 32) | position as u64);
    r
}

fn shuffle_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(epoch as u64);
    r
}

/// Eval-mode pass over `samples`. Parameters are only read.
pub fn evaluate(plan: &ModelPlan, params: &ParamBundle, samples: &[&LabeledSample]) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::input("evaluate needs at least one sample"));
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    let mut probabilities = Vec::with_capacity(samples.len());
    let mut predictions = Vec::with_capacity(samples.len());
    for s in samples {
        let trace = forward(plan, params, &s.image, Mode::Eval, None)?;
        let out = nn::softmax_crossentropy(&trace.logits, s.label)?;
        let pred = out.probabilities.argmax();
        correct += usize::from(pred == s.label);
        loss += out.loss;
        predictions.push(pred);
        probabilities.push(out.probabilities.into_data());
    }
    let n = samples.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
        probabilities,
        predictions,
    })
}

/// Trains on `train`, validating after every epoch.
pub fn fit(
    plan: &ModelPlan,
    mut params: ParamBundle,
    train: &[&LabeledSample],
    validation: &[&LabeledSample],
    config: &TrainConfig,
) -> Result<Fitted> {
    config.validate()?;
    params.check_against(plan)?;
    if train.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    if validation.is_empty() {
        return Err(Error::input("validation set is empty"));
    }
    let mut velocity = params.zeros_like();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let mut steps = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng(config.seed, epoch));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut grads = params.zeros_like();
            for (k, &idx) in chunk.iter().enumerate() {
                let s = train[idx];
                let position = batch * config.batch_size + k;
                let mut rng = dropout_rng(config.seed, epoch, position);
                let trace = forward(plan, &params, &s.image, Mode::Train, Some(&mut rng))?;
                let out = nn::softmax_crossentropy(&trace.logits, s.label)?;
                if !out.loss.is_finite() {
                    return Err(Error::NonFinite { epoch, batch });
                }
                loss_sum += out.loss;
                correct += usize::from(out.probabilities.argmax() == s.label);
                grads.add_assign(&backward(plan, &params, &trace, &out.grad_logits)?)?;
            }
            grads.scale(1.0 / chunk.len() as f32);
            sgd_nesterov_step(&mut params, &grads, &mut velocity, config)?;
            steps += 1;
            if !params.is_finite() {
                return Err(Error::NonFinite { epoch, batch });
            }
        }
        let val = evaluate(plan, &params, validation)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
        };
        log::info!(
            "epoch {:>3}: train loss {:.4} acc {:.4} | val loss {:.4} acc {:.4}",
            epoch + 1,
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy
        );
        records.push(record);
    }
    Ok(Fitted { params, records, steps })
}

/// Splits `data`, then trains on the train part with per-epoch validation.
pub fn train(
    plan: &ModelPlan,
    params: ParamBundle,
    data: &[LabeledSample],
    config: &TrainConfig,
    split_spec: &SplitSpec,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::input("no training data"));
    }
    let labels: Vec<usize> = data.iter().map(|s| s.label).collect();
    let split = split_indices(&labels, plan.num_classes(), split_spec)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| &data[i]).collect::<Vec<_>>();
    let f = fit(plan, params, &pick(&split.train), &pick(&split.validation), config)?;
    Ok(TrainOutcome {
        params: f.params,
        records: f.records,
        steps: f.steps,
        split,
    })
}

/// Final-epoch train accuracy minus validation accuracy.
pub fn overfit_gap(records: &[EpochRecord]) -> Result<f64> {
    records
        .last()
        .map(|r| r.train_accuracy - r.val_accuracy)
        .ok_or_else(|| Error::input("overfit gap of an empty record list"))
}

/// Number of optimizer steps in one epoch.
pub fn steps_per_epoch(n_train: usize, batch_size: usize) -> usize {
    n_train.div_ceil(batch_size)
}

/// Convenience for callers holding owned samples.
pub fn as_refs(samples: &[LabeledSample]) -> Vec<&LabeledSample> {
    samples.iter().collect()
}

