use std::collections::HashMap;

use crate::autodiff::{Tape, Tensor, Var};
use crate::distribution::argmax;
use crate::error::{Error, Result};
use crate::rng::{fork, seeded, shuffle, SeededRng};
use crate::scalar::Scalar;
use crate::vit::{batch_logits, patchify, BoundParams, ModelParams, ViTConfig};

use super::dataset::{one_hot, DatasetSplit, LabeledSample, View};
use super::optimizer::{AdamW, OptimizerState};

/// Samples per forward pass when evaluating without gradients.
const EVAL_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub optimizer: AdamW,
    /// Stop after the first epoch whose training accuracy reaches this value.
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 50,
            seed: 0,
            shuffle: true,
            optimizer: AdamW::default(),
            stop_at_train_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch size and epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingReport<T> {
    pub view: View,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights are in `best_params`.
    pub best_epoch: usize,
    pub best_params: ModelParams<T>,
    pub final_params: ModelParams<T>,
}

impl<T> TrainingReport<T> {
    /// `epoch,train_loss,train_acc,val_loss,val_acc`, one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
            ));
        }
        out
    }
}

/// Mean cross-entropy, accuracy and per-sample predictions without dropout.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
}

struct Prepared<T> {
    patches: Vec<Tensor<T>>,
    labels: Vec<usize>,
}

fn prepare<T: Scalar>(samples: &[LabeledSample], config: &ViTConfig, view: View) -> Result<Prepared<T>> {
    let mut patches = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        if s.view != view {
            return Err(Error::contract(format!(
                "{} sample found while training the {view} model",
                s.view
            )));
        }
        if s.class_index >= config.num_classes {
            return Err(Error::contract(format!(
                "class {} out of range for {} classes",
                s.class_index, config.num_classes
            )));
        }
        patches.push(patchify(&s.image, config)?);
        labels.push(s.class_index);
    }
    Ok(Prepared { patches, labels })
}

fn targets<T: Scalar>(labels: &[usize], k: usize) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(labels.len() * k);
    for &c in labels {
        data.extend_from_slice(one_hot::<T>(c, k)?.data());
    }
    Tensor::new(&[labels.len(), k], data)
}

fn evaluate_prepared<T: Scalar>(params: &ModelParams<T>, data: &Prepared<T>, config: &ViTConfig) -> Result<Evaluation> {
    let n = data.labels.len();
    if n == 0 {
        return Ok(Evaluation {
            loss: 0.0,
            accuracy: 0.0,
            predictions: Vec::new(),
        });
    }
    let k = config.num_classes;
    // dropout is off, so this generator is never drawn from
    let mut rng = seeded(0);
    let mut total = 0.0;
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(n);
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&mut tape, params, config, false)?;
        let refs: Vec<&Tensor<T>> = data.patches[start..end].iter().collect();
        let z = batch_logits(&mut tape, &refs, &bound, config, &mut rng, false)?;
        let p = tape.softmax(z)?;
        let loss = tape.cross_entropy(p, &targets(&data.labels[start..end], k)?)?;
        total += tape.value(loss).data()[0].as_f64() * (end - start) as f64;
        for (row, &label) in tape.value(p).data().chunks(k).zip(&data.labels[start..end]) {
            let pred = argmax(row);
            correct += usize::from(pred == label);
            predictions.push(pred);
        }
    }
    Ok(Evaluation {
        loss: total / n as f64,
        accuracy: correct as f64 / n as f64,
        predictions,
    })
}

/// Evaluates `params` on samples of a single view.
pub fn evaluate<T: Scalar>(params: &ModelParams<T>, samples: &[LabeledSample], config: &ViTConfig) -> Result<Evaluation> {
    let Some(view) = samples.first().map(|s| s.view) else {
        return evaluate_prepared(params, &Prepared { patches: Vec::new(), labels: Vec::new() }, config);
    };
    evaluate_prepared(params, &prepare(samples, config, view)?, config)
}

fn train_step<T: Scalar>(
    params: &mut ModelParams<T>,
    state: &mut OptimizerState<T>,
    data: &Prepared<T>,
    batch: &[usize],
    config: &ViTConfig,
    rng: &mut SeededRng,
) -> Result<()> {
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params, config, true)?;
    let refs: Vec<&Tensor<T>> = batch.iter().map(|&i| &data.patches[i]).collect();
    let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
    let z = batch_logits(&mut tape, &refs, &bound, config, rng, true)?;
    let p = tape.softmax(z)?;
    let loss = tape.cross_entropy(p, &targets(&labels, config.num_classes)?)?;
    let grads = tape.backward(loss)?;
    let by_name: HashMap<String, Var> = ModelParams::<T>::layout(config)
        .into_iter()
        .map(|(name, _, _)| name)
        .zip(bound.vars().iter().copied())
        .collect();
    let flat: Vec<Vec<T>> = params
        .iter()
        .map(|(name, t)| match by_name.get(name).and_then(|&v| grads.get(v)) {
            Some(g) => g.to_vec(),
            None => vec![T::zero(); t.numel()],
        })
        .collect();
    state.step(params, &flat)
}

/// Trains one view's model; every sample in `data` must carry that view.
///
/// The returned best checkpoint maximizes validation accuracy (training accuracy when the
/// validation set is empty); ties go to the earliest epoch.
pub fn train<T: Scalar>(
    model: ModelParams<T>,
    data: &DatasetSplit<LabeledSample>,
    config: &TrainConfig,
    vit_config: &ViTConfig,
) -> Result<TrainingReport<T>> {
    config.validate()?;
    vit_config.validate()?;
    model.validate(vit_config)?;
    let view = data
        .train
        .first()
        .map(|s| s.view)
        .ok_or_else(|| Error::contract("training set is empty"))?;
    let train_set = prepare::<T>(&data.train, vit_config, view)?;
    let val_set = prepare::<T>(&data.validation, vit_config, view)?;

    let mut root = seeded(config.seed);
    let mut order_rng = fork(&mut root);
    let mut dropout_rng = fork(&mut root);
    let mut params = model;
    let mut state = OptimizerState::new(&params, config.optimizer);
    let mut order: Vec<usize> = (0..train_set.labels.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ModelParams<T>)> = None;

    for epoch in 1..=config.epochs {
        if config.shuffle {
            shuffle(&mut order, &mut order_rng);
        }
        for batch in order.chunks(config.batch_size) {
            train_step(&mut params, &mut state, &train_set, batch, vit_config, &mut dropout_rng)?;
        }
        let tr = evaluate_prepared(&params, &train_set, vit_config)?;
        let va = evaluate_prepared(&params, &val_set, vit_config)?;
        let record = EpochRecord {
            epoch,
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            val_loss: va.loss,
            val_acc: va.accuracy,
        };
        epochs.push(record);
        let score = if val_set.labels.is_empty() { tr.accuracy } else { va.accuracy };
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, epoch, params.clone()));
        }
        if config.stop_at_train_accuracy.is_some_and(|target| tr.accuracy >= target) {
            break;
        }
    }
    let (_, best_epoch, best_params) = best.expect("at least one epoch");
    Ok(TrainingReport {
        view,
        epochs,
        best_epoch,
        best_params,
        final_params: params,
    })
}
