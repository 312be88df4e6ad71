use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{backward, bce_loss, build, forward, predict, ModelSpec, TrainedModel};
use crate::error::{Error, Result};

/// Fixed-shape samples stored channel-major, with binary labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    channels: usize,
    length: usize,
    inputs: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            inputs: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Append one sample given as `channels` rows of `length` values.
    pub fn push(&mut self, channels: &[Vec<f64>], label: u8) -> Result<()> {
        if channels.len() != self.channels || channels.iter().any(|c| c.len() != self.length) {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} channels of lengths {:?}, dataset expects {} × {}",
                channels.len(),
                channels.iter().map(Vec::len).collect::<Vec<_>>(),
                self.channels,
                self.length
            )));
        }
        if label > 1 {
            return Err(Error::ShapeMismatch(format!("label {label} is not binary")));
        }
        for c in channels {
            self.inputs.extend_from_slice(c);
        }
        self.labels.push(label);
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.channels * self.length;
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Replace every label; `labels` must match the sample count.
    pub fn relabel(&mut self, labels: Vec<u8>) {
        assert_eq!(labels.len(), self.labels.len(), "one label per sample");
        self.labels = labels;
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::new(self.channels, self.length);
        for &i in indices {
            out.inputs.extend_from_slice(self.sample(i));
            out.labels.push(self.labels[i]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Sample-weighted mean loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
        }
    }
}

/// Train a freshly initialized model with Adam on mean BCE.
///
/// Initialization and the per-epoch shuffles are both derived from
/// `cfg.seed`, so identical inputs give bitwise-identical models.
pub fn train(spec: ModelSpec, data: &Dataset, cfg: &TrainConfig) -> Result<(TrainedModel, TrainReport)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.channels() != spec.in_channels || data.length() != spec.input_len {
        return Err(Error::ShapeMismatch(format!(
            "dataset is {} × {}, model expects {} × {}",
            data.channels(),
            data.length(),
            spec.in_channels,
            spec.input_len
        )));
    }
    let batch_size = cfg.batch_size.max(1);
    let mut model = build(spec, cfg.seed)?;
    let mut adam = Adam::new(model.params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, idx) in order.chunks(batch_size).enumerate() {
            let inputs: Vec<&[f64]> = idx.iter().map(|&i| data.sample(i)).collect();
            let labels: Vec<f64> = idx.iter().map(|&i| f64::from(data.label(i))).collect();
            let (probs, cache) = forward(&model, &inputs)?;
            let loss = bce_loss(&probs, &labels);
            let grad = backward(&model, &cache, &labels)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b });
            }
            adam.step(&mut model.params, &grad, cfg);
            total += loss * idx.len() as f64;
        }
        let mean = total / data.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        report.epoch_losses.push(mean);
    }
    Ok((model, report))
}

/// Fraction of samples whose thresholded prediction (`p ≥ 0.5` → 1) matches
/// the label.
pub fn evaluate(model: &TrainedModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inputs: Vec<&[f64]> = (0..data.len()).map(|i| data.sample(i)).collect();
    let probs = predict(model, &inputs)?;
    let correct = probs
        .iter()
        .zip(data.labels())
        .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
        .count();
    Ok(correct as f64 / data.len() as f64)
}
