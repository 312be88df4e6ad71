//! A small 1D CNN with hand-written backpropagation.
//!
//! Layout: conv(k1) → ReLU → maxpool(7) → conv(k2) → ReLU → maxpool(3) →
//! flatten → linear → sigmoid. Convolutions are valid cross-correlations with
//! stride and dilation 1; each multiplies the channel count by `factor`.
//! Pooling windows do not overlap and trailing samples that do not fill a
//! window are dropped.
//!
//! All parameters live in one flat vector (see [`ParamLayout`]) so that the
//! optimizer and the finite-difference checker can treat them uniformly.

mod checkpoint;
mod gradcheck;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, GradCheckReport, GRADCHECK_TOLERANCE};
pub use train::{evaluate, train, Dataset, TrainConfig, TrainReport};

pub const POOL1: usize = 7;
pub const POOL2: usize = 3;

/// How `(res / 600) · 18` is turned into an integer kernel size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRounding {
    #[default]
    HalfEven,
    HalfUp,
    Floor,
}

impl std::str::FromStr for KernelRounding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "half_even" => Ok(KernelRounding::HalfEven),
            "half_up" => Ok(KernelRounding::HalfUp),
            "floor" => Ok(KernelRounding::Floor),
            other => Err(format!("unknown rounding `{other}` (half_even|half_up|floor)")),
        }
    }
}

/// `⟨input, channels, factor, kernel1, kernel2⟩` plus the pool sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub input_len: usize,
    pub in_channels: usize,
    pub factor: usize,
    pub kernel1: usize,
    pub kernel2: usize,
    pub pool1: usize,
    pub pool2: usize,
}

/// Derived per-layer lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLengths {
    pub conv1: usize,
    pub pool1: usize,
    pub conv2: usize,
    pub pool2: usize,
}

impl ModelSpec {
    pub fn new(input_len: usize, in_channels: usize, factor: usize, kernel1: usize, kernel2: usize) -> Self {
        Self {
            input_len,
            in_channels,
            factor,
            kernel1,
            kernel2,
            pool1: POOL1,
            pool2: POOL2,
        }
    }

    /// Raw-series architecture at downsampled resolution `res`.
    pub fn raw(res: usize, rounding: KernelRounding) -> Self {
        Self::new(res, 1, 5, raw_kernel1(res, rounding), 2)
    }

    pub fn betti(grid_len: usize) -> Self {
        Self::new(grid_len, 3, 7, 6, 2)
    }

    pub fn spectra(grid_len: usize, channels: usize) -> Self {
        Self::new(grid_len, channels, 3, 6, 2)
    }

    pub fn conv1_channels(&self) -> usize {
        self.in_channels * self.factor
    }

    pub fn conv2_channels(&self) -> usize {
        self.in_channels * self.factor * self.factor
    }

    /// Layer lengths, or the first layer whose length drops below one.
    pub fn lengths(&self) -> Result<LayerLengths> {
        for (name, v) in [
            ("input", self.input_len),
            ("in_channels", self.in_channels),
            ("factor", self.factor),
            ("kernel1", self.kernel1),
            ("kernel2", self.kernel2),
            ("pool1", self.pool1),
            ("pool2", self.pool2),
        ] {
            if v == 0 {
                return Err(Error::ArchitectureInfeasible { layer: name, len: 0 });
            }
        }
        let conv1 = self.input_len as i64 - self.kernel1 as i64 + 1;
        if conv1 < 1 {
            return Err(Error::ArchitectureInfeasible { layer: "conv1", len: conv1 });
        }
        let pool1 = conv1 / self.pool1 as i64;
        if pool1 < 1 {
            return Err(Error::ArchitectureInfeasible { layer: "pool1", len: pool1 });
        }
        let conv2 = pool1 - self.kernel2 as i64 + 1;
        if conv2 < 1 {
            return Err(Error::ArchitectureInfeasible { layer: "conv2", len: conv2 });
        }
        let pool2 = conv2 / self.pool2 as i64;
        if pool2 < 1 {
            return Err(Error::ArchitectureInfeasible { layer: "pool2", len: pool2 });
        }
        Ok(LayerLengths {
            conv1: conv1 as usize,
            pool1: pool1 as usize,
            conv2: conv2 as usize,
            pool2: pool2 as usize,
        })
    }

    pub fn fc_inputs(&self) -> Result<usize> {
        Ok(self.conv2_channels() * self.lengths()?.pool2)
    }
}

/// `(res / 600) · 18` rounded per `rounding`, at least 1.
pub fn raw_kernel1(res: usize, rounding: KernelRounding) -> usize {
    let num = res * 18;
    let (q, r) = (num / 600, num % 600);
    let k = match rounding {
        KernelRounding::Floor => q,
        KernelRounding::HalfUp => q + usize::from(2 * r >= 600),
        KernelRounding::HalfEven => match (2 * r).cmp(&600) {
            std::cmp::Ordering::Greater => q + 1,
            std::cmp::Ordering::Equal => q + q % 2,
            std::cmp::Ordering::Less => q,
        },
    };
    k.max(1)
}

/// Offsets of each parameter group inside the flat vector, in declaration
/// order: conv1 weights `(c1, c, k1)`, conv1 bias, conv2 weights
/// `(c2, c1, k2)`, conv2 bias, fc weights, fc bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub conv1_w: usize,
    pub conv1_b: usize,
    pub conv2_w: usize,
    pub conv2_b: usize,
    pub fc_w: usize,
    pub fc_b: usize,
    pub total: usize,
}

impl ParamLayout {
    pub fn of(spec: &ModelSpec) -> Result<Self> {
        let (c, c1, c2) = (spec.in_channels, spec.conv1_channels(), spec.conv2_channels());
        let fc = spec.fc_inputs()?;
        let conv1_w = 0;
        let conv1_b = conv1_w + c1 * c * spec.kernel1;
        let conv2_w = conv1_b + c1;
        let conv2_b = conv2_w + c2 * c1 * spec.kernel2;
        let fc_w = conv2_b + c2;
        let fc_b = fc_w + fc;
        Ok(Self {
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            fc_w,
            fc_b,
            total: fc_b + 1,
        })
    }

    /// Named groups as `(name, range)`, in declaration order.
    pub fn groups(&self) -> [(&'static str, std::ops::Range<usize>); 6] {
        [
            ("conv1.weight", self.conv1_w..self.conv1_b),
            ("conv1.bias", self.conv1_b..self.conv2_w),
            ("conv2.weight", self.conv2_w..self.conv2_b),
            ("conv2.bias", self.conv2_b..self.fc_w),
            ("fc.weight", self.fc_w..self.fc_b),
            ("fc.bias", self.fc_b..self.total),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub lengths: LayerLengths,
    pub layout: ParamLayout,
    pub params: Vec<f64>,
}

/// Allocate a model with parameters drawn uniformly from `±√(1/fan_in)`.
pub fn build(spec: ModelSpec, seed: u64) -> Result<TrainedModel> {
    let lengths = spec.lengths()?;
    let layout = ParamLayout::of(&spec)?;
    let mut params = vec![0.0; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fan_in = [
        spec.in_channels * spec.kernel1,
        spec.in_channels * spec.kernel1,
        spec.conv1_channels() * spec.kernel2,
        spec.conv1_channels() * spec.kernel2,
        spec.fc_inputs()?,
        spec.fc_inputs()?,
    ];
    for ((_, range), fan) in layout.groups().into_iter().zip(fan_in) {
        let bound = (1.0 / fan as f64).sqrt();
        for p in &mut params[range] {
            *p = rng.random_range(-bound..bound);
        }
    }
    Ok(TrainedModel {
        spec,
        lengths,
        layout,
        params,
    })
}

/// Intermediates of one sample's forward pass.
#[derive(Debug, Clone)]
struct SampleCache {
    pre1: Vec<f64>,
    arg1: Vec<usize>,
    pooled1: Vec<f64>,
    pre2: Vec<f64>,
    arg2: Vec<usize>,
    flat: Vec<f64>,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    samples: Vec<SampleCache>,
    pub probabilities: Vec<f64>,
}

/// Valid cross-correlation: `out[o][t] = b[o] + Σ_i Σ_k w[o][i][k]·x[i][t+k]`.
fn conv1d(x: &[f64], c_in: usize, len_in: usize, w: &[f64], b: &[f64], c_out: usize, k: usize) -> Vec<f64> {
    let len_out = len_in + 1 - k;
    let mut out = vec![0.0; c_out * len_out];
    for o in 0..c_out {
        let row = &mut out[o * len_out..(o + 1) * len_out];
        row.fill(b[o]);
        for i in 0..c_in {
            let xi = &x[i * len_in..(i + 1) * len_in];
            let wk = &w[(o * c_in + i) * k..(o * c_in + i + 1) * k];
            for (kk, &wv) in wk.iter().enumerate() {
                for (t, r) in row.iter_mut().enumerate() {
                    *r += wv * xi[t + kk];
                }
            }
        }
    }
    out
}

/// ReLU then non-overlapping max pooling; returns pooled values and the
/// absolute argmax index of each window (lowest on ties).
fn relu_pool(pre: &[f64], channels: usize, len: usize, pool: usize) -> (Vec<f64>, Vec<usize>) {
    let out_len = len / pool;
    let mut vals = Vec::with_capacity(channels * out_len);
    let mut args = Vec::with_capacity(channels * out_len);
    for c in 0..channels {
        for t in 0..out_len {
            let start = c * len + t * pool;
            let mut best = start;
            let mut best_v = pre[start].max(0.0);
            for j in start + 1..start + pool {
                let v = pre[j].max(0.0);
                if v > best_v {
                    best_v = v;
                    best = j;
                }
            }
            vals.push(best_v);
            args.push(best);
        }
    }
    (vals, args)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl TrainedModel {
    pub fn sample_len(&self) -> usize {
        self.spec.in_channels * self.spec.input_len
    }

    fn group(&self, r: std::ops::Range<usize>) -> &[f64] {
        &self.params[r]
    }

    fn forward_one(&self, x: &[f64]) -> (f64, SampleCache) {
        let s = &self.spec;
        let l = &self.layout;
        let (c, c1, c2) = (s.in_channels, s.conv1_channels(), s.conv2_channels());
        let pre1 = conv1d(
            x,
            c,
            s.input_len,
            self.group(l.conv1_w..l.conv1_b),
            self.group(l.conv1_b..l.conv2_w),
            c1,
            s.kernel1,
        );
        let (pooled1, arg1) = relu_pool(&pre1, c1, self.lengths.conv1, s.pool1);
        let pre2 = conv1d(
            &pooled1,
            c1,
            self.lengths.pool1,
            self.group(l.conv2_w..l.conv2_b),
            self.group(l.conv2_b..l.fc_w),
            c2,
            s.kernel2,
        );
        let (flat, arg2) = relu_pool(&pre2, c2, self.lengths.conv2, s.pool2);
        let logit = self.params[l.fc_b]
            + self
                .group(l.fc_w..l.fc_b)
                .iter()
                .zip(&flat)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        (
            sigmoid(logit),
            SampleCache {
                pre1,
                arg1,
                pooled1,
                pre2,
                arg2,
                flat,
            },
        )
    }
}

fn check_inputs(model: &TrainedModel, inputs: &[&[f64]]) -> Result<()> {
    let want = model.sample_len();
    if let Some((i, bad)) = inputs.iter().enumerate().find(|(_, x)| x.len() != want) {
        return Err(Error::ShapeMismatch(format!(
            "sample {i} has {} values, model expects {} channels × {} = {want}",
            bad.len(),
            model.spec.in_channels,
            model.spec.input_len
        )));
    }
    Ok(())
}

/// Probabilities for a batch of samples, each laid out channel-major
/// (`channels × input_len`).
pub fn forward(model: &TrainedModel, inputs: &[&[f64]]) -> Result<(Vec<f64>, ForwardCache)> {
    check_inputs(model, inputs)?;
    let (probabilities, samples): (Vec<f64>, Vec<SampleCache>) =
        inputs.iter().map(|x| model.forward_one(x)).unzip();
    let cache = ForwardCache {
        inputs: inputs.iter().map(|x| x.to_vec()).collect(),
        samples,
        probabilities: probabilities.clone(),
    };
    Ok((probabilities, cache))
}

/// Probabilities only.
pub fn predict(model: &TrainedModel, inputs: &[&[f64]]) -> Result<Vec<f64>> {
    check_inputs(model, inputs)?;
    Ok(inputs.iter().map(|x| model.forward_one(x).0).collect())
}

pub const PROB_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy with probabilities clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(probabilities: &[f64], labels: &[f64]) -> f64 {
    let n = probabilities.len().max(1) as f64;
    probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// Gradient of the mean BCE with respect to every parameter, laid out like
/// `model.params`.
pub fn backward(model: &TrainedModel, cache: &ForwardCache, labels: &[f64]) -> Result<Vec<f64>> {
    if labels.len() != cache.samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for a batch of {}",
            labels.len(),
            cache.samples.len()
        )));
    }
    let s = &model.spec;
    let l = &model.layout;
    let len = &model.lengths;
    let (c, c1, c2) = (s.in_channels, s.conv1_channels(), s.conv2_channels());
    let (k1, k2) = (s.kernel1, s.kernel2);
    let w2 = &model.params[l.conv2_w..l.conv2_b];
    let fc_w = &model.params[l.fc_w..l.fc_b];
    let batch = labels.len() as f64;
    let mut grad = vec![0.0; l.total];

    for ((x, sc), (&p, &y)) in cache
        .inputs
        .iter()
        .zip(&cache.samples)
        .zip(cache.probabilities.iter().zip(labels))
    {
        let dlogit = (p - y) / batch;
        grad[l.fc_b] += dlogit;
        for (g, v) in grad[l.fc_w..l.fc_b].iter_mut().zip(&sc.flat) {
            *g += dlogit * v;
        }

        // Through pool2 and ReLU into conv2 pre-activations.
        let mut dpre2 = vec![0.0; c2 * len.conv2];
        for (j, &arg) in sc.arg2.iter().enumerate() {
            if sc.pre2[arg] > 0.0 {
                dpre2[arg] += dlogit * fc_w[j];
            }
        }

        let mut dpooled1 = vec![0.0; c1 * len.pool1];
        for o in 0..c2 {
            let d = &dpre2[o * len.conv2..(o + 1) * len.conv2];
            grad[l.conv2_b + o] += d.iter().sum::<f64>();
            for i in 0..c1 {
                let xin = &sc.pooled1[i * len.pool1..(i + 1) * len.pool1];
                let widx = (o * c1 + i) * k2;
                for kk in 0..k2 {
                    let mut acc = 0.0;
                    let wv = w2[widx + kk];
                    let dx = &mut dpooled1[i * len.pool1..(i + 1) * len.pool1];
                    for (t, &dv) in d.iter().enumerate() {
                        acc += dv * xin[t + kk];
                        dx[t + kk] += dv * wv;
                    }
                    grad[l.conv2_w + widx + kk] += acc;
                }
            }
        }

        let mut dpre1 = vec![0.0; c1 * len.conv1];
        for (j, &arg) in sc.arg1.iter().enumerate() {
            if sc.pre1[arg] > 0.0 {
                dpre1[arg] += dpooled1[j];
            }
        }

        for o in 0..c1 {
            let d = &dpre1[o * len.conv1..(o + 1) * len.conv1];
            grad[l.conv1_b + o] += d.iter().sum::<f64>();
            for i in 0..c {
                let xin = &x[i * s.input_len..(i + 1) * s.input_len];
                let widx = (o * c + i) * k1;
                for kk in 0..k1 {
                    let acc: f64 = d.iter().enumerate().map(|(t, &dv)| dv * xin[t + kk]).sum();
                    grad[l.conv1_w + widx + kk] += acc;
                }
            }
        }
    }
    Ok(grad)
}
