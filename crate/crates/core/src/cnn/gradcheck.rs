//! Central finite differences against the analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backward, bce_loss, build, forward, predict, ModelSpec, TrainedModel};
use crate::error::Result;

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-5;
/// Gradient magnitudes below this are compared absolutely.
const FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Name of the parameter group holding the worst entry.
    pub worst_group: &'static str,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= GRADCHECK_TOLERANCE
    }
}

/// The smallest network that survives both poolings with two input channels,
/// factor 2 and kernels 3 and 2.
pub fn tiny_spec() -> ModelSpec {
    ModelSpec::new(30, 2, 2, 3, 2)
}

fn loss_at(model: &TrainedModel, inputs: &[&[f64]], labels: &[f64]) -> Result<f64> {
    Ok(bce_loss(&predict(model, inputs)?, labels))
}

/// Compare every analytic partial of the tiny network on a random batch of
/// four against central differences. `corrupt` scales the analytic gradient
/// of the first conv weight, which the check must catch.
pub fn gradient_check(seed: u64, corrupt: bool) -> Result<GradCheckReport> {
    let mut model = build(tiny_spec(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let width = model.sample_len();
    let samples: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..width).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = [1.0, 0.0, 1.0, 0.0];
    let inputs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();

    let (_, cache) = forward(&model, &inputs)?;
    let mut analytic = backward(&model, &cache, &labels)?;
    if corrupt {
        analytic[model.layout.conv1_w] = 1.5 * analytic[model.layout.conv1_w] + 1e-3;
    }

    let groups = model.layout.groups();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_group: groups[0].0,
        worst_index: 0,
        checked: analytic.len(),
    };
    for (i, &a) in analytic.iter().enumerate() {
        let orig = model.params[i];
        model.params[i] = orig + STEP;
        let up = loss_at(&model, &inputs, &labels)?;
        model.params[i] = orig - STEP;
        let down = loss_at(&model, &inputs, &labels)?;
        model.params[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.worst_group = groups
                .iter()
                .find(|(_, r)| r.contains(&i))
                .map(|(n, _)| *n)
                .unwrap_or("?");
        }
    }
    Ok(report)
}
