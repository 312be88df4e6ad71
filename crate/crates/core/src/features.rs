//! ε-series containers and the per-chunk feature extractors feeding the CNN.

use std::fmt;
use std::str::FromStr;

use crate::embedding::takens_embed;
use crate::error::Result;
use crate::homology::{betti_series, reduce, rips_filtration, DEFAULT_SIMPLEX_CAP};
use crate::ingestion::zscore;
use crate::neighbor_graph::{epsilon_grid, pairwise_distances, EpsilonGrid, RadiusPolicy};
use crate::spectra::{mu_series, TauPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Raw,
    Betti,
    Spectra,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Raw, FeatureKind::Betti, FeatureKind::Spectra];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::Raw => "raw",
            FeatureKind::Betti => "betti",
            FeatureKind::Spectra => "spectra",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "raw" => Ok(FeatureKind::Raw),
            "betti" => Ok(FeatureKind::Betti),
            "spectra" => Ok(FeatureKind::Spectra),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

/// Channelized functions of ε sampled on a grid (β_k(ε) or μ_j(ε)).
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSeries {
    pub channels: Vec<Vec<f64>>,
    pub grid: EpsilonGrid,
    pub kind: FeatureKind,
}

impl EpsilonSeries {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Value of every channel at grid row `i`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c[i]).collect()
    }
}

/// Knobs of the geometric pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams {
    pub takens_m: usize,
    pub epsilon_steps: usize,
    pub r_policy: RadiusPolicy,
    pub taus: TauPartition,
    pub simplex_cap: usize,
    /// Divide Betti/μ counts by the number of embedded points.
    pub normalize_counts: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            takens_m: 3,
            epsilon_steps: 300,
            r_policy: RadiusPolicy::MaxDistance,
            taus: TauPartition::even(7).expect("7 buckets"),
            simplex_cap: DEFAULT_SIMPLEX_CAP,
            normalize_counts: true,
        }
    }
}

/// β₀, β₁, β₂ of the Takens embedding of `values`.
pub fn betti_features(values: &[f64], params: &FeatureParams) -> Result<EpsilonSeries> {
    let cloud = takens_embed(values, params.takens_m)?;
    let dm = pairwise_distances(&cloud);
    let grid = epsilon_grid(&dm, params.epsilon_steps, params.r_policy)?;
    let filtration = rips_filtration(&dm, 3, grid.r_max(), params.simplex_cap)?;
    let barcode = reduce(&filtration);
    Ok(betti_series(&barcode, &grid, &[0, 1, 2]))
}

/// μ_j(ε) of the Takens embedding of `values`.
pub fn spectra_features(values: &[f64], params: &FeatureParams) -> Result<EpsilonSeries> {
    let cloud = takens_embed(values, params.takens_m)?;
    let dm = pairwise_distances(&cloud);
    let grid = epsilon_grid(&dm, params.epsilon_steps, params.r_policy)?;
    mu_series(&dm, &grid, &params.taus)
}

/// CNN input channels for one (already downsampled) amplitude sequence.
///
/// Only the chunk itself is consulted, so extraction never sees labels or
/// other chunks.
pub fn extract(values: &[f64], kind: FeatureKind, params: &FeatureParams) -> Result<Vec<Vec<f64>>> {
    let series = match kind {
        FeatureKind::Raw => return Ok(vec![zscore(values)]),
        FeatureKind::Betti => betti_features(values, params)?,
        FeatureKind::Spectra => spectra_features(values, params)?,
    };
    let mut channels = series.channels;
    if params.normalize_counts {
        let n = (values.len() + 1 - params.takens_m) as f64;
        for v in channels.iter_mut().flatten() {
            *v /= n;
        }
    }
    Ok(channels)
}
