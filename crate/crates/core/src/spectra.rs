//! Normalized Laplacians of ε-graphs and the bucketed eigenvalue counts
//! μ_j(ε).
//!
//! The Laplacian used is `I − D^{-1/2} A D^{-1/2}`, whose spectrum lies in
//! `[0, 2]` and whose zero multiplicity equals the number of connected
//! components. Isolated vertices get a zero diagonal entry, so each one is a
//! component contributing a single zero eigenvalue.

use crate::eigen::{sym_eigenvalues, SpectrumVector, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::features::{EpsilonSeries, FeatureKind};
use crate::neighbor_graph::{epsilon_graph, DistanceMatrix, EpsilonGrid, Graph};

/// Eigenvalues within this distance of 0 are counted as exactly zero.
pub const ZERO_THRESHOLD: f64 = 1e-7;

/// Bucket edges `0 = τ₀ < τ₁ < … < τ_k = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauPartition {
    taus: Vec<f64>,
}

impl TauPartition {
    /// `k` equal-width buckets over `[0, 2]`.
    pub fn even(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidTaus("need at least one bucket".into()));
        }
        let mut taus: Vec<f64> = (0..=k).map(|j| 2.0 * j as f64 / k as f64).collect();
        taus[k] = 2.0;
        Ok(Self { taus })
    }

    pub fn from_list(taus: Vec<f64>) -> Result<Self> {
        if taus.len() < 2 {
            return Err(Error::InvalidTaus("need at least two edges".into()));
        }
        if taus[0] != 0.0 || taus[taus.len() - 1] != 2.0 {
            return Err(Error::InvalidTaus(format!("edges must start at 0 and end at 2, got {taus:?}")));
        }
        if taus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTaus(format!("edges must be strictly increasing, got {taus:?}")));
        }
        Ok(Self { taus })
    }

    pub fn edges(&self) -> &[f64] {
        &self.taus
    }

    /// Number of buckets (channels).
    pub fn bucket_count(&self) -> usize {
        self.taus.len() - 1
    }

    /// Bucket counts of a spectrum; the final bucket is closed at 2.
    pub fn counts(&self, spectrum: &[f64]) -> Vec<usize> {
        let k = self.bucket_count();
        (0..k)
            .map(|j| count_in(spectrum, self.taus[j], self.taus[j + 1], j + 1 == k))
            .collect()
    }
}

pub fn normalized_laplacian(g: &Graph) -> SymmetricMatrix {
    let n = g.order();
    let mut m = SymmetricMatrix::zeros(n);
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| match g.degree(v) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    for v in 0..n {
        if g.degree(v) > 0 {
            m.set(v, v, 1.0);
        }
    }
    for (u, v) in g.edges() {
        m.set(u, v, -inv_sqrt[u] * inv_sqrt[v]);
    }
    m
}

/// Number of values in `[lo, hi)`, or `[lo, hi]` when `closed_hi`.
pub fn count_in(values: &[f64], lo: f64, hi: f64, closed_hi: bool) -> usize {
    values
        .iter()
        .filter(|&&v| v >= lo && (v < hi || (closed_hi && v == hi)))
        .count()
}

/// Snap numerical noise: values within [`ZERO_THRESHOLD`] of 0 become 0 and
/// everything is clamped into `[0, 2]`.
pub fn snap_spectrum(spectrum: &SpectrumVector) -> Vec<f64> {
    spectrum
        .eigenvalues
        .iter()
        .map(|&v| if v.abs() <= ZERO_THRESHOLD { 0.0 } else { v.clamp(0.0, 2.0) })
        .collect()
}

/// Spectrum of the normalized Laplacian, assembled from the spectra of the
/// connected components (the matrix is block diagonal over them).
pub fn laplacian_spectrum(g: &Graph) -> Result<SpectrumVector> {
    let mut values = Vec::with_capacity(g.order());
    let mut local = vec![usize::MAX; g.order()];
    for comp in g.components() {
        if comp.len() == 1 {
            values.push(0.0);
            continue;
        }
        for (i, &v) in comp.iter().enumerate() {
            local[v] = i;
        }
        let mut m = SymmetricMatrix::zeros(comp.len());
        for (i, &v) in comp.iter().enumerate() {
            m.set(i, i, 1.0);
            let dv = g.degree(v) as f64;
            for &w in g.neighbors(v) {
                if w > v {
                    m.set(i, local[w], -1.0 / (dv * g.degree(w) as f64).sqrt());
                }
            }
        }
        values.extend(sym_eigenvalues(&m)?.eigenvalues);
    }
    Ok(SpectrumVector::new(values))
}

/// μ_j(ε) for every grid value: the number of normalized-Laplacian
/// eigenvalues of the ε-graph in `[τ_j, τ_{j+1})` (last bucket closed).
pub fn mu_series(dm: &DistanceMatrix, grid: &EpsilonGrid, taus: &TauPartition) -> Result<EpsilonSeries> {
    let k = taus.bucket_count();
    let mut channels = vec![Vec::with_capacity(grid.len()); k];
    // Edge sets are nested along ε, so an unchanged edge count means an
    // unchanged graph.
    let mut previous: Option<(usize, Vec<usize>)> = None;
    for &eps in grid.values() {
        let g = epsilon_graph(dm, eps);
        let counts = match &previous {
            Some((edges, counts)) if *edges == g.edge_count() => counts.clone(),
            _ => {
                let spectrum = laplacian_spectrum(&g).map_err(|_| Error::EigensolverAt {
                    epsilon: eps,
                    order: g.order(),
                })?;
                taus.counts(&snap_spectrum(&spectrum))
            }
        };
        for (channel, &c) in channels.iter_mut().zip(&counts) {
            channel.push(c as f64);
        }
        previous = Some((g.edge_count(), counts));
    }
    Ok(EpsilonSeries {
        channels,
        grid: grid.clone(),
        kind: FeatureKind::Spectra,
    })
}
