//! The experimental design matrix: chunk length × downsampling method ×
//! dynamic flag × resolution × feature pipeline, each cell scored by k-fold
//! cross-validation.
//!
//! Folds split at the chunk level. Chunks cut from one recording can land on
//! both sides of a split.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cnn::{evaluate, train, Dataset, ModelSpec, TrainConfig};
use crate::config::{CorpusKind, ExperimentConfig};
use crate::downsample::{downsample, Method};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureKind};
use crate::ingestion::{load_bonn_dir, segment, LabeledChunk};
use crate::synthetic::sine_vs_noise;

pub const RESULTS_HEADER: &str = "feature,chunk_len,method,dynamic,resolution,mean_acc,std_acc,fold_accs,wall_time_s,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExperimentCell {
    pub feature: FeatureKind,
    pub chunk_len: usize,
    pub method: Method,
    pub dynamic: bool,
    pub resolution: usize,
}

impl fmt::Display for ExperimentCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/{}",
            self.feature, self.chunk_len, self.method, self.dynamic, self.resolution
        )
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed of a cell: a hash of the global seed and the cell descriptor, so a
/// cell's randomness does not depend on which other cells run.
pub fn cell_seed(global: u64, cell: &ExperimentCell) -> u64 {
    fnv1a(global.to_le_bytes().into_iter().chain(cell.to_string().into_bytes()))
}

fn sub_seed(seed: u64, stream: &str, index: u64) -> u64 {
    fnv1a(
        seed.to_le_bytes()
            .into_iter()
            .chain(stream.bytes())
            .chain(index.to_le_bytes()),
    )
}

/// All cells of the configured grid in canonical order.
pub fn enumerate_cells(cfg: &ExperimentConfig) -> Vec<ExperimentCell> {
    let mut cells = Vec::new();
    for &chunk_len in &cfg.chunk_lens {
        for &feature in &cfg.feature_kinds {
            for &method in &cfg.methods {
                for &dynamic in &cfg.dynamic {
                    for resolution in cfg.resolutions(chunk_len) {
                        cells.push(ExperimentCell {
                            feature,
                            chunk_len,
                            method,
                            dynamic,
                            resolution,
                        });
                    }
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `k` disjoint test folds covering `0..n`, stratified by label when every
/// class has at least `k` members (per-fold class counts then differ by at
/// most one). Index lists are ascending.
pub fn kfold_split(n: usize, k: usize, seed: u64, labels: &[u8]) -> Result<Vec<Fold>> {
    if k < 2 || n < k {
        return Err(Error::TooFewSamples { n, k });
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        classes.entry(y).or_default().push(i);
    }
    let mut assignment = vec![0usize; n];
    if classes.values().all(|members| members.len() >= k) {
        let mut offset = 0;
        for members in classes.values_mut() {
            members.shuffle(&mut rng);
            for (j, &i) in members.iter().enumerate() {
                assignment[i] = (offset + j) % k;
            }
            offset += members.len();
        }
    } else {
        log::warn!("a class has fewer than {k} members; falling back to unstratified folds");
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for (j, &i) in order.iter().enumerate() {
            assignment[i] = j % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed(cause) => write!(f, "failed: {cause}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: ExperimentCell,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation of `fold_accuracies`.
    pub std_accuracy: f64,
    pub wall_time_s: f64,
    pub status: CellStatus,
}

/// Mean and population standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CellResult {
    fn new(cell: ExperimentCell, fold_accuracies: Vec<f64>, wall_time_s: f64, status: CellStatus) -> Self {
        let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
        Self {
            cell,
            fold_accuracies,
            mean_accuracy,
            std_accuracy,
            wall_time_s,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    /// One results-CSV row (no trailing newline).
    pub fn to_csv_row(&self) -> String {
        let accs: Vec<String> = self.fold_accuracies.iter().map(f64::to_string).collect();
        let status = self.status.to_string().replace([',', '\n', '\r'], " ");
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.cell.feature,
            self.cell.chunk_len,
            self.cell.method,
            self.cell.dynamic,
            self.cell.resolution,
            self.mean_accuracy,
            self.std_accuracy,
            accs.join(";"),
            self.wall_time_s,
            status
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidSeries(format!("results row {line:?}: {what}"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad("expected 10 fields"));
        }
        let cell = ExperimentCell {
            feature: f[0].parse().map_err(|_| bad("feature"))?,
            chunk_len: f[1].parse().map_err(|_| bad("chunk_len"))?,
            method: f[2].parse().map_err(|_| bad("method"))?,
            dynamic: f[3].parse().map_err(|_| bad("dynamic"))?,
            resolution: f[4].parse().map_err(|_| bad("resolution"))?,
        };
        let fold_accuracies = f[7]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| bad("fold_accs")))
            .collect::<Result<Vec<_>>>()?;
        let status = match f[9] {
            "ok" => CellStatus::Ok,
            s => CellStatus::Failed(s.strip_prefix("failed: ").ok_or_else(|| bad("status"))?.to_string()),
        };
        Ok(Self {
            cell,
            fold_accuracies,
            mean_accuracy: f[5].parse().map_err(|_| bad("mean_acc"))?,
            std_accuracy: f[6].parse().map_err(|_| bad("std_acc"))?,
            wall_time_s: f[8].parse().map_err(|_| bad("wall_time_s"))?,
            status,
        })
    }
}

/// CNN architecture fed by a cell's features.
pub fn model_spec(cell: &ExperimentCell, cfg: &ExperimentConfig) -> ModelSpec {
    let steps = cfg.features.epsilon_steps;
    match cell.feature {
        FeatureKind::Raw => ModelSpec::raw(cell.resolution, cfg.kernel1_rounding),
        FeatureKind::Betti => ModelSpec::betti(steps),
        FeatureKind::Spectra => ModelSpec::spectra(steps, cfg.features.taus.bucket_count()),
    }
}

/// Downsample one chunk to the cell's resolution and extract its feature
/// channels. Takes amplitudes only: no label reaches feature extraction.
pub fn chunk_features(values: &[f64], cell: &ExperimentCell, cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    if values.len() != cell.chunk_len {
        return Err(Error::ShapeMismatch(format!(
            "chunk of length {} in a cell for length {}",
            values.len(),
            cell.chunk_len
        )));
    }
    let interior = cell.resolution.checked_sub(2).ok_or_else(|| {
        Error::InvalidTarget(format!("resolution {} leaves no room for both endpoints", cell.resolution))
    })?;
    let p = if cell.dynamic {
        cfg.dynamic_p.unwrap_or(interior / 4)
    } else {
        0
    };
    let points = downsample(values, interior, cell.method, p)?;
    let ys: Vec<f64> = points.iter().map(|pt| pt.y).collect();
    extract(&ys, cell.feature, &cfg.features)
}

/// Feature dataset of a cell, extracted once per chunk in parallel.
pub fn cell_dataset(cell: &ExperimentCell, chunks: &[LabeledChunk], cfg: &ExperimentConfig) -> Result<Dataset> {
    let features: Vec<Vec<Vec<f64>>> = chunks
        .par_iter()
        .map(|c| chunk_features(c.series.values(), cell, cfg))
        .collect::<Result<_>>()?;
    let spec = model_spec(cell, cfg);
    let mut data = Dataset::new(spec.in_channels, spec.input_len);
    for (f, c) in features.iter().zip(chunks) {
        data.push(f, c.label)?;
    }
    Ok(data)
}

fn score_cell(cell: &ExperimentCell, chunks: &[LabeledChunk], cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let seed = cell_seed(cfg.seed, cell);
    let spec = model_spec(cell, cfg);
    spec.lengths()?;
    let data = cell_dataset(cell, chunks, cfg)?;
    let mut labels = data.labels().to_vec();
    if cfg.shuffle_labels {
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, "labels", 0)));
    }
    let folds = kfold_split(data.len(), cfg.folds, sub_seed(seed, "folds", 0), &labels)?;
    let with_labels = |idx: &[usize]| {
        let mut d = data.subset(idx);
        d.relabel(idx.iter().map(|&i| labels[i]).collect());
        d
    };
    let run_fold = |(f, fold): (usize, &Fold)| -> Result<f64> {
        let tc = TrainConfig {
            seed: sub_seed(seed, "train", f as u64),
            ..cfg.train
        };
        let (model, _) = train(spec, &with_labels(&fold.train), &tc)?;
        evaluate(&model, &with_labels(&fold.test))
    };
    if cfg.parallel_folds {
        folds.par_iter().enumerate().map(run_fold).collect()
    } else {
        folds.iter().enumerate().map(run_fold).collect()
    }
}

/// Cross-validate one cell. Failures (complexity cap, eigensolver,
/// divergence, …) are recorded in the result's status.
pub fn run_cell(cell: &ExperimentCell, chunks: &[LabeledChunk], cfg: &ExperimentConfig) -> CellResult {
    let start = Instant::now();
    let outcome = score_cell(cell, chunks, cfg);
    let wall = if cfg.record_wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    match outcome {
        Ok(accs) => {
            let r = CellResult::new(*cell, accs, wall, CellStatus::Ok);
            log::info!("{cell}: mean {:.4} ± {:.4}", r.mean_accuracy, r.std_accuracy);
            r
        }
        Err(e) => {
            log::warn!("{cell}: failed: {e}");
            CellResult::new(*cell, Vec::new(), wall, CellStatus::Failed(e.to_string()))
        }
    }
}

/// Labeled chunks of every requested chunk length.
pub fn build_corpora(cfg: &ExperimentConfig, chunk_lens: &BTreeSet<usize>) -> Result<BTreeMap<usize, Vec<LabeledChunk>>> {
    let mut out = BTreeMap::new();
    match cfg.corpus {
        CorpusKind::Synthetic => {
            for &len in chunk_lens {
                let seed = sub_seed(cfg.seed, "synthetic", len as u64);
                out.insert(len, sine_vs_noise(len, cfg.synthetic_per_class, seed));
            }
        }
        CorpusKind::Bonn => {
            if chunk_lens.is_empty() {
                return Ok(out);
            }
            let dir = cfg.data_dir.as_ref().ok_or_else(|| Error::Config {
                key: "data_dir".into(),
                message: "required when corpus = bonn".into(),
            })?;
            let recordings = load_bonn_dir(dir, &cfg.class_map, &cfg.set_map())?;
            for &len in chunk_lens {
                let mut chunks = Vec::new();
                for r in &recordings {
                    chunks.extend(segment(r, len)?);
                }
                out.insert(len, chunks);
            }
        }
    }
    Ok(out)
}

/// Parse a results CSV, skipping the header and any malformed trailing row
/// left by an interrupted write.
pub fn read_results(path: &Path) -> Result<Vec<CellResult>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        match CellResult::from_csv_row(line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("ignoring unreadable row: {e}"),
        }
    }
    Ok(out)
}

/// Writes finished cells in canonical order regardless of completion order.
struct OrderedWriter {
    out: BufWriter<File>,
    next: usize,
    pending: BTreeMap<usize, CellResult>,
    written: Vec<CellResult>,
    error: Option<std::io::Error>,
}

impl OrderedWriter {
    fn submit(&mut self, index: usize, result: CellResult) {
        self.pending.insert(index, result);
        while let Some(r) = self.pending.remove(&self.next) {
            if self.error.is_none() {
                let res = writeln!(self.out, "{}", r.to_csv_row()).and_then(|_| self.out.flush());
                self.error = res.err();
            }
            self.written.push(r);
            self.next += 1;
        }
    }
}

/// Run every cell of the grid and write the results table to `out`.
///
/// With `resume`, rows already in `out` are kept and their cells skipped;
/// otherwise `out` is overwritten. Rows are appended in canonical grid order
/// as soon as every earlier cell is done, so an interrupted run leaves a
/// valid prefix. Returns the complete table.
pub fn run_matrix(cfg: &ExperimentConfig, out: &Path, resume: bool) -> Result<Vec<CellResult>> {
    let mut existing = if resume && out.exists() {
        read_results(out)?
    } else {
        Vec::new()
    };
    let done: BTreeSet<ExperimentCell> = existing.iter().map(|r| r.cell).collect();
    {
        let mut f = BufWriter::new(File::create(out)?);
        writeln!(f, "{RESULTS_HEADER}")?;
        for r in &existing {
            writeln!(f, "{}", r.to_csv_row())?;
        }
        f.flush()?;
    }

    let pending: Vec<ExperimentCell> = enumerate_cells(cfg)
        .into_iter()
        .filter(|c| !done.contains(c))
        .collect();
    log::info!("{} cells to run, {} already done", pending.len(), done.len());
    if pending.is_empty() {
        return Ok(existing);
    }
    let lens: BTreeSet<usize> = pending.iter().map(|c| c.chunk_len).collect();
    let corpora = build_corpora(cfg, &lens)?;

    let writer = Mutex::new(OrderedWriter {
        out: BufWriter::new(OpenOptions::new().append(true).open(out)?),
        next: 0,
        pending: BTreeMap::new(),
        written: Vec::new(),
        error: None,
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(std::io::Error::other)?;
    pool.install(|| {
        pending.par_iter().enumerate().for_each(|(i, cell)| {
            let result = run_cell(cell, &corpora[&cell.chunk_len], cfg);
            writer.lock().expect("writer lock").submit(i, result);
        })
    });
    let w = writer.into_inner().expect("writer lock");
    if let Some(e) = w.error {
        return Err(e.into());
    }
    existing.extend(w.written);
    Ok(existing)
}

/// Write one `resolution,mean_acc` CSV per (feature, chunk length, method,
/// dynamic flag) into `dir`; failed cells are omitted. Returns the paths.
pub fn write_plot_data(results: &[CellResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(FeatureKind, usize, Method, bool), Vec<(usize, f64)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.is_ok()) {
        let c = r.cell;
        groups
            .entry((c.feature, c.chunk_len, c.method, c.dynamic))
            .or_default()
            .push((c.resolution, r.mean_accuracy));
    }
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for ((feature, chunk, method, dynamic), mut rows) in groups {
        rows.sort_by_key(|&(res, _)| res);
        let kind = if dynamic { "dynamic" } else { "static" };
        let path = dir.join(format!("{feature}_{chunk}_{method}_{kind}.csv"));
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "resolution,mean_acc")?;
        for (res, acc) in rows {
            writeln!(f, "{res},{acc}")?;
        }
        f.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use proptest::prelude::*;

    #[test]
    fn balanced_stratified_folds() {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let folds = kfold_split(200, 10, 3, &labels).unwrap();
        for f in &folds {
            assert_eq!(f.test.len(), 20);
            assert_eq!(f.test.iter().filter(|&&i| labels[i] == 1).count(), 10);
            assert_eq!(f.train.len(), 180);
        }
        assert_eq!(folds, kfold_split(200, 10, 3, &labels).unwrap());
        assert_ne!(folds, kfold_split(200, 10, 4, &labels).unwrap());
    }

    #[test]
    fn fold_errors_and_fallback() {
        assert!(matches!(kfold_split(5, 10, 0, &[0; 5]), Err(Error::TooFewSamples { .. })));
        let mut labels = vec![0u8; 30];
        labels[0] = 1;
        let folds = kfold_split(30, 10, 0, &labels).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 3));
    }

    proptest! {
        #[test]
        fn folds_partition_indices(n in 10usize..120, k in 2usize..11, seed in any::<u64>(), bias in 0.0f64..1.0) {
            let labels: Vec<u8> = (0..n).map(|i| u8::from((i as f64 * 0.618).fract() < bias)).collect();
            let folds = kfold_split(n, k, seed, &labels).unwrap();
            let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for f in &folds {
                prop_assert_eq!(f.train.len() + f.test.len(), n);
                prop_assert!(f.train.iter().all(|i| !f.test.contains(i)));
            }
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let ones = labels.iter().filter(|&&y| y == 1).count();
            if ones >= k && n - ones >= k {
                let per: Vec<usize> = folds.iter().map(|f| f.test.iter().filter(|&&i| labels[i] == 1).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn default_grid_size() {
        let cfg = ExperimentConfig::default();
        let cells = enumerate_cells(&cfg);
        // Resolutions per chunk length: 3, 5, 7, 9, 11.
        assert_eq!(cells.len(), (3 + 5 + 7 + 9 + 11) * 3 * 2 * 3);
        for c in &cells {
            assert!(c.resolution <= c.chunk_len && (c.chunk_len - c.resolution) % 50 == 0);
        }
        assert!(enumerate_cells(&parse_config("features =").unwrap()).is_empty());
    }

    #[test]
    fn cell_seeds_depend_on_descriptor() {
        let cells = enumerate_cells(&ExperimentConfig::default());
        let seeds: BTreeSet<u64> = cells.iter().map(|c| cell_seed(0, c)).collect();
        assert_eq!(seeds.len(), cells.len());
        assert_ne!(cell_seed(0, &cells[0]), cell_seed(1, &cells[0]));
    }

    #[test]
    fn full_resolution_dropout_is_identity() {
        let cfg = parse_config("features = raw").unwrap();
        let values: Vec<f64> = (0..200).map(|i| ((i * 37) % 23) as f64).collect();
        for (method, dynamic) in [(Method::Dropout, false), (Method::Dropout, true), (Method::Lttb, false)] {
            let cell = ExperimentCell {
                feature: FeatureKind::Raw,
                chunk_len: 200,
                method,
                dynamic,
                resolution: 200,
            };
            let got = chunk_features(&values, &cell, &cfg).unwrap();
            assert_eq!(got, extract(&values, FeatureKind::Raw, &cfg.features).unwrap());
        }
    }

    #[test]
    fn csv_row_round_trip() {
        let cell = ExperimentCell {
            feature: FeatureKind::Spectra,
            chunk_len: 300,
            method: Method::Lttb,
            dynamic: true,
            resolution: 250,
        };
        let r = CellResult::new(cell, vec![0.9, 0.85, 1.0, 0.1 + 0.2], 1.25, CellStatus::Ok);
        let back = CellResult::from_csv_row(&r.to_csv_row()).unwrap();
        assert_eq!(back, r);
        assert_eq!(mean_std(&back.fold_accuracies), (back.mean_accuracy, back.std_accuracy));
        let failed = CellResult::new(cell, vec![], 0.0, CellStatus::Failed("cap, exceeded".into()));
        let back = CellResult::from_csv_row(&failed.to_csv_row()).unwrap();
        assert_eq!(back.status, CellStatus::Failed("cap  exceeded".into()));
        assert_eq!(r.to_csv_row().split(',').count(), RESULTS_HEADER.split(',').count());
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        let cfg = parse_config("features = betti\nsimplex_cap = 10\nfolds = 2").unwrap();
        let chunks = sine_vs_noise(60, 4, 0);
        let cell = ExperimentCell {
            feature: FeatureKind::Betti,
            chunk_len: 60,
            method: Method::Dropout,
            dynamic: false,
            resolution: 60,
        };
        let r = run_cell(&cell, &chunks, &cfg);
        match &r.status {
            CellStatus::Failed(cause) => assert!(cause.contains("simplex cap"), "{cause}"),
            CellStatus::Ok => panic!("expected a complexity-cap failure"),
        }
        assert!(r.fold_accuracies.is_empty());
    }
}
