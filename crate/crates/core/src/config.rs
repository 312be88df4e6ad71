//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Lists are
//! comma-separated; an empty list is written as an empty value. Unknown and
//! duplicated keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cnn::{KernelRounding, TrainConfig};
use crate::downsample::Method;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureParams};
use crate::ingestion::{ClassMap, SetMap, SetTag};
use crate::spectra::TauPartition;

/// Every accepted key with its default and a one-line description.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("corpus", "bonn", "bonn (text files under data_dir) or synthetic (sine vs. white noise)"),
    ("data_dir", "", "directory of Bonn-style recordings, one integer per line"),
    ("class_map", "A:0,B:1", "set tag → binary label; other sets are skipped"),
    ("set_map", "", "filename prefix → set tag overrides, e.g. `Z:A,O:B`"),
    ("synthetic_per_class", "100", "chunks per class in the synthetic corpus"),
    ("takens_m", "3", "Takens window length"),
    ("epsilon_steps", "300", "ε-grid resolution (CNN input length of betti/spectra)"),
    ("epsilon_r_policy", "max_distance", "max_distance or enclosing_radius"),
    ("tau_count", "7", "number of equal eigenvalue buckets over [0, 2]"),
    ("tau_list", "", "explicit bucket edges 0,…,2 (overrides tau_count)"),
    ("simplex_cap", "50000000", "Rips complex size limit"),
    ("normalize_counts", "true", "divide β/μ counts by the embedded point count"),
    ("lr", "0.001", "Adam learning rate"),
    ("beta1", "0.9", "Adam β₁"),
    ("beta2", "0.999", "Adam β₂"),
    ("adam_eps", "1e-8", "Adam ε"),
    ("batch_size", "16", "mini-batch size"),
    ("epochs", "10", "training epochs per fold"),
    ("kernel1_rounding", "half_even", "raw first-kernel rounding: half_even, half_up or floor"),
    ("folds", "10", "cross-validation folds"),
    ("chunk_lens", "200,300,400,500,600", "chunk lengths of the grid"),
    ("resolution_step", "50", "resolution decrement from chunk_len"),
    ("min_resolution", "100", "smallest resolution in the grid"),
    ("methods", "dropout,mean,lttb", "downsampling methods of the grid"),
    ("dynamic", "false,true", "dynamic rebucketing flags of the grid"),
    ("features", "raw,betti,spectra", "feature pipelines of the grid"),
    ("dynamic_p", "auto", "rebucketing iterations; auto = floor(interior / 4)"),
    ("shuffle_labels", "false", "permute labels before splitting (null-distribution control)"),
    ("workers", "0", "cell worker threads; 0 = one per core"),
    ("parallel_folds", "false", "train the folds of a cell concurrently"),
    ("record_wall_time", "true", "write measured wall time; false writes 0 for reproducible tables"),
    ("seed", "0", "global seed; every random choice derives from it"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Bonn,
    Synthetic,
}

impl FromStr for CorpusKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "bonn" => Ok(CorpusKind::Bonn),
            "synthetic" => Ok(CorpusKind::Synthetic),
            other => Err(format!("unknown corpus `{other}` (bonn|synthetic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: CorpusKind,
    pub data_dir: Option<PathBuf>,
    pub class_map: ClassMap,
    pub set_map: Vec<(String, SetTag)>,
    pub synthetic_per_class: usize,
    pub features: FeatureParams,
    pub train: TrainConfig,
    pub kernel1_rounding: KernelRounding,
    pub folds: usize,
    pub chunk_lens: Vec<usize>,
    pub resolution_step: usize,
    pub min_resolution: usize,
    pub methods: Vec<Method>,
    pub dynamic: Vec<bool>,
    pub feature_kinds: Vec<FeatureKind>,
    /// `None` means floor(interior / 4).
    pub dynamic_p: Option<usize>,
    pub shuffle_labels: bool,
    pub workers: usize,
    pub parallel_folds: bool,
    pub record_wall_time: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults parse")
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| bad(key, format!("`{v}`: {e}")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn pairs(key: &str, v: &str) -> Result<Vec<(String, String)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.split_once(':')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| bad(key, format!("`{s}` is not a `from:to` pair")))
        })
        .collect()
}

/// Parse a configuration file's text; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut values: Vec<(String, String)> = CONFIG_KEYS
        .iter()
        .map(|(k, d, _)| (k.to_string(), d.to_string()))
        .collect();
    let mut seen = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line, "expected `key = value`"))?;
        let key = key.trim();
        let slot = values
            .iter_mut()
            .find(|(k, _)| k == key)
            .ok_or_else(|| Error::UnknownConfigKey(key.to_string()))?;
        if !seen.insert(key.to_string()) {
            return Err(bad(key, "given more than once"));
        }
        slot.1 = value.trim().to_string();
    }
    let get = |key: &str| -> &str {
        values
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .expect("every key has a default")
    };

    let mut class_map = ClassMap::new();
    for (tag, label) in pairs("class_map", get("class_map"))? {
        let tag: SetTag = scalar("class_map", &tag)?;
        let label: u8 = scalar("class_map", &label)?;
        if label > 1 {
            return Err(bad("class_map", format!("label {label} is not binary")));
        }
        class_map.insert(tag, label);
    }
    let set_map = pairs("set_map", get("set_map"))?
        .into_iter()
        .map(|(prefix, tag)| Ok((prefix, scalar::<SetTag>("set_map", &tag)?)))
        .collect::<Result<Vec<_>>>()?;

    let taus = match get("tau_list") {
        "" => TauPartition::even(scalar("tau_count", get("tau_count"))?)?,
        list_text => TauPartition::from_list(list("tau_list", list_text)?)?,
    };
    let takens_m: usize = scalar("takens_m", get("takens_m"))?;
    if takens_m == 0 {
        return Err(bad("takens_m", "must be positive"));
    }
    let epsilon_steps: usize = scalar("epsilon_steps", get("epsilon_steps"))?;
    if epsilon_steps < 2 {
        return Err(bad("epsilon_steps", "must be at least 2"));
    }
    let features = FeatureParams {
        takens_m,
        epsilon_steps,
        r_policy: scalar("epsilon_r_policy", get("epsilon_r_policy"))?,
        taus,
        simplex_cap: scalar("simplex_cap", get("simplex_cap"))?,
        normalize_counts: scalar("normalize_counts", get("normalize_counts"))?,
    };
    let seed: u64 = scalar("seed", get("seed"))?;
    let train = TrainConfig {
        epochs: scalar("epochs", get("epochs"))?,
        batch_size: scalar("batch_size", get("batch_size"))?,
        lr: scalar("lr", get("lr"))?,
        beta1: scalar("beta1", get("beta1"))?,
        beta2: scalar("beta2", get("beta2"))?,
        eps: scalar("adam_eps", get("adam_eps"))?,
        seed,
    };
    if train.batch_size == 0 {
        return Err(bad("batch_size", "must be positive"));
    }
    let folds: usize = scalar("folds", get("folds"))?;
    if folds < 2 {
        return Err(bad("folds", "need at least 2 folds"));
    }
    let resolution_step: usize = scalar("resolution_step", get("resolution_step"))?;
    if resolution_step == 0 {
        return Err(bad("resolution_step", "must be positive"));
    }
    let min_resolution: usize = scalar("min_resolution", get("min_resolution"))?;
    if min_resolution < 3 {
        return Err(bad("min_resolution", "must be at least 3 (two endpoints and one interior point)"));
    }
    let dynamic_p = match get("dynamic_p") {
        "auto" => None,
        v => Some(scalar("dynamic_p", v)?),
    };
    let data_dir = match get("data_dir") {
        "" => None,
        v => Some(PathBuf::from(v)),
    };

    Ok(ExperimentConfig {
        corpus: scalar("corpus", get("corpus"))?,
        data_dir,
        class_map,
        set_map,
        synthetic_per_class: scalar("synthetic_per_class", get("synthetic_per_class"))?,
        features,
        train,
        kernel1_rounding: scalar("kernel1_rounding", get("kernel1_rounding"))?,
        folds,
        chunk_lens: list("chunk_lens", get("chunk_lens"))?,
        resolution_step,
        min_resolution,
        methods: list("methods", get("methods"))?,
        dynamic: list("dynamic", get("dynamic"))?,
        feature_kinds: list("features", get("features"))?,
        dynamic_p,
        shuffle_labels: scalar("shuffle_labels", get("shuffle_labels"))?,
        workers: scalar("workers", get("workers"))?,
        parallel_folds: scalar("parallel_folds", get("parallel_folds"))?,
        record_wall_time: scalar("record_wall_time", get("record_wall_time"))?,
        seed,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn set_map(&self) -> SetMap {
        SetMap::new(self.set_map.clone())
    }

    /// `chunk_len, chunk_len − step, …` down to `min_resolution`.
    pub fn resolutions(&self, chunk_len: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut r = chunk_len;
        while r >= self.min_resolution {
            out.push(r);
            match r.checked_sub(self.resolution_step) {
                Some(next) => r = next,
                None => break,
            }
        }
        out
    }

    /// Help text listing every key with its default.
    pub fn describe_keys() -> String {
        CONFIG_KEYS
            .iter()
            .map(|(k, d, doc)| format!("  {k} = {d}\n      {doc}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::DEFAULT_SIMPLEX_CAP;
    use crate::neighbor_graph::RadiusPolicy;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.chunk_lens, vec![200, 300, 400, 500, 600]);
        assert_eq!(c.features.takens_m, 3);
        assert_eq!(c.features.epsilon_steps, 300);
        assert_eq!(c.features.taus.bucket_count(), 7);
        assert_eq!(c.features.simplex_cap, DEFAULT_SIMPLEX_CAP);
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.folds, 10);
        assert_eq!(c.dynamic, vec![false, true]);
        assert_eq!(c.methods, Method::ALL.to_vec());
        assert_eq!(c.feature_kinds, FeatureKind::ALL.to_vec());
        assert_eq!(c.class_map.get(&SetTag::A), Some(&0));
        assert_eq!(c.dynamic_p, None);
        assert_eq!(c.resolutions(600), vec![600, 550, 500, 450, 400, 350, 300, 250, 200, 150, 100]);
        assert_eq!(c.resolutions(200), vec![200, 150, 100]);
        assert_eq!(c.resolutions(90), Vec::<usize>::new());
    }

    #[test]
    fn overrides_and_comments() {
        let c = parse_config(
            "# tiny grid\ncorpus = synthetic\nchunk_lens = 300\nfeatures = raw\n\nmethods = lttb, mean\n\
             dynamic = false\ntau_list = 0, 0.5, 2\nseed = 42\ndynamic_p = 3\nepsilon_r_policy = enclosing_radius\n",
        )
        .unwrap();
        assert_eq!(c.corpus, CorpusKind::Synthetic);
        assert_eq!(c.methods, vec![Method::Lttb, Method::Mean]);
        assert_eq!(c.features.taus.bucket_count(), 2);
        assert_eq!(c.seed, 42);
        assert_eq!(c.train.seed, 42);
        assert_eq!(c.dynamic_p, Some(3));
        assert_eq!(c.features.r_policy, RadiusPolicy::EnclosingRadius);
    }

    #[test]
    fn empty_lists_are_allowed() {
        let c = parse_config("features =\n").unwrap();
        assert!(c.feature_kinds.is_empty());
    }

    #[test]
    fn strict_parsing() {
        match parse_config("lr_scheduel = cosine") {
            Err(Error::UnknownConfigKey(k)) => assert_eq!(k, "lr_scheduel"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("seed = 1\nseed = 2"), Err(Error::Config { .. })));
        assert!(matches!(parse_config("epochs = ten"), Err(Error::Config { .. })));
        assert!(matches!(parse_config("no equals sign"), Err(Error::Config { .. })));
        assert!(matches!(parse_config("class_map = A:3"), Err(Error::Config { .. })));
        assert!(matches!(parse_config("methods = lttb,spline"), Err(Error::Config { .. })));
        assert!(matches!(parse_config("tau_list = 0,1,3"), Err(Error::InvalidTaus(_))));
        assert!(parse_config("folds = 1").unwrap_err().is_usage());
    }

    #[test]
    fn every_key_is_documented() {
        let help = ExperimentConfig::describe_keys();
        for (k, _, _) in CONFIG_KEYS {
            assert!(help.contains(k));
        }
    }
}
