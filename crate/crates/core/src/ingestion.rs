//! Loading Bonn-format EEG recordings and cutting them into fixed-length chunks.
//!
//! A Bonn set directory holds one text file per segment, one integer sample
//! per line. The set tag (A..E) is inferred from the first character of the
//! file name (`Z`, `O`, `N`, `F`, `S`), or from an explicit prefix override.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A finite real-valued sequence of at least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    source_id: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "length {} is below the minimum of 2",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            values,
            source_id: source_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The five Bonn recording sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetTag {
    A,
    B,
    C,
    D,
    E,
}

impl SetTag {
    pub const ALL: [SetTag; 5] = [SetTag::A, SetTag::B, SetTag::C, SetTag::D, SetTag::E];

    /// Bonn file-name convention: Z→A, O→B, N→C, F→D, S→E.
    pub fn from_bonn_prefix(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'Z' => Some(SetTag::A),
            'O' => Some(SetTag::B),
            'N' => Some(SetTag::C),
            'F' => Some(SetTag::D),
            'S' => Some(SetTag::E),
            _ => None,
        }
    }
}

impl fmt::Display for SetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetTag::A => "A",
            SetTag::B => "B",
            SetTag::C => "C",
            SetTag::D => "D",
            SetTag::E => "E",
        };
        f.write_str(s)
    }
}

impl FromStr for SetTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(SetTag::A),
            "B" => Ok(SetTag::B),
            "C" => Ok(SetTag::C),
            "D" => Ok(SetTag::D),
            "E" => Ok(SetTag::E),
            other => Err(format!("unknown set tag `{other}` (expected A..E)")),
        }
    }
}

/// Which sets participate and with which binary label.
pub type ClassMap = BTreeMap<SetTag, u8>;

/// File-name prefix overrides for set-tag inference. The longest matching
/// prefix wins; files matching no override fall back to the Bonn convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SetMap {
    overrides: Vec<(String, SetTag)>,
}

impl SetMap {
    pub fn new(overrides: Vec<(String, SetTag)>) -> Self {
        Self { overrides }
    }

    pub fn tag_for(&self, file_name: &str) -> Option<SetTag> {
        self.overrides
            .iter()
            .filter(|(prefix, _)| file_name.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, tag)| *tag)
            .or_else(|| file_name.chars().next().and_then(SetTag::from_bonn_prefix))
    }
}

/// A whole recording with its set membership and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: TimeSeries,
    pub set_tag: SetTag,
    pub label: u8,
}

/// A fixed-length piece of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledChunk {
    pub series: TimeSeries,
    pub label: u8,
    pub set_tag: SetTag,
    pub chunk_index: usize,
}

/// Parse one recording: one number per line, LF or CRLF, blank lines ignored.
pub fn parse_series_text(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    content: line.to_string(),
                })
            }
        }
    }
    Ok(values)
}

fn collect_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = |d: &Path| {
        fs::read_dir(d).map_err(|source| Error::Ingest {
            path: d.to_path_buf(),
            source,
        })
    };
    let mut files = Vec::new();
    for entry in read(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            // Bonn archives unpack into one sub-directory per set.
            for inner in read(&path)? {
                let inner = inner?.path();
                if inner.is_file() {
                    files.push(inner);
                }
            }
        } else if path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| {
        let key = |p: &PathBuf| p.file_name().map(|n| n.to_os_string());
        key(a).cmp(&key(b)).then_with(|| a.cmp(b))
    });
    Ok(files)
}

/// Load every recording under `dir` whose set tag appears in `class_map`.
///
/// Files are processed in lexicographic file-name order. Hidden files are
/// ignored.
pub fn load_bonn_dir(dir: &Path, class_map: &ClassMap, set_map: &SetMap) -> Result<Vec<LabeledSeries>> {
    let files = collect_files(dir)?;
    if files.is_empty() {
        log::warn!("no recordings found in {}", dir.display());
    }
    let mut out = Vec::new();
    for path in files {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name.starts_with('.') {
            continue;
        }
        let Some(tag) = set_map.tag_for(name) else {
            log::debug!("skipping {name}: no set tag");
            continue;
        };
        let Some(&label) = class_map.get(&tag) else {
            continue;
        };
        let text = fs::read_to_string(&path).map_err(|source| Error::Ingest {
            path: path.clone(),
            source,
        })?;
        let values = parse_series_text(&text, &path)?;
        let series = TimeSeries::new(values, name).map_err(|e| match e {
            Error::InvalidSeries(msg) => Error::InvalidSeries(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        out.push(LabeledSeries {
            series,
            set_tag: tag,
            label,
        });
    }
    Ok(out)
}

/// Non-overlapping consecutive chunks of exactly `chunk_len` samples; the
/// trailing remainder is dropped.
pub fn segment(recording: &LabeledSeries, chunk_len: usize) -> Result<Vec<LabeledChunk>> {
    if chunk_len < 2 {
        return Err(Error::InvalidSeries(format!("chunk length {chunk_len} is below 2")));
    }
    let src = recording.series.source_id();
    recording
        .series
        .values()
        .chunks_exact(chunk_len)
        .enumerate()
        .map(|(i, window)| {
            Ok(LabeledChunk {
                series: TimeSeries::new(window.to_vec(), format!("{src}#{i}"))?,
                label: recording.label,
                set_tag: recording.set_tag,
                chunk_index: i,
            })
        })
        .collect()
}

/// Standardize to mean 0 and population standard deviation 1. Constant input
/// maps to all zeros.
pub fn zscore(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recording(values: Vec<f64>) -> LabeledSeries {
        LabeledSeries {
            series: TimeSeries::new(values, "t").unwrap(),
            set_tag: SetTag::A,
            label: 0,
        }
    }

    #[test]
    fn parses_signed_integers_with_crlf() {
        let v = parse_series_text("12\r\n-5\r\n40\r\n", Path::new("x")).unwrap();
        assert_eq!(v, vec![12.0, -5.0, 40.0]);
    }

    #[test]
    fn non_numeric_line_reports_line_number() {
        let err = parse_series_text("1\n2\nabc\n", Path::new("f.txt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_short_or_nonfinite_series() {
        assert!(TimeSeries::new(vec![1.0], "s").is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN], "s").is_err());
    }

    #[test]
    fn segment_counts() {
        let rec = recording((0..4097).map(f64::from).collect());
        assert_eq!(segment(&rec, 600).unwrap().len(), 6);
        assert_eq!(segment(&rec, 200).unwrap().len(), 20);
        let short = recording((0..10).map(f64::from).collect());
        let one = segment(&short, 10).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].series.values(), short.series.values());
        assert!(segment(&short, 11).unwrap().is_empty());
        assert!(segment(&short, 1).is_err());
    }

    #[test]
    fn zscore_examples() {
        assert_eq!(zscore(&[1.0, 1.0, 1.0, 1.0]), vec![0.0; 4]);
        assert_eq!(zscore(&[0.0, 2.0]), vec![-1.0, 1.0]);
        let z = zscore(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let s = std::f64::consts::SQRT_2;
        for (a, b) in z.iter().zip([-s, -s / 2.0, 0.0, s / 2.0, s]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn set_map_prefers_longest_override() {
        let map = SetMap::new(vec![("Z".into(), SetTag::C), ("Zx".into(), SetTag::E)]);
        assert_eq!(map.tag_for("Zx001.txt"), Some(SetTag::E));
        assert_eq!(map.tag_for("Z001.txt"), Some(SetTag::C));
        assert_eq!(map.tag_for("O001.txt"), Some(SetTag::B));
        assert_eq!(map.tag_for("readme"), None);
    }

    proptest! {
        #[test]
        fn segment_concat_roundtrip(values in prop::collection::vec(-1e3f64..1e3, 2..300), len in 2usize..40) {
            let rec = recording(values.clone());
            let chunks = segment(&rec, len).unwrap();
            let joined: Vec<f64> = chunks.iter().flat_map(|c| c.series.values().to_vec()).collect();
            prop_assert_eq!(&joined[..], &values[..(values.len() / len) * len]);
            for (i, c) in chunks.iter().enumerate() {
                prop_assert_eq!(c.chunk_index, i);
            }
        }

        #[test]
        fn zscore_idempotent(values in prop::collection::vec(-1e3f64..1e3, 2..100)) {
            let once = zscore(&values);
            let twice = zscore(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
