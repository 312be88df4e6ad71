//! `tsgeom` command-line interface.
//!
//! Exit codes: 0 success, 1 processing failure, 2 usage or configuration error.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tsgeom::cnn::{evaluate, save_checkpoint, train, GRADCHECK_TOLERANCE};
use tsgeom::config::{load_config, ExperimentConfig};
use tsgeom::downsample::{downsample, Method};
use tsgeom::embedding::{takens_embed, PointCloud};
use tsgeom::features::{FeatureKind, FeatureParams};
use tsgeom::harness::{build_corpora, cell_dataset, model_spec, run_matrix, write_plot_data, ExperimentCell};
use tsgeom::homology::{betti_series, reduce, rips_filtration, DEFAULT_SIMPLEX_CAP};
use tsgeom::ingestion::{load_bonn_dir, segment, zscore};
use tsgeom::neighbor_graph::{epsilon_grid, pairwise_distances, RadiusPolicy};
use tsgeom::spectra::{mu_series, TauPartition};

#[derive(Parser)]
#[command(name = "tsgeom", version, about = "Geometric time-series features, downsampling and CNN experiments")]
struct Cli {
    /// Log progress (repeat for more detail); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a directory of recordings and list the labeled series or chunks.
    Ingest(IngestArgs),
    /// Downsample a series with dropout, bucket means or LTTB.
    Downsample(DownsampleArgs),
    /// Emit the raw, Betti or Laplacian-spectrum feature series of one chunk.
    Features(FeaturesArgs),
    /// Train one CNN on a whole corpus and write a checkpoint.
    Train(TrainArgs),
    /// Run the cross-validated design matrix described by a config file.
    #[command(after_help = experiment_help())]
    Experiment(ExperimentArgs),
    /// Compare analytic CNN gradients with central finite differences.
    Gradcheck(GradcheckArgs),
}

fn experiment_help() -> String {
    format!("Config keys (`key = value`, one per line):\n{}", ExperimentConfig::describe_keys())
}

#[derive(Args)]
struct IngestArgs {
    /// Directory of recordings, one integer per line per file.
    data_dir: PathBuf,
    /// Output CSV (`source,set,label,chunk_index,length`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file supplying `class_map` and `set_map`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cut recordings into chunks of this length (remainder dropped).
    #[arg(long)]
    chunk_len: Option<usize>,
}

#[derive(Args)]
struct DownsampleArgs {
    /// dropout, mean or lttb.
    #[arg(long)]
    method: Method,
    /// Interior points kept; the output has target + 2 rows (both endpoints).
    #[arg(long)]
    target: usize,
    /// Dynamic rebucketing iterations; 0 disables.
    #[arg(long, default_value_t = 0)]
    dynamic_p: usize,
    /// Input CSV; the last column is the series, a non-numeric first line is a header.
    input: PathBuf,
    /// Output CSV: one column (dropout) or `x,y` (mean, lttb), no header.
    output: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// raw, betti or spectra.
    #[arg(long)]
    kind: FeatureKind,
    /// Treat every input row as a point of a cloud instead of a series sample.
    #[arg(long)]
    cloud: bool,
    /// Takens window length.
    #[arg(long, default_value_t = 3)]
    takens_m: usize,
    /// ε-grid length.
    #[arg(long, default_value_t = 300)]
    epsilon_steps: usize,
    /// max_distance or enclosing_radius.
    #[arg(long, default_value = "max_distance")]
    r_policy: RadiusPolicy,
    /// Equal eigenvalue buckets over [0, 2] (spectra).
    #[arg(long, default_value_t = 7)]
    tau_count: usize,
    /// Rips complex size limit (betti).
    #[arg(long, default_value_t = DEFAULT_SIMPLEX_CAP)]
    simplex_cap: usize,
    /// Input CSV (a series in the last column, or points with --cloud).
    input: PathBuf,
    /// Output CSV: `value` (raw), `epsilon,beta0,beta1,beta2` or `epsilon,mu0,…`.
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Config file (corpus, feature and optimizer keys); defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// raw, betti or spectra.
    #[arg(long, default_value = "raw")]
    feature: FeatureKind,
    #[arg(long, default_value_t = 300)]
    chunk_len: usize,
    /// Downsampled length; defaults to the chunk length.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value = "dropout")]
    method: Method,
    /// Apply dynamic rebucketing before downsampling.
    #[arg(long)]
    dynamic: bool,
    /// Where to write the checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file; see the key list below.
    #[arg(long)]
    config: PathBuf,
    /// Results CSV.
    #[arg(long)]
    out: PathBuf,
    /// Keep rows already in --out and only run the missing cells.
    #[arg(long)]
    resume: bool,
    /// Also write per-curve `resolution,mean_acc` CSVs into this directory.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb one analytic partial; the check must then fail.
    #[arg(long, hide = true)]
    corrupt: bool,
}

enum Failure {
    Usage(String),
    Processing(String),
}

impl From<tsgeom::Error> for Failure {
    fn from(e: tsgeom::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Processing(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Processing(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Processing(m) => f.write_str(m),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file {} does not exist", path.display())))
    }
}

fn config_or_default(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => {
            require_file(p)?;
            Ok(load_config(p)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

/// Numeric rows of a CSV; a non-numeric first line is taken as a header.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    require_file(path)?;
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Failure::Processing(format!("{}:{}: not numeric: {line:?}", path.display(), i + 1)))
            }
        }
    }
    Ok(rows)
}

fn read_series(path: &Path) -> Result<Vec<f64>, Failure> {
    Ok(read_rows(path)?
        .into_iter()
        .filter_map(|r| r.last().copied())
        .collect())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Processing(format!("cannot write {}: {e}", path.display())))
}

fn cmd_ingest(a: IngestArgs) -> CmdResult {
    if !a.data_dir.is_dir() {
        return Err(Failure::Usage(format!("{} is not a directory", a.data_dir.display())));
    }
    let cfg = config_or_default(a.config.as_deref())?;
    let recordings = load_bonn_dir(&a.data_dir, &cfg.class_map, &cfg.set_map())?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "source,set,label,chunk_index,length")?;
    for r in &recordings {
        match a.chunk_len {
            Some(len) => {
                for c in segment(r, len)? {
                    writeln!(out, "{},{},{},{},{}", c.series.source_id(), c.set_tag, c.label, c.chunk_index, c.series.len())?;
                }
            }
            None => writeln!(out, "{},{},{},,{}", r.series.source_id(), r.set_tag, r.label, r.series.len())?,
        }
    }
    out.flush()?;
    log::info!("{} recordings", recordings.len());
    Ok(())
}

fn cmd_downsample(a: DownsampleArgs) -> CmdResult {
    let series = read_series(&a.input)?;
    let points = downsample(&series, a.target, a.method, a.dynamic_p)?;
    let mut out = create(&a.output)?;
    for p in points {
        match a.method {
            Method::Dropout => writeln!(out, "{}", p.y)?,
            Method::Mean | Method::Lttb => writeln!(out, "{},{}", p.x, p.y)?,
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_features(a: FeaturesArgs) -> CmdResult {
    let rows = read_rows(&a.input)?;
    if a.kind == FeatureKind::Raw {
        let series: Vec<f64> = rows.iter().filter_map(|r| r.last().copied()).collect();
        let mut out = create(&a.output)?;
        writeln!(out, "value")?;
        for v in zscore(&series) {
            writeln!(out, "{v}")?;
        }
        out.flush()?;
        return Ok(());
    }
    let cloud = if a.cloud {
        PointCloud::from_points(&rows)?
    } else {
        let series: Vec<f64> = rows.iter().filter_map(|r| r.last().copied()).collect();
        takens_embed(&series, a.takens_m)?
    };
    if a.epsilon_steps < 2 {
        return Err(Failure::Usage("--epsilon-steps must be at least 2".into()));
    }
    let params = FeatureParams {
        takens_m: a.takens_m,
        epsilon_steps: a.epsilon_steps,
        r_policy: a.r_policy,
        taus: TauPartition::even(a.tau_count)?,
        simplex_cap: a.simplex_cap,
        normalize_counts: false,
    };
    let dm = pairwise_distances(&cloud);
    let grid = epsilon_grid(&dm, params.epsilon_steps, params.r_policy)?;
    let (series, prefix) = match a.kind {
        FeatureKind::Betti => {
            let filtration = rips_filtration(&dm, 3, grid.r_max(), params.simplex_cap).map_err(|e| {
                Failure::Processing(format!(
                    "{e}\nhint: use a shorter chunk, --r-policy enclosing_radius, or a larger --simplex-cap"
                ))
            })?;
            (betti_series(&reduce(&filtration), &grid, &[0, 1, 2]), "beta")
        }
        FeatureKind::Spectra => (mu_series(&dm, &grid, &params.taus)?, "mu"),
        FeatureKind::Raw => unreachable!("handled above"),
    };
    let mut out = create(&a.output)?;
    let header: Vec<String> = (0..series.channel_count()).map(|j| format!("{prefix}{j}")).collect();
    writeln!(out, "epsilon,{}", header.join(","))?;
    for (i, eps) in grid.values().iter().enumerate() {
        let row: Vec<String> = series.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{eps},{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let cfg = config_or_default(a.config.as_deref())?;
    let cell = ExperimentCell {
        feature: a.feature,
        chunk_len: a.chunk_len,
        method: a.method,
        dynamic: a.dynamic,
        resolution: a.resolution.unwrap_or(a.chunk_len),
    };
    if cell.resolution > cell.chunk_len || cell.resolution < 3 {
        return Err(Failure::Usage(format!(
            "--resolution must lie in 3..={}, got {}",
            cell.chunk_len, cell.resolution
        )));
    }
    let corpora = build_corpora(&cfg, &[cell.chunk_len].into_iter().collect())?;
    let chunks = &corpora[&cell.chunk_len];
    let data = cell_dataset(&cell, chunks, &cfg)?;
    let (model, report) = train(model_spec(&cell, &cfg), &data, &cfg.train)?;
    let acc = evaluate(&model, &data)?;
    save_checkpoint(&model, create(&a.checkpoint)?)?;
    println!(
        "trained on {} chunks: final loss {:.6}, training accuracy {acc:.4}",
        data.len(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    require_file(&a.config)?;
    let cfg = load_config(&a.config)?;
    let results = run_matrix(&cfg, &a.out, a.resume)?;
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    println!("{} cells in {} ({failed} failed)", results.len(), a.out.display());
    if let Some(dir) = a.plot_dir {
        let paths = write_plot_data(&results, &dir)?;
        println!("{} plot series in {}", paths.len(), dir.display());
    }
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> CmdResult {
    let report = tsgeom::cnn::gradient_check(a.seed, a.corrupt)?;
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "max relative error {:e} over {} parameters (worst: {}[{}]), tolerance {:e}: {verdict}",
        report.max_rel_error, report.checked, report.worst_group, report.worst_index, GRADCHECK_TOLERANCE
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Processing("gradient check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Downsample(a) => cmd_downsample(a),
        Command::Features(a) => cmd_features(a),
        Command::Train(a) => cmd_train(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Processing(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
