//! The `fuzzyseg` command line.
//!
//! Exit codes: 0 success, 2 bad arguments or inputs, 3 solver failure,
//! 4 I/O or file-format failure. Results go to stdout as `key=value` lines.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, ErrorKind, Result};
use crate::imageio::{read_gray, read_mask, write_gray, write_labels, write_mask, write_membership_csv, LabelImage};
use crate::metrics::{evaluate_with, SimilarityIndex, CSV_HEADER};
use crate::model::NormKind;
use crate::phantom::{generate, Noise, PhantomSpec, Shape};
use crate::pipeline::{mean_report, run_benchmark, segment_image_observed, Algorithm, BenchmarkRow, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable capping the worker count; `0` runs sequentially.
pub const THREADS_ENV: &str = "FUZZYSEG_THREADS";

const PHANTOM_KEYS: &str = "\
Phantom spec files hold one `key=value` per line; `#` starts a comment.
Keys:
  width=N, height=N           image size in pixels
  background=F, object=F      intensities in [0,1], distinct
  disk=CX,CY,R                disk object (repeatable), center-in-circle rule
  rect=X,Y,W,H                rectangle object (repeatable)
  noise=none | gaussian:SIGMA | salt_pepper:PROB
  seed=N                      noise seed
Without a spec file the default is a 128x128 image with disks (40,64,r=20)
and (90,64,r=16) at intensity 0.75 on a 0.25 background.";

#[derive(Debug, Parser)]
#[command(name = "fuzzyseg", version, about = "Fuzzy and possibilistic c-means image segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a PGM/PNG image and write a label PGM
    Segment(SegmentArgs),
    /// Score a binary segmentation against a reference mask
    Evaluate(EvaluateArgs),
    /// Generate a synthetic phantom and its ground-truth mask
    #[command(after_help = PHANTOM_KEYS)]
    Phantom(PhantomArgs),
    /// Segment and score phantoms over several algorithms and seeds
    #[command(after_help = PHANTOM_KEYS)]
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Fcm,
    Mfcm,
    Pcm,
    Fpcm,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Fcm => Algorithm::Fcm,
            AlgoArg::Mfcm => Algorithm::Mfcm,
            AlgoArg::Pcm => Algorithm::Pcm,
            AlgoArg::Fpcm => Algorithm::Fpcm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexArg {
    Dice,
    Jaccard,
}

/// Solver tunables shared by `segment` and `benchmark`.
#[derive(Debug, Args)]
struct SolverArgs {
    /// Number of clusters
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    /// Fuzzifier, > 1
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    /// Typicality exponent (fpcm)
    #[arg(long, default_value_t = 2.0)]
    eta_exp: f64,
    /// Stop when no membership moves by more than this
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Weight of the non-local term (mfcm)
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Local neighborhood radius (mfcm)
    #[arg(long, default_value_t = 2)]
    r_l: usize,
    /// Non-local search radius (mfcm)
    #[arg(long, default_value_t = 5)]
    r_s: usize,
    /// Patch radius (mfcm)
    #[arg(long, default_value_t = 2)]
    r_p: usize,
    /// Patch-weight bandwidth (mfcm)
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Scale multiplier for the possibilistic bandwidths (pcm)
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, value_enum, default_value = "euclidean")]
    norm: NormArg,
}

impl SolverArgs {
    fn config(&self, algorithm: Algorithm, seed: u64) -> RunConfig {
        RunConfig {
            algorithm,
            clusters: self.clusters,
            m: self.m,
            eta_exp: self.eta_exp,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            seed,
            lambda: self.lambda,
            r_l: self.r_l,
            r_s: self.r_s,
            r_p: self.r_p,
            h: self.h,
            k: self.k,
            norm: match self.norm {
                NormArg::Euclidean => NormKind::Euclidean,
                NormArg::Mahalanobis => NormKind::Mahalanobis,
            },
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long, value_enum, default_value = "fcm")]
    algo: AlgoArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Seed of the random initial partition
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Input image (P5 PGM or 8-bit grayscale PNG)
    #[arg(long)]
    input: PathBuf,
    /// Output label PGM
    #[arg(long)]
    output: PathBuf,
    /// Also write the membership matrix as CSV
    #[arg(long)]
    membership: Option<PathBuf>,
    /// Log every iteration to stderr
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Segmentation mask (PGM/PNG, >= 128 is object)
    #[arg(long)]
    seg: PathBuf,
    /// Reference mask (PGM/PNG, >= 128 is object)
    #[arg(long)]
    gt: PathBuf,
    /// Append a CSV row (header written if the file is new)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Name in the CSV algo column
    #[arg(long, default_value = "seg")]
    label: String,
    #[arg(long, value_enum, default_value = "dice")]
    index: IndexArg,
}

#[derive(Debug, Args)]
struct PhantomFlags {
    /// Phantom spec file; inline flags override its values
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    background: Option<f64>,
    #[arg(long)]
    object: Option<f64>,
    /// CX,CY,R; replaces the spec's objects (repeatable, combines with --rect)
    #[arg(long)]
    disk: Vec<String>,
    /// X,Y,W,H; replaces the spec's objects (repeatable, combines with --disk)
    #[arg(long)]
    rect: Vec<String>,
    /// none | gaussian:SIGMA | salt_pepper:PROB
    #[arg(long)]
    noise: Option<String>,
}

impl PhantomFlags {
    fn spec(&self) -> Result<PhantomSpec> {
        let mut spec = match &self.spec {
            Some(path) => PhantomSpec::parse(&std::fs::read_to_string(path)?)?,
            None => PhantomSpec::two_disk(Noise::None, 1),
        };
        if let Some(w) = self.width {
            spec.width = w;
        }
        if let Some(h) = self.height {
            spec.height = h;
        }
        if let Some(b) = self.background {
            spec.background_intensity = b;
        }
        if let Some(o) = self.object {
            spec.object_intensity = o;
        }
        if !self.disk.is_empty() || !self.rect.is_empty() {
            let mut objects = Vec::new();
            for d in &self.disk {
                objects.push(Shape::disk_from_str(d).ok_or_else(|| Error::InvalidSpec(format!("bad disk `{d}`")))?);
            }
            for r in &self.rect {
                objects.push(Shape::rect_from_str(r).ok_or_else(|| Error::InvalidSpec(format!("bad rect `{r}`")))?);
            }
            spec.objects = objects;
        }
        if let Some(noise) = &self.noise {
            spec.noise = noise.parse()?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[command(flatten)]
    flags: PhantomFlags,
    /// Noise seed (overrides the spec file)
    #[arg(long)]
    seed: Option<u64>,
    /// Output image (PGM, or PNG when the name ends in .png)
    #[arg(long)]
    output: PathBuf,
    /// Output ground-truth mask PGM
    #[arg(long)]
    mask: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    flags: PhantomFlags,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated algorithms
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fcm,mfcm,pcm,fpcm")]
    algos: Vec<AlgoArg>,
    /// Seeds as a comma-separated list of values or inclusive ranges A-B
    #[arg(long, default_value = "1-10")]
    seeds: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `1,4,7-9` into `[1, 4, 7, 8, 9]`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::invalid(format!("bad seed list entry `{part}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(Error::invalid("seed list is empty"));
    }
    Ok(seeds)
}

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Solver => EXIT_SOLVER,
        ErrorKind::Io => EXIT_IO,
    }
}

/// Worker count from [`THREADS_ENV`]: unset means rayon's default, `0` means one.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a non-negative integer, got `{value}`")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| dispatch(cli.command, out, err)));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Segment(a) => cmd_segment(&a, out, err),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Phantom(a) => cmd_phantom(&a, out),
        Command::Benchmark(a) => cmd_benchmark(&a, out),
    }
}

fn cmd_segment(args: &SegmentArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let config = args.solver.config(args.algo.into(), args.seed);
    config.validate()?;
    let image = read_gray(&args.input)?;
    let outcome = segment_image_observed(&image, &config, |s| {
        if args.verbose {
            let _ = writeln!(
                err,
                "iteration={} objective={} max_change={}",
                s.iteration, s.objective, s.max_change
            );
        }
    })?;
    let labels = LabelImage::new(image.width(), image.height(), outcome.clusters, &outcome.labels)?;
    write_labels(&labels, &args.output)?;
    if let Some(path) = &args.membership {
        write_membership_csv(&outcome.membership, path)?;
    }
    writeln!(out, "algo={}", outcome.algorithm)?;
    writeln!(out, "iterations={}", outcome.iterations)?;
    writeln!(out, "converged={}", outcome.converged)?;
    match outcome.objective {
        Some(j) => writeln!(out, "objective={j}")?,
        None => writeln!(out, "objective=nan")?,
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let seg = read_mask(&args.seg)?;
    let gt = read_mask(&args.gt)?;
    let index = match args.index {
        IndexArg::Dice => SimilarityIndex::Dice,
        IndexArg::Jaccard => SimilarityIndex::Jaccard,
    };
    let report = evaluate_with(&seg, &gt, index)?;
    out.write_all(report.to_key_value().as_bytes())?;
    if let Some(path) = &args.csv {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(file, "{CSV_HEADER}")?;
        }
        writeln!(file, "{}", report.to_csv_row(&args.label))?;
    }
    Ok(())
}

fn cmd_phantom(args: &PhantomArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut spec = args.flags.spec()?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (image, mask) = generate(&spec)?;
    write_gray(&image, &args.output)?;
    write_mask(&mask, &args.mask)?;
    writeln!(out, "width={}", spec.width)?;
    writeln!(out, "height={}", spec.height)?;
    writeln!(out, "objects={}", spec.objects.len())?;
    writeln!(out, "object_pixels={}", mask.count())?;
    writeln!(out, "noise={}", spec.noise)?;
    writeln!(out, "seed={}", spec.seed)?;
    Ok(())
}

fn benchmark_csv(algorithms: &[Algorithm], rows: &[BenchmarkRow]) -> String {
    let mut csv = format!("{CSV_HEADER}\n");
    for &algorithm in algorithms {
        let mine: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.algorithm == algorithm).collect();
        for row in &mine {
            csv.push_str(&row.report.to_csv_row(&format!("{algorithm}/seed={}", row.seed)));
            csv.push('\n');
        }
        if let Some(mean) = mean_report(&mine) {
            csv.push_str(&mean.to_csv_row(&format!("{algorithm}/mean")));
            csv.push('\n');
        }
    }
    csv
}

fn cmd_benchmark(args: &BenchmarkArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let spec = args.flags.spec()?;
    spec.validate()?;
    let seeds = parse_seeds(&args.seeds)?;
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for &a in &args.algos {
        let a = Algorithm::from(a);
        if !algorithms.contains(&a) {
            algorithms.push(a);
        }
    }
    let base = args.solver.config(Algorithm::Fcm, 0);
    for &a in &algorithms {
        RunConfig { algorithm: a, ..base.clone() }.validate()?;
    }
    let rows = run_benchmark(&spec, &base, &algorithms, &seeds)?;
    let csv = benchmark_csv(&algorithms, &rows);
    match &args.csv {
        Some(path) => {
            std::fs::write(path, &csv)?;
            for &a in &algorithms {
                let mine: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.algorithm == a).collect();
                if let Some(mean) = mean_report(&mine) {
                    writeln!(out, "{a}.similarity={:.4}", mean.similarity)?;
                    writeln!(out, "{a}.false_positive_ratio={:.4}", mean.false_positive_ratio)?;
                    writeln!(out, "{a}.false_negative_ratio={:.4}", mean.false_negative_ratio)?;
                }
            }
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}
