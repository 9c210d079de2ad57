use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use divcore::evalbench::{
    self, measure, report, summarize_bench, Baseline, DEFAULT_K_VALUES, DEFAULT_REPLACE_FRACTION, DEFAULT_STREAMS,
};
use divcore::export::{write_coreset_csv, write_decisions_csv};
use divcore::{diversity, load_any, partition, run, run_parallel, streams, synthetic, Algorithm, EngineConfig, Vector};
use thiserror::Error;

use crate::manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] anyhow::Error),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult = Result<(), CliError>;

/// Streaming max-min diversity core-sets.
#[derive(Debug, Parser)]
#[command(name = "divcore", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build per-stream core-sets and compose them.
    Summarize(SummarizeArgs),
    /// Time matrix construction and replacement across core-set sizes.
    Bench(BenchArgs),
    /// Compare the composed core-set against an offline baseline.
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic dataset.
    Generate(GenerateArgs),
    /// Convert a CSV dataset to the DIVCORE1 binary format.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Brute,
    Adjacency,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Brute => Algorithm::BruteForce,
            AlgorithmArg::Adjacency => Algorithm::KAdjacency,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV or DIVCORE1 binary (detected by magic).
    #[arg(long)]
    input: PathBuf,
    /// Skip the first CSV row.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_STREAMS)]
    streams: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Adjacency)]
    algorithm: AlgorithmArg,
    /// Scheduler ticks; runs to exhaustion when omitted.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// One worker per stream.
    #[arg(long)]
    parallel: bool,
    /// Also write each stream's final distance matrix (adjacency only).
    #[arg(long)]
    dump_matrix: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_K_VALUES)]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_STREAMS)]
    streams: usize,
    #[arg(long, default_value_t = DEFAULT_REPLACE_FRACTION)]
    replace_fraction: f64,
    /// Extra core-set sizes to extrapolate to.
    #[arg(long, value_delimiter = ',')]
    extrapolate_k: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also emit SVG charts.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_STREAMS)]
    streams: usize,
    #[arg(long, value_enum, default_value_t = BaselineArg::Greedy)]
    baseline: BaselineArg,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Adjacency)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Distribution {
    Clustered,
    Sphere,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = Distribution::Clustered)]
    distribution: Distribution,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; `.csv` writes CSV, anything else DIVCORE1 binary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

pub fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Summarize(a) => cmd_summarize(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Convert(a) => cmd_convert(a),
    }
}

fn load(input: &InputArgs) -> anyhow::Result<Vec<Vector>> {
    load_any(&input.input, input.header).with_context(|| format!("loading {}", input.input.display()))
}

fn check_k_streams(k: usize, streams: usize) -> CliResult {
    if k < 2 {
        return Err(usage(format!("--k must be at least 2, got {k}")));
    }
    if streams == 0 {
        return Err(usage("--streams must be at least 1"));
    }
    Ok(())
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_file(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_summarize(a: SummarizeArgs) -> CliResult {
    check_k_streams(a.k, a.streams)?;
    let mut manifest = RunManifest::start("summarize");
    let data = load(&a.input)?;
    manifest.input(&a.input.input).context("hashing input")?;
    let mut config = EngineConfig::new(a.k, a.algorithm.into()).with_seed(a.seed);
    config.horizon = a.horizon;
    for (key, value) in [
        ("k", a.k.to_string()),
        ("streams", a.streams.to_string()),
        ("algorithm", format!("{:?}", config.algorithm)),
        ("horizon", a.horizon.map(|h| h.to_string()).unwrap_or_else(|| "exhaustion".into())),
        ("parallel", a.parallel.to_string()),
    ] {
        manifest.set(key, value);
    }
    manifest.set("rng_seed", a.seed);

    let sources = partition(data, a.streams).context("partitioning")?;
    let out = if a.parallel { run_parallel(sources, &config) } else { run(sources, &config) }.context("engine run")?;

    create_out(&a.out)?;
    let mut artifacts = Vec::new();
    let path = a.out.join("coreset.csv");
    write_coreset_csv(create_file(&path)?, &out.coresets).context("writing core-set")?;
    artifacts.push(path);
    let path = a.out.join("decisions.csv");
    write_decisions_csv(create_file(&path)?, &out.decisions).context("writing decisions")?;
    artifacts.push(path);
    if a.dump_matrix {
        for (sid, m) in out.matrices.iter().enumerate() {
            if let Some(m) = m {
                let path = a.out.join(format!("matrix_{sid}.csv"));
                m.write_csv(create_file(&path)?).context("writing matrix")?;
                artifacts.push(path);
            }
        }
    }

    let composed = out.compose();
    let div = diversity(&composed).ok();
    manifest.set("composed_size", composed.len());
    if let Some(d) = div {
        manifest.set("composed_diversity", d);
    }
    artifacts.push(a.out.join("manifest.json"));
    manifest.finish(&artifacts, &a.out).context("writing manifest")?;

    println!("composed size: {}", composed.len());
    match div {
        Some(d) => println!("composed diversity: {d}"),
        None => println!("composed diversity: n/a (fewer than 2 points)"),
    }
    if let Some(rate) = out.replacement_rate() {
        println!("replacement rate: {rate:.6}");
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    if a.k_list.is_empty() || a.k_list.iter().any(|&k| k < 2) {
        return Err(usage("--k-list needs one or more sizes, each at least 2"));
    }
    if a.streams == 0 {
        return Err(usage("--streams must be at least 1"));
    }
    if !(0.0..=1.0).contains(&a.replace_fraction) {
        return Err(usage(format!("--replace-fraction must be in [0, 1], got {}", a.replace_fraction)));
    }
    let mut manifest = RunManifest::start("bench");
    let data = load(&a.input)?;
    manifest.input(&a.input.input).context("hashing input")?;
    manifest.set("k_list", a.k_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    manifest.set("streams", a.streams);
    manifest.set("replace_fraction", a.replace_fraction);

    let m = measure(&data, &a.k_list, a.streams).context("measuring")?;
    let report = summarize_bench(m, a.replace_fraction, &a.extrapolate_k).context("fitting")?;
    if report.build.best().is_none() || report.replacement.best().is_none() {
        log::warn!("not enough distinct core-set sizes for a fit; fit columns left empty");
        eprintln!("warning: not enough distinct core-set sizes for a fit; fit columns left empty");
    }
    let mut artifacts = report::write_bench_artifacts(&report, &a.out, a.svg).context("writing report")?;

    for (name, fits) in [("build", &report.build), ("replacement", &report.replacement)] {
        for f in [&fits.linear, &fits.quadratic].into_iter().flatten() {
            println!("{name} {} fit: coefficients {:?}, R^2 {:.6}", f.basis, f.coefficients, f.r_squared);
        }
    }
    for row in &report.extrapolation {
        let predicted = row.predicted.map(|p| format!("{:.6}s", p.total_seconds)).unwrap_or_else(|| "n/a".into());
        let rate = row.measured_replacement_rate.map(|r| format!("{r:.6}")).unwrap_or_else(|| "n/a".into());
        println!(
            "k={} predicted total {predicted} (assumed fraction {}), measured replacement rate {rate}",
            row.k, report.replace_fraction
        );
    }
    artifacts.push(a.out.join("manifest.json"));
    manifest.finish(&artifacts, &a.out).context("writing manifest")?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    check_k_streams(a.k, a.streams)?;
    let mut manifest = RunManifest::start("evaluate");
    let data = load(&a.input)?;
    manifest.input(&a.input.input).context("hashing input")?;
    let config = EngineConfig::new(a.k, a.algorithm.into()).with_seed(a.seed);
    let baseline = match a.baseline {
        BaselineArg::Exhaustive => Baseline::Exhaustive,
        BaselineArg::Greedy => Baseline::Greedy,
    };
    manifest.set("k", a.k);
    manifest.set("streams", a.streams);
    manifest.set("baseline", format!("{baseline:?}"));
    manifest.set("algorithm", format!("{:?}", config.algorithm));
    manifest.set("rng_seed", a.seed);

    let r = evalbench::evaluate(&data, &config, a.streams, baseline).context("evaluating")?;
    create_out(&a.out)?;
    let path = a.out.join("eval.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["composed_diversity", "baseline_diversity", "alpha", "replacement_rate"]).context("writing eval.csv")?;
    w.write_record([
        r.composed_diversity.to_string(),
        r.baseline_diversity.to_string(),
        r.alpha.to_string(),
        r.replacement_rate.map(|v| v.to_string()).unwrap_or_default(),
    ])
    .context("writing eval.csv")?;
    w.flush().context("writing eval.csv")?;

    println!("composed size: {}", r.composed_size);
    println!("composed diversity: {}", r.composed_diversity);
    println!("baseline diversity: {}", r.baseline_diversity);
    println!("alpha: {}", r.alpha);
    manifest.finish(&[path, a.out.join("manifest.json")], &a.out).context("writing manifest")?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    if a.n == 0 || a.dim == 0 {
        return Err(usage("--n and --dim must be positive"));
    }
    let data = match a.distribution {
        Distribution::Clustered => synthetic::clustered(a.n, a.dim, a.clusters, a.seed),
        Distribution::Sphere => synthetic::unit_sphere(a.n, a.dim, a.seed),
    };
    write_dataset(&data, &a.out)?;
    println!("wrote {} vectors of dim {} to {}", a.n, a.dim, a.out.display());
    Ok(())
}

fn write_dataset(data: &[Vector], out: &Path) -> anyhow::Result<()> {
    if out.extension().is_some_and(|e| e == "csv") {
        use std::io::Write;
        let mut w = create_file(out)?;
        for v in data {
            let row: Vec<String> = v.components().iter().map(ToString::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
    } else {
        streams::write_binary(out, data)?;
    }
    Ok(())
}

fn cmd_convert(a: ConvertArgs) -> CliResult {
    let data = load(&a.input)?;
    streams::write_binary(&a.out, &data).context("writing binary")?;
    println!("wrote {} vectors to {}", data.len(), a.out.display());
    Ok(())
}
