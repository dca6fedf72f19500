use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tabeval::detection::ThresholdDensity;
use tabeval::geometry::{xycut, PixelPage, XYCutConfig};
use tabeval::harness::{emit_report, evaluate, gen_fixture, load_corpus, write_corpus, FixtureConfig, MetricReport, MetricScope, RunConfig};
use tabeval::matching::MatchMode;
use tabeval::structure::TsrMetric;
use tabeval::table_model::normalize_markup;

#[derive(Parser)]
#[command(name = "tabeval", version, about = "Score end-to-end table extraction against ground truth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detection metrics: P/R/F1, expected metrics, WAvg(F1), AP, D-ECE.
    EvalTd(EvalArgs),
    /// Detection metrics plus structure scores over true positives.
    EvalTsr(EvalArgs),
    /// Full pipeline, including structure-weighted precision, recall and AP.
    EvalTe(EvalArgs),
    /// D-ECE and reliability bins only.
    Calibration(EvalArgs),
    /// Read table markup on stdin, write normalized markup to stdout.
    Normalize,
    /// Segment a page image into blocks, one JSON box per line.
    Xycut(XycutArgs),
    /// Write a seeded synthetic corpus.
    GenFixture(FixtureArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Corpus file, one JSON page record per line.
    corpus: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["bbox", "content"])]
    mode: Option<String>,
    #[arg(long)]
    theta_j: Option<f64>,
    #[arg(long)]
    theta_c: Option<f64>,
    /// Lower bound of the random IoU threshold for expected metrics.
    #[arg(long, value_parser = ["0", "0.5"])]
    density: Option<String>,
    /// Number of D-ECE bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Structure score used to weight end-to-end metrics.
    #[arg(long, value_parser = ["topology", "content", "teds"])]
    weighting: Option<String>,
    /// Drop predictions whose box contains no token center.
    #[arg(long)]
    filter_empty: bool,
    /// Report directory.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Args)]
struct XycutArgs {
    image: PathBuf,
    #[arg(long)]
    min_area: Option<f64>,
    #[arg(long)]
    gap: Option<usize>,
    /// Luminance below which a pixel is ink, in [0, 1].
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    pages: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error caused by the caller's input rather than by the tool.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn lib<T>(r: tabeval::Result<T>) -> Result<T> {
    r.map_err(|e| {
        if e.is_input_error() {
            InputError(e.into()).into()
        } else {
            e.into()
        }
    })
}

fn run_config(args: &EvalArgs, scope: MetricScope) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = input(fs::read_to_string(path).with_context(|| format!("reading {}", path.display())))?;
            input(toml::from_str(&text).with_context(|| format!("parsing {}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = &args.mode {
        cfg.mode = if m == "content" { MatchMode::Content } else { MatchMode::Bbox };
    }
    if let Some(v) = args.theta_j {
        cfg.theta_j = v;
    }
    if let Some(v) = args.theta_c {
        cfg.theta_c = v;
    }
    if let Some(d) = &args.density {
        cfg.densities = ThresholdDensity::parse(d).into_iter().collect();
    }
    if let Some(b) = args.bins {
        cfg.bins = b;
    }
    if let Some(w) = &args.weighting {
        cfg.weightings = TsrMetric::parse(w).into_iter().collect();
    }
    cfg.filter_empty |= args.filter_empty;
    cfg.scope = scope;
    lib(cfg.validate())?;
    Ok(cfg)
}

fn print_scalars(report: &MetricReport, out: &Path) -> Result<()> {
    let mut stdout = io::stdout().lock();
    for (k, v) in &report.scalars {
        match v {
            Some(v) => writeln!(stdout, "{k}\t{v:.6}")?,
            None => writeln!(stdout, "{k}\tNA")?,
        }
    }
    writeln!(stdout, "report written to {}", out.display())?;
    Ok(())
}

fn eval(args: &EvalArgs, scope: MetricScope, calibration_only: bool) -> Result<()> {
    let cfg = run_config(args, scope)?;
    let corpus = lib(load_corpus(&args.corpus))?;
    log::info!("{} pages loaded from {}", corpus.len(), args.corpus.display());
    let mut report = lib(evaluate(&corpus, &cfg))?;
    if calibration_only {
        report = report.calibration_only();
    }
    lib(emit_report(&report, &args.out))?;
    print_scalars(&report, &args.out)
}

fn normalize() -> Result<()> {
    let mut text = String::new();
    input(io::stdin().read_to_string(&mut text).context("reading stdin"))?;
    let normalized = lib(normalize_markup(&text))?;
    println!("{normalized}");
    Ok(())
}

fn run_xycut(args: &XycutArgs) -> Result<()> {
    let mut cfg = XYCutConfig::default();
    if let Some(v) = args.min_area {
        cfg.min_area = v;
    }
    if let Some(v) = args.gap {
        cfg.gap_threshold = v;
    }
    if let Some(v) = args.threshold {
        cfg.binarization_threshold = v;
    }
    let page = lib(PixelPage::load(&args.image, cfg.binarization_threshold))?;
    let mut stdout = io::stdout().lock();
    for b in xycut(&page, &cfg) {
        writeln!(stdout, "{}", serde_json::to_string(&b)?)?;
    }
    Ok(())
}

fn run_fixture(args: &FixtureArgs) -> Result<()> {
    let cfg = FixtureConfig {
        pages: args.pages,
        ..FixtureConfig::default()
    };
    let records = gen_fixture(args.seed, &cfg);
    match &args.out {
        Some(path) => {
            let file = input(fs::File::create(path).with_context(|| format!("creating {}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            lib(write_corpus(&records, &mut w))?;
            w.flush()?;
        }
        None => lib(write_corpus(&records, io::stdout().lock()))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::EvalTd(a) => eval(a, MetricScope::Detection, false),
        Command::EvalTsr(a) => eval(a, MetricScope::Structure, false),
        Command::EvalTe(a) => eval(a, MetricScope::EndToEnd, false),
        Command::Calibration(a) => eval(a, MetricScope::Detection, true),
        Command::Normalize => normalize(),
        Command::Xycut(a) => run_xycut(a),
        Command::GenFixture(a) => run_fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<InputError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
