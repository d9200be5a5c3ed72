//! Command-line front end.
//!
//! ```text
//! lmm-barrier price <caplet|trigger-swap|swaption> [--config F] [--h H] [--paths N]
//!                   [--seed S] [--algo 1|0.5] [--optimal-f] [--self-reference] [--out DIR]
//! lmm-barrier study <caplet|trigger-swap|swaption> [--h-list a,b,c] ...
//! ```
//!
//! Exit status is 0 on success, 1 on validation or row-level errors and 2 on
//! I/O failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ProductKind, RunConfig};
use crate::error::Error;
use crate::harness::{
    convergence_study, write_study_csv, ConvergenceRow, MCResult, StudyReport,
};
use crate::walk::Algorithm;

/// Step used by `--self-reference`.
pub const SELF_REFERENCE_H: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "lmm-barrier", version, about = "Barrier LIBOR derivatives by random-walk Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one product at a single step size.
    Price {
        product: ProductArg,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a convergence study over a list of step sizes.
    Study {
        product: ProductArg,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProductArg {
    Caplet,
    TriggerSwap,
    Swaption,
}

impl From<ProductArg> for ProductKind {
    fn from(p: ProductArg) -> Self {
        match p {
            ProductArg::Caplet => ProductKind::Caplet,
            ProductArg::TriggerSwap => ProductKind::TriggerSwap,
            ProductArg::Swaption => ProductKind::Swaption,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    #[value(name = "1")]
    One,
    #[value(name = "0.5")]
    Half,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::One => Algorithm::Order1,
            AlgoArg::Half => Algorithm::OrderHalf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    /// JSON configuration; defaults to the reference setup for the product.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub algo: Option<AlgoArg>,
    /// Caplet only: use the variance-reducing control `F`.
    #[arg(long)]
    pub optimal_f: bool,
    /// Recompute the reference price at h = 0.01 instead of using the configured one.
    #[arg(long)]
    pub self_reference: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct ResultEntry {
    pub label: String,
    pub algorithm: Algorithm,
    pub h: f64,
    pub result: MCResult,
    pub bias: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FailedRow {
    pub h: f64,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective configuration, with the seed filled in.
    pub config: RunConfig,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
    pub reference: Option<f64>,
    pub results: Vec<ResultEntry>,
    pub failed_rows: Vec<FailedRow>,
}

/// Builds the effective configuration from an optional file plus flag overrides.
pub fn resolve_config(product: ProductKind, opts: &RunOpts) -> Result<(RunConfig, Vec<String>), CliError> {
    let mut notes = Vec::new();
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let cfg: RunConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            if cfg.product != product {
                return Err(CliError::Validation(format!(
                    "{} configures `{}` but the command asks for `{}`",
                    path.display(),
                    cfg.product.as_str(),
                    product.as_str()
                )));
            }
            cfg
        }
        None => {
            notes.push(format!("no --config given; using the reference {} setup", product.as_str()));
            RunConfig::reference_setup(product)
        }
    };
    if let Some(h) = opts.h {
        cfg.numerics.h = Some(h);
    }
    if let Some(hs) = &opts.h_list {
        cfg.numerics.h_list = Some(hs.clone());
    }
    if let Some(n) = opts.paths {
        cfg.numerics.n_paths = n;
    }
    if let Some(s) = opts.seed {
        cfg.numerics.seed = Some(s);
    }
    if let Some(a) = opts.algo {
        cfg.algorithm = a.into();
    }
    if opts.optimal_f {
        cfg.numerics.use_optimal_f = true;
    }
    if let Some(out) = &opts.out {
        cfg.output = Some(out.display().to_string());
    }
    cfg.validate()?;
    if cfg.numerics.seed.is_none() {
        notes.push("seed not given; default 0 applied".into());
        cfg.numerics.seed = Some(0);
    }
    Ok((cfg, notes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_rows(path: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_study_csv(&mut buf, rows).map_err(|e| io_err(path, e))?;
    write_file(path, &buf)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| "out".into()));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

/// Runs one parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let started = Instant::now();
    let (name, product, opts, is_study) = match &cli.command {
        Command::Price { product, opts } => ("price", *product, opts, false),
        Command::Study { product, opts } => ("study", *product, opts, true),
    };
    let kind: ProductKind = product.into();
    let (cfg, mut notes) = resolve_config(kind, opts)?;
    let dir = output_dir(&cfg)?;
    let built = cfg.build_product()?;
    let seed = cfg.seed();
    let n_paths = cfg.numerics.n_paths;
    let mut results = Vec::new();
    let mut failed = Vec::new();

    let mut reference = cfg.reference;
    if opts.self_reference {
        let r = built.price(cfg.algorithm, SELF_REFERENCE_H, n_paths, seed)?;
        notes.push(format!("reference recomputed at h = {SELF_REFERENCE_H}"));
        reference = Some(r.estimate);
        results.push(ResultEntry {
            label: "reference".into(),
            algorithm: cfg.algorithm,
            h: SELF_REFERENCE_H,
            result: r,
            bias: None,
        });
    }

    let stem = kind.as_str();
    if is_study {
        let hs = cfg
            .numerics
            .h_list
            .clone()
            .or_else(|| cfg.numerics.h.map(|h| vec![h]))
            .unwrap_or_default();
        let report = convergence_study(&built, cfg.algorithm, &hs, n_paths, reference, seed);
        push_report(&mut results, &mut failed, &report, cfg.algorithm, "study");
        let csv = dir.join(format!("{stem}_study.csv"));
        write_rows(&csv, &report.rows)?;
        println!("wrote {}", csv.display());
        if kind == ProductKind::Caplet {
            let other = match cfg.algorithm {
                Algorithm::Order1 => Algorithm::OrderHalf,
                Algorithm::OrderHalf => Algorithm::Order1,
            };
            let second = convergence_study(&built, other, &hs, n_paths, reference, seed);
            push_report(&mut results, &mut failed, &second, other, "study");
            let (o1, oh) = match cfg.algorithm {
                Algorithm::Order1 => (&report, &second),
                Algorithm::OrderHalf => (&second, &report),
            };
            let fig = dir.join("figure1.csv");
            write_figure(&fig, o1, oh)?;
            println!("wrote {}", fig.display());
        }
    } else {
        let h = cfg
            .numerics
            .h
            .ok_or_else(|| CliError::Validation("price needs a step: give --h or numerics.h".into()))?;
        let r = built.price(cfg.algorithm, h, n_paths, seed)?;
        let row = ConvergenceRow::from_result(h, &r, reference);
        results.push(ResultEntry {
            label: "price".into(),
            algorithm: cfg.algorithm,
            h,
            result: r,
            bias: row.bias,
        });
        let mut rows = vec![row];
        if opts.self_reference {
            let rr = &results[0];
            rows.insert(0, ConvergenceRow::from_result(rr.h, &rr.result, None));
        }
        let csv = dir.join(format!("{stem}_price.csv"));
        write_rows(&csv, &rows)?;
        println!("wrote {}", csv.display());
    }

    for e in &results {
        println!(
            "{:>10} {:?} h={:<8} estimate={:.6} ±{:.2e} mean_exit={:.3} failures={}",
            e.label, e.algorithm, e.h, e.result.estimate, e.result.ci_half_width_95,
            e.result.mean_exit_time, e.result.failure_count
        );
    }
    for f in &failed {
        eprintln!("row h={} failed: {}", f.h, f.error);
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: format!("{name} {stem}"),
        config: cfg.clone(),
        notes,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        reference,
        results,
        failed_rows: failed,
    };
    let mpath = dir.join("manifest.json");
    write_file(&mpath, serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes())?;
    let cpath = dir.join("config.json");
    write_file(&cpath, cfg.to_json().as_bytes())?;
    Ok(if manifest.failed_rows.is_empty() { 0 } else { 1 })
}

fn push_report(
    results: &mut Vec<ResultEntry>,
    failed: &mut Vec<FailedRow>,
    report: &StudyReport,
    algorithm: Algorithm,
    label: &str,
) {
    for r in &report.rows {
        results.push(ResultEntry {
            label: label.into(),
            algorithm,
            h: r.h,
            result: MCResult {
                estimate: r.estimate,
                std_error: r.ci_half_width / crate::harness::Z_95,
                ci_half_width_95: r.ci_half_width,
                n_paths: r.n_paths,
                mean_exit_time: r.mean_exit_time,
                failure_count: r.failures,
            },
            bias: r.bias,
        });
    }
    for (h, e) in &report.failed {
        failed.push(FailedRow {
            h: *h,
            error: e.to_string(),
        });
    }
}

#[derive(Serialize)]
struct FigureRow {
    h: f64,
    error_order1: Option<f64>,
    error_order_half: Option<f64>,
}

fn write_figure(path: &Path, o1: &StudyReport, oh: &StudyReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &o1.rows {
        let half = oh.rows.iter().find(|x| x.h == r.h);
        w.serialize(FigureRow {
            h: r.h,
            error_order1: r.bias.map(f64::abs),
            error_order_half: half.and_then(|x| x.bias).map(f64::abs),
        })
        .map_err(|e| io_err(path, e))?;
    }
    let buf = w.into_inner().map_err(|e| io_err(path, e))?;
    write_file(path, &buf)
}
