//! Monte Carlo estimation, convergence studies and CSV output.
//!
//! Paths are processed in fixed-size chunks. Each chunk accumulates its paths
//! in index order and the chunk accumulators are merged in chunk order, so an
//! estimate depends only on `(seed, configuration)` and never on the number of
//! worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{open_stream, SeedSpec, Stream};
use crate::products::Product;
use crate::walk::Algorithm;

/// Normal quantile for a two-sided 95% confidence interval.
pub const Z_95: f64 = 1.96;

const CHUNK: u64 = 1024;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Result of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub value: f64,
    pub exit_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
    exit: CompensatedSum,
    failures: u64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: PathSample) {
        self.n += 1;
        self.sum.add(sample.value);
        self.sum_sq.add(sample.value * sample.value);
        self.exit.add(sample.exit_time);
    }

    pub fn record_failure(&mut self) {
        self.failures += 1;
    }

    /// Associative, commutative up to rounding; callers merge in a fixed order.
    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.exit.merge(&other.exit);
        self.failures += other.failures;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn finish(&self) -> Result<MCResult> {
        if self.n < 2 {
            return Err(Error::InsufficientSamples(self.n));
        }
        let n = self.n as f64;
        let mean = self.sum.value() / n;
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        let std_error = (var / n).sqrt();
        Ok(MCResult {
            estimate: mean,
            std_error,
            ci_half_width_95: Z_95 * std_error,
            n_paths: self.n,
            mean_exit_time: self.exit.value() / n,
            failure_count: self.failures,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_half_width_95: f64,
    /// Paths that contributed to the estimate (failed paths excluded).
    pub n_paths: u64,
    pub mean_exit_time: f64,
    pub failure_count: u64,
}

/// Estimate from plain samples (exit times recorded as zero).
pub fn estimate(samples: &[f64]) -> Result<MCResult> {
    let mut acc = Accumulator::new();
    for &value in samples {
        acc.push(PathSample {
            value,
            exit_time: 0.0,
        });
    }
    acc.finish()
}

/// Runs `n_paths` independent paths in parallel. Path `i` receives the stream
/// for `(seed, i)`. A path returning [`Error::ProjectionFailure`] is counted as
/// a failure and left out of the estimate; any other error aborts the run.
pub fn simulate_paths<F>(n_paths: u64, seed: u64, path: F) -> Result<MCResult>
where
    F: Fn(&mut Stream) -> Result<PathSample> + Sync,
{
    let chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<Result<Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut stream = open_stream(SeedSpec::new(seed, i));
                match path(&mut stream) {
                    Ok(sample) => acc.push(sample),
                    Err(Error::ProjectionFailure { .. }) => acc.record_failure(),
                    Err(e) => return Err(e),
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new();
    for p in partials {
        total.merge(&p?);
    }
    total.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub estimate: f64,
    /// `estimate - reference`, when a reference is known.
    pub bias: Option<f64>,
    pub ci_half_width: f64,
    pub mean_exit_time: f64,
    pub n_paths: u64,
    pub failures: u64,
}

impl ConvergenceRow {
    pub fn from_result(h: f64, result: &MCResult, reference: Option<f64>) -> Self {
        Self {
            h,
            estimate: result.estimate,
            bias: reference.map(|r| result.estimate - r),
            ci_half_width: result.ci_half_width_95,
            mean_exit_time: result.mean_exit_time,
            n_paths: result.n_paths,
            failures: result.failure_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    /// Sorted by decreasing `h`.
    pub rows: Vec<ConvergenceRow>,
    /// Steps that could not be run, with the reason.
    pub failed: Vec<(f64, Error)>,
}

/// Prices `product` at every step in `h_list`. A step that fails (e.g. does
/// not align with the tenor dates) is reported in `failed`; the rest still run.
pub fn convergence_study(
    product: &Product,
    algorithm: Algorithm,
    h_list: &[f64],
    n_paths: u64,
    reference: Option<f64>,
    seed: u64,
) -> StudyReport {
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for h in hs {
        match product.price(algorithm, h, n_paths, seed) {
            Ok(res) => rows.push(ConvergenceRow::from_result(h, &res, reference)),
            Err(e) => failed.push((h, e)),
        }
    }
    StudyReport { rows, failed }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    /// Least-squares slope of `ln|bias|` against `ln h`.
    pub slope: f64,
    pub intercept: f64,
    /// Rows whose bias exceeds three half-widths; only these enter the fit.
    pub resolved_rows: usize,
    /// False when fewer than four rows are resolved.
    pub conclusive: bool,
}

/// Empirical convergence order from a study.
pub fn fit_convergence_order(rows: &[ConvergenceRow]) -> OrderFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let b = r.bias?.abs();
            (b > 3.0 * r.ci_half_width && b > 0.0 && r.h > 0.0).then(|| (r.h.ln(), b.ln()))
        })
        .collect();
    let n = pts.len();
    let (slope, intercept) = if n >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    } else {
        (f64::NAN, f64::NAN)
    };
    OrderFit {
        slope,
        intercept,
        resolved_rows: n,
        conclusive: n >= 4,
    }
}

#[derive(Serialize)]
struct CsvRow {
    h: f64,
    estimate: f64,
    bias: Option<f64>,
    ci_half_width_95: f64,
    mean_exit_time: f64,
    n_paths: u64,
    failures: u64,
}

/// Writes rows with header `h,estimate,bias,ci_half_width_95,mean_exit_time,n_paths,failures`.
/// A missing bias is an empty field.
pub fn write_study_csv<W: Write>(out: W, rows: &[ConvergenceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            h: r.h,
            estimate: r.estimate,
            bias: r.bias,
            ci_half_width_95: r.ci_half_width,
            mean_exit_time: r.mean_exit_time,
            n_paths: r.n_paths,
            failures: r.failures,
        })?;
    }
    w.flush()?;
    Ok(())
}
