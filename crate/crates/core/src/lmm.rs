//! LIBOR market model: tenor structure, forward curve, volatilities,
//! exponential correlation with its triangular pseudo-root, measure-dependent
//! drifts, and the bond / swap-rate algebra on spanning LIBOR rates.
//!
//! Measures are identified by the index `n` of their numeraire bond
//! `P(t, T_n)`: `n = N` is the terminal measure, `n = 0` the `T_0`-forward one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing times that should coincide on a grid.
const TIME_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TenorStructure {
    dates: Vec<f64>,
    delta: f64,
}

impl TenorStructure {
    /// Equidistant dates `start, start + δ, …, start + nδ` spanning `n` rates.
    pub fn new(start: f64, delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0) || n == 0 || !start.is_finite() || start < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tenor structure needs start >= 0, δ > 0 and N >= 1 (start={start}, δ={delta}, N={n})"
            )));
        }
        let dates = (0..=n).map(|i| start + i as f64 * delta).collect();
        Ok(Self { dates, delta })
    }

    /// Tenor grid from `start` to `end` in steps of `delta`.
    pub fn from_range(start: f64, end: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !(end > start) {
            return Err(Error::InvalidParameter(format!(
                "tenor range needs start < end and δ > 0 (start={start}, end={end}, δ={delta})"
            )));
        }
        let ratio = (end - start) / delta;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "tenor span {} is not a multiple of δ = {delta}",
                end - start
            )));
        }
        Self::new(start, delta, n as usize)
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn date(&self, i: usize) -> f64 {
        self.dates[i]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of forward rates `N`.
    pub fn n_rates(&self) -> usize {
        self.dates.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.dates[0]
    }

    pub fn end(&self) -> f64 {
        self.dates[self.dates.len() - 1]
    }

    /// `ϱ(t) = min { i ≤ N-1 : t ≤ T_i }`, the first rate still alive at `t`.
    /// Returns `N` once every rate has fixed.
    pub fn alive_from(&self, t: f64) -> usize {
        let n = self.n_rates();
        (0..n)
            .find(|&i| t <= self.dates[i] + TIME_EPS)
            .unwrap_or(n)
    }

    /// Whether rate `i` is still simulated on `(t, t + h]`, i.e. `T_i > t`.
    pub fn is_live_after(&self, i: usize, t: f64) -> bool {
        self.dates[i] > t + TIME_EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    rates: Vec<f64>,
}

impl ForwardCurve {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter("forward curve is empty".into()));
        }
        if let Some((i, r)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "forward rate L^{i} = {r} must be positive"
            )));
        }
        Ok(Self { rates })
    }

    pub fn flat(rate: f64, n: usize) -> Result<Self> {
        Self::new(vec![rate; n])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn log_rates(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.ln()).collect()
    }
}

/// Deterministic instantaneous volatilities, constant in time per rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolModel {
    Flat(f64),
    PerRate(Vec<f64>),
}

impl VolModel {
    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match self {
            VolModel::Flat(v) if ok(*v) => Ok(()),
            VolModel::PerRate(vs) if vs.len() == n && vs.iter().all(|v| ok(*v)) => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "volatilities must be finite, non-negative and one per rate ({n}): {other:?}"
            ))),
        }
    }

    #[inline]
    pub fn sigma(&self, i: usize, _t: f64) -> f64 {
        match self {
            VolModel::Flat(v) => *v,
            VolModel::PerRate(vs) => vs[i],
        }
    }

    /// `σ_Max`: largest volatility over the rates `from..n` and all times.
    pub fn max_sigma(&self, from: usize, n: usize) -> f64 {
        (from..n).map(|i| self.sigma(i, 0.0)).fold(0.0, f64::max)
    }

    /// `∫_{t0}^{t1} σ_i(s) σ_j(s) ds`.
    pub fn integrated_covariance(&self, i: usize, j: usize, t0: f64, t1: f64) -> f64 {
        self.sigma(i, t0) * self.sigma(j, t0) * (t1 - t0)
    }
}

/// `ρ_ij = exp(-β |T_i - T_j|)` for the `N` rate fixing dates.
pub fn correlation_matrix(beta: f64, tenor: &TenorStructure) -> DMatrix<f64> {
    let n = tenor.n_rates();
    DMatrix::from_fn(n, n, |i, j| {
        (-beta * (tenor.date(i) - tenor.date(j)).abs()).exp()
    })
}

/// Upper triangular `U` with `U Uᵀ = ρ`.
///
/// Computed by a Cholesky factorization of `ρ` with rows and columns reversed,
/// then reversing the factor back.
pub fn pseudo_root(rho: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = rho.nrows();
    if n == 0 || rho.ncols() != n {
        return Err(Error::Factorization(format!(
            "matrix must be square and non-empty, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if (0..n).any(|i| (0..i).any(|j| (rho[(i, j)] - rho[(j, i)]).abs() > 1e-14)) {
        return Err(Error::Factorization("matrix is not symmetric".into()));
    }
    let reversed = DMatrix::from_fn(n, n, |i, j| rho[(n - 1 - i, n - 1 - j)]);
    let chol = reversed
        .cholesky()
        .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
    let lower = chol.l();
    Ok(DMatrix::from_fn(n, n, |i, j| lower[(n - 1 - i, n - 1 - j)]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    beta: f64,
    rho: DMatrix<f64>,
    root: DMatrix<f64>,
}

impl CorrelationModel {
    pub fn exponential(beta: f64, tenor: &TenorStructure) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "correlation decay β must be finite and >= 0, got {beta}"
            )));
        }
        let rho = correlation_matrix(beta, tenor);
        let root = if beta == 0.0 {
            // Perfect correlation is only semidefinite: one factor drives every rate.
            let n = rho.nrows();
            DMatrix::from_fn(n, n, |_, j| if j == n - 1 { 1.0 } else { 0.0 })
        } else {
            pseudo_root(&rho)?
        };
        Ok(Self { beta, rho, root })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn root(&self) -> &DMatrix<f64> {
        &self.root
    }
}

/// Drift of `dL^i / L^i` under the measure with numeraire `P(t, T_n)`:
///
/// ```text
/// i >= n:  +σ_i Σ_{j=n}^{i}     δL^j/(1+δL^j) ρ_ij σ_j
/// i <  n:  -σ_i Σ_{j=i+1}^{n-1} δL^j/(1+δL^j) ρ_ij σ_j
/// ```
///
/// so the rate paid at the numeraire date (`i = n - 1`) is driftless.
pub fn lmm_drift(
    i: usize,
    numeraire: usize,
    t: f64,
    rates: &[f64],
    tenor: &TenorStructure,
    vol: &VolModel,
    rho: &DMatrix<f64>,
) -> Result<f64> {
    let n = tenor.n_rates();
    if i >= n || rates.len() != n {
        return Err(Error::Index {
            index: i,
            reason: format!("no such rate among {n}"),
        });
    }
    if numeraire > n {
        return Err(Error::Index {
            index: numeraire,
            reason: format!("numeraire index above N = {n}"),
        });
    }
    if t > tenor.date(i) + TIME_EPS {
        return Err(Error::Index {
            index: i,
            reason: format!("rate fixed at T_{i} = {} is dead at t = {t}", tenor.date(i)),
        });
    }
    let delta = tenor.delta();
    let term = |j: usize| {
        let dl = delta * rates[j];
        dl / (1.0 + dl) * rho[(i, j)] * vol.sigma(j, t)
    };
    let sigma_i = vol.sigma(i, t);
    Ok(if i >= numeraire {
        sigma_i * (numeraire..=i).map(term).sum::<f64>()
    } else {
        -sigma_i * (i + 1..numeraire).map(term).sum::<f64>()
    })
}

/// `P(T_a, T_b) = Π_{j=a}^{b-1} 1 / (1 + δ L^j)`.
pub fn bond_from_libors(rates: &[f64], delta: f64, a: usize, b: usize) -> Result<f64> {
    if a > b {
        return Err(Error::Index {
            index: a,
            reason: format!("bond start index exceeds maturity index {b}"),
        });
    }
    if b > rates.len() {
        return Err(Error::Index {
            index: b,
            reason: format!("only {} rates available", rates.len()),
        });
    }
    Ok(rates[a..b].iter().map(|l| 1.0 / (1.0 + delta * l)).product())
}

/// Swap rate over all spanning rates:
/// `(1 - Π 1/(1+δL^j)) / (δ Σ_i Π_{j≤i} 1/(1+δL^j))`.
pub fn swap_rate(rates: &[f64], delta: f64) -> f64 {
    let mut disc = 1.0;
    let mut annuity = 0.0;
    let mut log_growth = 0.0;
    for l in rates {
        disc /= 1.0 + delta * l;
        annuity += disc;
        log_growth += (delta * l).ln_1p();
    }
    // 1 - disc without cancellation for small rates
    -(-log_growth).exp_m1() / (delta * annuity)
}

/// `Σ_{i=1}^{N} P(T_0, T_i)` from the spanning rates.
pub fn bond_sum(rates: &[f64], delta: f64) -> f64 {
    let mut disc = 1.0;
    let mut sum = 0.0;
    for l in rates {
        disc /= 1.0 + delta * l;
        sum += disc;
    }
    sum
}

/// Market state shared by the multi-rate products.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmModel {
    pub tenor: TenorStructure,
    pub curve: ForwardCurve,
    pub vol: VolModel,
    pub corr: CorrelationModel,
}

impl LmmModel {
    pub fn new(
        tenor: TenorStructure,
        curve: ForwardCurve,
        vol: VolModel,
        beta: f64,
    ) -> Result<Self> {
        let n = tenor.n_rates();
        if curve.rates().len() != n {
            return Err(Error::InvalidParameter(format!(
                "curve has {} rates but the tenor structure spans {n}",
                curve.rates().len()
            )));
        }
        vol.validate(n)?;
        let corr = CorrelationModel::exponential(beta, &tenor)?;
        Ok(Self {
            tenor,
            curve,
            vol,
            corr,
        })
    }

    pub fn n_rates(&self) -> usize {
        self.tenor.n_rates()
    }

    /// Today's discount factor `P(0, T_i)`.
    ///
    /// Before `T_0` the curve is extended flat at `L^0` with simple
    /// compounding per accrual period, `P(0, T_0) = (1 + δ L^0)^{-T_0/δ}`; after
    /// `T_0` the spanning rates are chained.
    pub fn initial_discount(&self, i: usize) -> f64 {
        let delta = self.tenor.delta();
        let rates = self.curve.rates();
        let to_start = (1.0 + delta * rates[0]).powf(-self.tenor.start() / delta);
        to_start * bond_from_libors(rates, delta, 0, i).expect("index within tenor")
    }
}
