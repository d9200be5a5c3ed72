//! Knock-out swaption on the swap rate over `T_0..T_N`, simulated in the
//! spanning log-LIBOR coordinates under `Q^{T_0}`. The barrier
//! `R_swap = R_up` is an implicit surface in those coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{simulate_paths, MCResult, PathSample};
use crate::lmm::{bond_sum, swap_rate, ForwardCurve, LmmModel, TenorStructure, VolModel};
use crate::products::closed_form::up_and_out_call;
use crate::products::log_libor::LogLiborSystem;
use crate::products::projection::project_to_barrier;
use crate::sde::TimeGrid;
use crate::walk::{run_walk, Algorithm, DomainOracle, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwaptionSpec {
    pub strike: f64,
    /// Upper barrier on the swap rate.
    pub r_up: f64,
}

impl SwaptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.r_up > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "swaption needs K > 0 and R_up > 0 (K={}, R_up={})",
                self.strike, self.r_up
            )));
        }
        Ok(())
    }
}

/// `T_0 = 10`, ten yearly rates, flat 5% curve, 10% volatility, `β = 0.1`.
pub fn reference_model() -> LmmModel {
    let tenor = TenorStructure::from_range(10.0, 20.0, 1.0).expect("valid tenor");
    let curve = ForwardCurve::flat(0.05, tenor.n_rates()).expect("positive curve");
    LmmModel::new(tenor, curve, VolModel::Flat(0.1), 0.1).expect("valid model")
}

/// `K = 1%`, `R_up = 7.5%`.
pub fn reference_spec() -> SwaptionSpec {
    SwaptionSpec {
        strike: 0.01,
        r_up: 0.075,
    }
}

/// Today's annuity `δ Σ_{j=1}^{N} P(0, T_j)`.
pub fn annuity(model: &LmmModel) -> f64 {
    let n = model.n_rates();
    model.tenor.delta() * (1..=n).map(|j| model.initial_discount(j)).sum::<f64>()
}

/// Swap-rate weights `w_i = P(0,T_{i+1}) / Σ_k P(0,T_{k+1})`, so that
/// `R_swap = Σ w_i L^i`.
pub fn swap_weights(rates: &[f64], delta: f64) -> Vec<f64> {
    let mut disc = 1.0;
    let p: Vec<f64> = rates
        .iter()
        .map(|l| {
            disc /= 1.0 + delta * l;
            disc
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|v| v / total).collect()
}

/// Lognormal swap-rate volatility from frozen weights:
/// `v² = Σ_ij w_i w_j L^i L^j ρ_ij ∫_0^{T_0} σ_i σ_j ds / R²`. Returns `v`.
pub fn rebonato_vol(model: &LmmModel) -> f64 {
    let rates = model.curve.rates();
    let delta = model.tenor.delta();
    let w = swap_weights(rates, delta);
    let r = swap_rate(rates, delta);
    let t0 = model.tenor.start();
    let rho = model.corr.rho();
    let n = rates.len();
    let mut v2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            v2 += w[i] * w[j] * rates[i] * rates[j] * rho[(i, j)]
                * model.vol.integrated_covariance(i, j, 0.0, t0);
        }
    }
    (v2 / (r * r)).sqrt()
}

/// Swap-market-model barrier swaption price with total volatility `v_swap`.
pub fn swaption_smm_closed_form(model: &LmmModel, spec: &SwaptionSpec, v_swap: f64) -> Result<f64> {
    spec.validate()?;
    let r0 = swap_rate(model.curve.rates(), model.tenor.delta());
    Ok(annuity(model) * up_and_out_call(r0, spec.strike, spec.r_up, v_swap)?)
}

/// Zone detection and projection for the swap-rate barrier.
#[derive(Debug, Clone)]
pub struct SwaptionDomain {
    n: usize,
    delta: f64,
    ln_r_up: f64,
    r_up: f64,
    sigma: Vec<f64>,
    sigma_max: f64,
}

impl SwaptionDomain {
    pub fn new(model: &LmmModel, spec: &SwaptionSpec) -> Self {
        let n = model.n_rates();
        Self {
            n,
            delta: model.tenor.delta(),
            ln_r_up: spec.r_up.ln(),
            r_up: spec.r_up,
            sigma: (0..n).map(|i| model.vol.sigma(i, 0.0)).collect(),
            sigma_max: model.vol.max_sigma(0, n),
        }
    }

    /// `σ²hN - σ²h/2 + σ√(hN)` with `σ = σ_Max`: the largest one-step rise of
    /// a log-rate.
    fn max_rise(&self, h: f64) -> f64 {
        let s = self.sigma_max;
        let n = self.n as f64;
        s * s * h * n - 0.5 * s * s * h + s * (h * n).sqrt()
    }

    /// Cheap test: every rate moved to `ln L_max` plus the largest rise still
    /// has a flat swap rate below `R_up`.
    pub fn rough_inside(&self, x: &[f64], h: f64) -> bool {
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + self.max_rise(h) < self.ln_r_up
    }

    /// Finer test bounding each rate's rise separately.
    pub fn fine_inside(&self, x: &[f64], h: f64) -> bool {
        let n = self.n;
        let s_max_k = self.sigma.iter().copied().fold(0.0, f64::max);
        let shifted: Vec<f64> = (0..n)
            .map(|i| {
                let s = self.sigma[i];
                x[i].exp() * (1.0 + (i + 1) as f64 * s * s_max_k * h + s * ((n - i) as f64 * h).sqrt())
            })
            .collect();
        swap_rate(&shifted, self.delta) < self.r_up
    }
}

impl DomainOracle for SwaptionDomain {
    fn in_boundary_zone(&self, _k: usize, _t: f64, x: &[f64], h: f64) -> bool {
        !self.rough_inside(x, h) && !self.fine_inside(x, h)
    }

    fn project(&self, x: &[f64]) -> Result<Projection> {
        let rates: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        if swap_rate(&rates, self.delta) >= self.r_up {
            return Ok(Projection {
                point: x.to_vec(),
                dist: 0.0,
            });
        }
        project_to_barrier(x, self.r_up, self.delta)
    }

    fn lambda_sqrt_h(&self, _k: usize, _t: f64, h: f64) -> f64 {
        (self.n as f64).sqrt() * self.max_rise(h)
    }

    fn contains(&self, _t: f64, x: &[f64]) -> bool {
        let rates: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        swap_rate(&rates, self.delta) <= self.r_up * (1.0 + 1e-12)
    }
}

/// Payoff at `T_0` per unit `P(0,T_0)`: `δ (R - K)₊ Σ_{j=1}^{N} P(T_0, T_j)`.
pub fn swaption_payoff(rates: &[f64], strike: f64, delta: f64) -> f64 {
    let r = swap_rate(rates, delta);
    delta * (r - strike).max(0.0) * bond_sum(rates, delta)
}

pub fn price_swaption_mc(
    model: &LmmModel,
    spec: &SwaptionSpec,
    algorithm: Algorithm,
    h: f64,
    n_paths: u64,
    seed: u64,
) -> Result<MCResult> {
    spec.validate()?;
    let grid = TimeGrid::with_step(0.0, model.tenor.start(), h)?;
    let system = LogLiborSystem::new(model, 0);
    let domain = SwaptionDomain::new(model, spec);
    let x0 = model.curve.log_rates();
    let discount = model.initial_discount(0);
    let delta = model.tenor.delta();
    simulate_paths(n_paths, seed, |stream| {
        let out = run_walk(algorithm, &system, &domain, &grid, &x0, stream)?;
        let value = if out.hit_boundary {
            0.0
        } else {
            let rates: Vec<f64> = out.x_stop.iter().map(|v| v.exp()).collect();
            discount * swaption_payoff(&rates, spec.strike, delta)
        };
        Ok(PathSample {
            value,
            exit_time: out.t_stop,
        })
    })
}
