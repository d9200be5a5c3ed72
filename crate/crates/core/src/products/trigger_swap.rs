//! Knock-in trigger swap under the terminal measure `Q^{T_N}`.
//!
//! The first time a monitored rate `L^i` reaches its barrier `H^i`, the holder
//! enters a payer swap starting at the next tenor date `T_ϱ(τ)`. Rates are
//! simulated in log space; after a knock-in the barriers are ignored and the
//! rates are simulated on to `T_ϱ(τ)` to evaluate the swap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{simulate_paths, MCResult, PathSample};
use crate::lmm::{ForwardCurve, LmmModel, TenorStructure, VolModel};
use crate::noise::NoiseSource;
use crate::products::log_libor::LogLiborSystem;
use crate::sde::{steps_for, TimeGrid};
use crate::walk::{
    boundary_stop_probability, run_walk, Algorithm, AuxiliaryStep, DomainOracle, Projection,
    WalkOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSwapSpec {
    pub strike: f64,
    /// `H^0..H^{N-1}`.
    pub barriers: Vec<f64>,
}

impl TriggerSwapSpec {
    pub fn validate(&self, model: &LmmModel) -> Result<()> {
        let n = model.n_rates();
        if self.barriers.len() != n {
            return Err(Error::InvalidParameter(format!(
                "trigger swap needs {n} barriers, got {}",
                self.barriers.len()
            )));
        }
        if let Some((i, h)) = self
            .barriers
            .iter()
            .enumerate()
            .find(|(_, h)| !(h.is_finite() && **h > 0.0))
        {
            return Err(Error::InvalidParameter(format!("barrier H^{i} = {h} must be positive")));
        }
        if !self.strike.is_finite() {
            return Err(Error::InvalidParameter("trigger swap strike must be finite".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(
                "trigger swap needs at least two rates".into(),
            ));
        }
        Ok(())
    }
}

/// Tenor `5..16` yearly, flat 4% curve, 20% volatility, `β = 0.2`.
pub fn reference_model() -> LmmModel {
    let tenor = TenorStructure::from_range(5.0, 16.0, 1.0).expect("valid tenor");
    let curve = ForwardCurve::flat(0.04, tenor.n_rates()).expect("positive curve");
    LmmModel::new(tenor, curve, VolModel::Flat(0.2), 0.2).expect("valid model")
}

/// `K = 1%`, `H^i = 13%`.
pub fn reference_spec(model: &LmmModel) -> TriggerSwapSpec {
    TriggerSwapSpec {
        strike: 0.01,
        barriers: vec![0.13; model.n_rates()],
    }
}

/// Upper barriers on the live rates in log coordinates, with the corner
/// procedure for several simultaneous violations.
#[derive(Debug, Clone)]
pub struct TriggerDomain {
    tenor: TenorStructure,
    ln_barriers: Vec<f64>,
    sigma_max: f64,
}

impl TriggerDomain {
    pub fn new(model: &LmmModel, spec: &TriggerSwapSpec) -> Self {
        let n = model.n_rates();
        Self {
            tenor: model.tenor.clone(),
            ln_barriers: spec.barriers.iter().map(|h| h.ln()).collect(),
            sigma_max: model.vol.max_sigma(0, n),
        }
    }

    /// Rates still to be simulated on `(t, t + h]`.
    fn monitored(&self, t: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.tenor.n_rates()).filter(move |&i| self.tenor.is_live_after(i, t))
    }

    /// `λ_k = σ_Max √(N - ϱ_k)`.
    pub fn lambda(&self, t: f64) -> f64 {
        let n = self.tenor.n_rates();
        self.sigma_max * ((n - self.tenor.alive_from(t).min(n)) as f64).sqrt()
    }

    /// Monitored rates violating `ln L^i < ln H^i - λ√h`, closest first with
    /// ties going to the lower index, as `(i, ln H^i - ln L^i)`.
    pub fn violations(&self, t: f64, x: &[f64], h: f64) -> Vec<(usize, f64)> {
        let lam = self.lambda(t) * h.sqrt();
        let mut v: Vec<(usize, f64)> = self
            .monitored(t)
            .map(|i| (i, self.ln_barriers[i] - x[i]))
            .filter(|&(_, d)| d <= lam)
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }
}

impl DomainOracle for TriggerDomain {
    fn in_boundary_zone(&self, _k: usize, t: f64, x: &[f64], h: f64) -> bool {
        let lam = self.lambda(t) * h.sqrt();
        self.monitored(t).any(|i| x[i] >= self.ln_barriers[i] - lam)
    }

    /// Axis projection onto the nearest barrier. Points already
    /// beyond a barrier are returned unchanged with distance zero.
    fn project(&self, x: &[f64]) -> Result<Projection> {
        let (i, d) = (0..x.len())
            .map(|i| (i, self.ln_barriers[i] - x[i]))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .ok_or_else(|| Error::InvalidDimension("empty state".into()))?;
        let mut point = x.to_vec();
        if d > 0.0 {
            point[i] = self.ln_barriers[i];
        }
        Ok(Projection {
            point,
            dist: d.max(0.0),
        })
    }

    fn lambda_sqrt_h(&self, _k: usize, t: f64, h: f64) -> f64 {
        self.lambda(t) * h.sqrt()
    }

    fn contains(&self, t: f64, x: &[f64]) -> bool {
        let first = self.tenor.alive_from(t);
        (first..self.tenor.n_rates()).all(|i| x[i] <= self.ln_barriers[i] + 1e-12)
    }

    fn auxiliary_step<N: NoiseSource>(
        &self,
        _k: usize,
        t: f64,
        x: &[f64],
        h: f64,
        noise: &mut N,
    ) -> Result<AuxiliaryStep> {
        let lam = self.lambda(t) * h.sqrt();
        let mut point = x.to_vec();
        for (i, dist) in self.violations(t, x, h) {
            if dist <= 0.0 {
                // on or beyond the barrier: knocked in where it stands
                return Ok(AuxiliaryStep::Stop {
                    point,
                    marker: Some(i),
                });
            }
            let p = boundary_stop_probability(dist, lam)?;
            if noise.coin(p) {
                point[i] = self.ln_barriers[i];
                return Ok(AuxiliaryStep::Stop {
                    point,
                    marker: Some(i),
                });
            }
            point[i] -= lam;
        }
        Ok(AuxiliaryStep::Continue { point })
    }

    fn continuation_horizon(&self, outcome: &WalkOutcome, grid: &TimeGrid) -> Option<usize> {
        let rho = self.tenor.alive_from(outcome.t_stop);
        let start = self.tenor.date(rho.min(self.tenor.n_rates() - 1));
        let steps = ((start - grid.t0()) / grid.h()).round() as usize;
        Some(steps.max(outcome.kappa))
    }
}

/// Swap value at `T_ϱ` per unit `P(0, T_N)`:
/// `Π_{j≥ϱ}(1+δL^j) - Kδ Σ_{i=ϱ+1}^{N} Π_{j=i}^{N-1}(1+δL^j) - 1`.
pub fn swap_payoff_terminal(rates: &[f64], first: usize, strike: f64, delta: f64) -> f64 {
    let n = rates.len();
    let mut prod = 1.0;
    let mut fixed = 0.0;
    for i in (first + 1..=n).rev() {
        fixed += prod;
        prod *= 1.0 + delta * rates[i - 1];
    }
    prod - strike * delta * fixed - 1.0
}

/// `P(0,T_0) - P(0,T_N) - Kδ Σ_{i=1}^{N} P(0,T_i)`: the trigger swap when the
/// knock-in is certain.
pub fn forward_swap_value(model: &LmmModel, strike: f64) -> f64 {
    let n = model.n_rates();
    let delta = model.tenor.delta();
    let fixed: f64 = (1..=n).map(|i| model.initial_discount(i)).sum();
    model.initial_discount(0) - model.initial_discount(n) - strike * delta * fixed
}

pub fn price_trigger_swap_mc(
    model: &LmmModel,
    spec: &TriggerSwapSpec,
    algorithm: Algorithm,
    h: f64,
    n_paths: u64,
    seed: u64,
) -> Result<MCResult> {
    spec.validate(model)?;
    let n = model.n_rates();
    for i in 0..n {
        steps_for(model.tenor.date(i), h, &format!("T_{i}"))?;
    }
    let horizon = model.tenor.date(n - 1);
    let grid = TimeGrid::with_step(0.0, horizon, h)?;
    let system = LogLiborSystem::new(model, n);
    let domain = TriggerDomain::new(model, spec);
    let x0 = model.curve.log_rates();
    let discount = model.initial_discount(n);
    let delta = model.tenor.delta();
    simulate_paths(n_paths, seed, |stream| {
        let out = run_walk(algorithm, &system, &domain, &grid, &x0, stream)?;
        let value = if out.hit_boundary && out.kappa < grid.steps() {
            let rates: Vec<f64> = out.final_x().iter().map(|v| v.exp()).collect();
            let first = model.tenor.alive_from(out.t_stop);
            discount * swap_payoff_terminal(&rates, first, spec.strike, delta)
        } else {
            0.0
        };
        Ok(PathSample {
            value,
            exit_time: out.t_stop,
        })
    })
}
