//! Up-and-out barrier caplet on a single LIBOR rate under its own forward
//! measure, where `L^i` is a driftless lognormal martingale.
//!
//! The state is `x = ln L`. Prices are undiscounted, i.e. divided by
//! `δ P(0, T_{i+1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{simulate_paths, MCResult, PathSample};
use crate::products::closed_form::{up_and_out_call, up_and_out_call_delta_raw};
use crate::sde::{Coefficients, SdeSystem, TimeGrid};
use crate::walk::{run_walk, Algorithm, DomainOracle, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapletSpec {
    pub rate_index: usize,
    /// Fixing date `T_i`.
    pub expiry: f64,
    pub strike: f64,
    /// Upper barrier `H`.
    pub barrier: f64,
    pub sigma: f64,
    /// `L^i(0)`.
    pub initial_rate: f64,
}

impl CapletSpec {
    /// `i = 9`, `T_9 = 9`, `K = 1%`, `H = 28%`, `σ = 25%`, `L^9(0) = 13%`.
    pub fn reference() -> Self {
        Self {
            rate_index: 9,
            expiry: 9.0,
            strike: 0.01,
            barrier: 0.28,
            sigma: 0.25,
            initial_rate: 0.13,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "caplet expiry must be positive, got {}",
                self.expiry
            )));
        }
        if !(self.strike > 0.0 && self.barrier > 0.0 && self.initial_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "caplet needs K > 0, H > 0 and L(0) > 0 (K={}, H={}, L={})",
                self.strike, self.barrier, self.initial_rate
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "caplet volatility must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Remaining total volatility `σ √(T_i - t)`.
    pub fn remaining_vol(&self, t: f64) -> f64 {
        self.sigma * (self.expiry - t).max(0.0).sqrt()
    }
}

/// Undiscounted closed-form price at time zero from `L^i(0) = l0`.
pub fn caplet_closed_form(spec: &CapletSpec, l0: f64) -> Result<f64> {
    up_and_out_call(l0, spec.strike, spec.barrier, spec.remaining_vol(0.0))
}

/// `∂Ṽ/∂L` at time `t`, using the remaining variance `σ²(T_i - t)`.
pub fn caplet_delta(spec: &CapletSpec, t: f64, l: f64) -> Result<f64> {
    if !(l > 0.0 && l < spec.barrier) {
        return Err(Error::Domain(format!(
            "caplet delta needs 0 < L < H = {}, got L = {l}",
            spec.barrier
        )));
    }
    let v = spec.remaining_vol(t);
    if !(v > 0.0) {
        return Err(Error::DegenerateVol(format!(
            "no variance left at t = {t} (σ = {}, T = {})",
            spec.sigma, spec.expiry
        )));
    }
    Ok(up_and_out_call_delta_raw(l, spec.strike, spec.barrier, v))
}

/// `d ln L = -σ²/2 dt + σ dW`, `dZ = F dW`.
#[derive(Debug, Clone, Copy)]
pub struct CapletSystem {
    pub spec: CapletSpec,
    /// Use `F = -σ L ∂Ṽ/∂L`; otherwise `F = 0`.
    pub optimal_f: bool,
}

impl SdeSystem for CapletSystem {
    fn dim_x(&self) -> usize {
        1
    }

    fn dim_w(&self) -> usize {
        1
    }

    fn coefficients(&self, t: f64, x: &[f64], out: &mut Coefficients) {
        let s = self.spec.sigma;
        out.drift[0] = -0.5 * s * s;
        out.diffusion[0] = s;
        out.mu[0] = 0.0;
        out.c = 0.0;
        out.g = 0.0;
        out.f[0] = if self.optimal_f {
            // The formula extends smoothly past H, so no domain check here.
            let l = x[0].exp();
            let v = self.spec.remaining_vol(t);
            -s * l * up_and_out_call_delta_raw(l, self.spec.strike, self.spec.barrier, v)
        } else {
            0.0
        };
    }
}

/// Half-line `ln L < ln H`.
#[derive(Debug, Clone, Copy)]
pub struct CapletDomain {
    pub ln_barrier: f64,
    pub sigma: f64,
}

impl CapletDomain {
    pub fn new(spec: &CapletSpec) -> Self {
        Self {
            ln_barrier: spec.barrier.ln(),
            sigma: spec.sigma,
        }
    }
}

impl DomainOracle for CapletDomain {
    fn in_boundary_zone(&self, _k: usize, _t: f64, x: &[f64], h: f64) -> bool {
        let s = self.sigma;
        // the upper Euler outcome x - σ²h/2 + σ√h reaches ln H
        x[0] >= self.ln_barrier + 0.5 * s * s * h - s * h.sqrt()
    }

    fn project(&self, x: &[f64]) -> Result<Projection> {
        Ok(Projection {
            point: vec![self.ln_barrier],
            dist: (self.ln_barrier - x[0]).max(0.0),
        })
    }

    fn lambda_sqrt_h(&self, _k: usize, _t: f64, h: f64) -> f64 {
        let s = self.sigma;
        s * h.sqrt() - 0.5 * s * s * h
    }

    fn contains(&self, _t: f64, x: &[f64]) -> bool {
        x[0] <= self.ln_barrier + 1e-12
    }
}

/// Payoff weight of one walk: `(L_M - K)₊` on survival, `0` on a hit, plus `Z`.
pub fn caplet_payoff(spec: &CapletSpec, hit: bool, x_stop: f64, y: f64, z: f64) -> f64 {
    let phi = if hit {
        0.0
    } else {
        (x_stop.exp() - spec.strike).max(0.0)
    };
    phi * y + z
}

/// Monte Carlo price (undiscounted) with step `h`.
pub fn price_caplet_mc(
    spec: &CapletSpec,
    algorithm: Algorithm,
    h: f64,
    n_paths: u64,
    optimal_f: bool,
    seed: u64,
) -> Result<MCResult> {
    spec.validate()?;
    if !(spec.sigma > 0.0) {
        return Err(Error::DegenerateVol("caplet simulation needs σ > 0".into()));
    }
    let grid = TimeGrid::with_step(0.0, spec.expiry, h)?;
    if !(spec.sigma * h.sqrt() < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} too large for σ = {}: inward kick would be non-positive",
            spec.sigma
        )));
    }
    let system = CapletSystem {
        spec: *spec,
        optimal_f,
    };
    let domain = CapletDomain::new(spec);
    let x0 = [spec.initial_rate.ln()];
    simulate_paths(n_paths, seed, |stream| {
        let out = run_walk(algorithm, &system, &domain, &grid, &x0, stream)?;
        Ok(PathSample {
            value: caplet_payoff(spec, out.hit_boundary, out.x_stop[0], out.y_stop, out.z_stop),
            exit_time: out.t_stop,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::products::closed_form::black_call;

    #[test]
    fn closed_form_reference_value() {
        let v = caplet_closed_form(&CapletSpec::reference(), 0.13).unwrap();
        assert!((v - 0.065_713_451_9).abs() < 1e-9, "{v}");
    }

    #[test]
    fn huge_barrier_is_black() {
        let spec = CapletSpec {
            barrier: 1e6,
            ..CapletSpec::reference()
        };
        let v = caplet_closed_form(&spec, 0.13).unwrap();
        let b = black_call(0.13, 0.01, 0.25 * 3.0).unwrap();
        assert!(((v - b) / b).abs() < 1e-8);
    }

    #[test]
    fn knocked_out_and_degenerate() {
        let spec = CapletSpec::reference();
        assert_eq!(caplet_closed_form(&spec, 0.28).unwrap(), 0.0);
        assert_eq!(caplet_closed_form(&spec, 0.5).unwrap(), 0.0);
        let flat = CapletSpec {
            sigma: 0.0,
            ..spec
        };
        assert!(matches!(caplet_closed_form(&flat, 0.13), Err(Error::DegenerateVol(_))));
    }

    #[test]
    fn delta_finite_difference() {
        let spec = CapletSpec::reference();
        for &(t, l) in &[(0.0, 0.13), (4.5, 0.05), (8.0, 0.2), (8.9, 0.27)] {
            let v = |x: f64| {
                crate::products::closed_form::up_and_out_call_raw(
                    x,
                    spec.strike,
                    spec.barrier,
                    spec.remaining_vol(t),
                )
            };
            let e = 1e-6 * l;
            let fd = (v(l + e) - v(l - e)) / (2.0 * e);
            let d = caplet_delta(&spec, t, l).unwrap();
            assert!((fd - d).abs() < 1e-6, "t={t} L={l}: {fd} vs {d}");
        }
    }

    #[test]
    fn delta_vanishes_far_out_of_the_money() {
        let spec = CapletSpec {
            barrier: 1e6,
            ..CapletSpec::reference()
        };
        let d = caplet_delta(&spec, 0.0, 1e-5).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn delta_one_sided_limit_at_barrier() {
        let spec = CapletSpec::reference();
        let v = spec.remaining_vol(0.0);
        let limit = up_and_out_call_delta_raw(spec.barrier, spec.strike, spec.barrier, v);
        assert!(limit.is_finite() && limit < 0.0);
        let near = caplet_delta(&spec, 0.0, spec.barrier * (1.0 - 1e-9)).unwrap();
        assert!((near - limit).abs() < 1e-6);
        // backward difference from the knocked-out value 0 at H
        let e = 1e-7;
        let fd = (0.0 - caplet_closed_form(&spec, spec.barrier - e).unwrap()) / e;
        assert!((fd - limit).abs() < 1e-4 * limit.abs(), "{fd} vs {limit}");
        assert!(caplet_delta(&spec, 0.0, spec.barrier).is_err());
        assert!(caplet_delta(&spec, 0.0, 0.0).is_err());
    }

    #[test]
    fn zone_and_kick() {
        let spec = CapletSpec::reference();
        let dom = CapletDomain::new(&spec);
        let h = 0.01;
        let lam = dom.lambda_sqrt_h(0, 0.0, h);
        // a zone point kicked inward leaves the zone
        let x = [dom.ln_barrier - 0.5 * lam];
        assert!(dom.in_boundary_zone(0, 0.0, &x, h));
        let p = dom.project(&x).unwrap();
        let inner = dom.inward_point(&x, &p, lam);
        assert!((inner[0] - (x[0] - lam)).abs() < 1e-15);
        assert!(!dom.in_boundary_zone(0, 0.0, &inner, h));
        // the zone edge is exactly one upward Euler step from ln H
        let edge = [dom.ln_barrier - lam];
        assert!(dom.in_boundary_zone(0, 0.0, &edge, h));
    }

    #[test]
    fn grid_misalignment_rejected() {
        let spec = CapletSpec::reference();
        let r = price_caplet_mc(&spec, Algorithm::Order1, 0.4, 10, false, 0);
        assert!(matches!(r, Err(Error::GridMisalignment { .. })));
    }

    #[test]
    fn strike_above_barrier_pays_nothing() {
        let spec = CapletSpec {
            strike: 0.3,
            ..CapletSpec::reference()
        };
        let r = price_caplet_mc(&spec, Algorithm::Order1, 0.1, 2000, false, 5).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn knocked_out_at_inception() {
        let spec = CapletSpec {
            initial_rate: 0.3,
            ..CapletSpec::reference()
        };
        let r = price_caplet_mc(&spec, Algorithm::Order1, 0.1, 100, false, 5).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.mean_exit_time, 0.0);
    }
}
