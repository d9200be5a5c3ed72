#![allow(dead_code)]

use lmm_barrier::lmm::swap_rate;
use lmm_barrier::noise::{open_stream, NoiseSource, SeedSpec};
use lmm_barrier::products::caplet::{caplet_payoff, CapletDomain, CapletSpec, CapletSystem};
use lmm_barrier::products::closed_form::up_and_out_call_delta_raw;
use lmm_barrier::products::swaption::{self, SwaptionDomain, SwaptionSpec};
use lmm_barrier::sde::TimeGrid;
use lmm_barrier::walk::{run_walk, Algorithm, DomainOracle};

/// Replays a fixed prefix of binary decisions, then takes `false` for every
/// further decision, recording the probability of `true` at each one.
struct Explorer {
    prefix: Vec<bool>,
    taken: Vec<bool>,
    p_true: Vec<f64>,
}

impl Explorer {
    fn decide(&mut self, p: f64) -> bool {
        let c = self.prefix.get(self.taken.len()).copied().unwrap_or(false);
        self.taken.push(c);
        self.p_true.push(p);
        c
    }

    fn weight(&self) -> f64 {
        self.taken
            .iter()
            .zip(&self.p_true)
            .map(|(&c, &p)| if c { p } else { 1.0 - p })
            .product()
    }
}

impl NoiseSource for Explorer {
    fn fill_rademacher(&mut self, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = if self.decide(0.5) { 1.0 } else { -1.0 };
        }
    }

    fn coin(&mut self, p: f64) -> bool {
        self.decide(p)
    }
}

/// Exact expectation of the walk payoff, summed over every leaf of the
/// outcome tree. Also returns the number of leaves.
pub fn caplet_tree_expectation(
    spec: &CapletSpec,
    algorithm: Algorithm,
    h: f64,
    optimal_f: bool,
) -> (f64, usize) {
    let grid = TimeGrid::with_step(0.0, spec.expiry, h).unwrap();
    let system = CapletSystem {
        spec: *spec,
        optimal_f,
    };
    let domain = CapletDomain::new(spec);
    let x0 = [spec.initial_rate.ln()];
    let mut prefix = Vec::new();
    let mut total = 0.0;
    let mut leaves = 0;
    loop {
        let mut ex = Explorer {
            prefix: prefix.clone(),
            taken: Vec::new(),
            p_true: Vec::new(),
        };
        let out = run_walk(algorithm, &system, &domain, &grid, &x0, &mut ex).unwrap();
        let v = caplet_payoff(spec, out.hit_boundary, out.x_stop[0], out.y_stop, out.z_stop);
        total += ex.weight() * v;
        leaves += 1;
        match ex.taken.iter().rposition(|&c| !c) {
            Some(j) => {
                prefix = ex.taken[..j].to_vec();
                prefix.push(true);
            }
            None => break,
        }
    }
    (total, leaves)
}

/// Backward recursion over the binomial Euler lattice of `ln L`, applying the
/// boundary rule at each node before the step.
pub fn caplet_dp_expectation(spec: &CapletSpec, algorithm: Algorithm, h: f64, optimal_f: bool) -> f64 {
    let m = (spec.expiry / h).round() as usize;
    dp(spec, algorithm, h, optimal_f, m, 0, spec.initial_rate.ln(), 0.0)
}

#[allow(clippy::too_many_arguments)]
fn dp(spec: &CapletSpec, algo: Algorithm, h: f64, opt: bool, m: usize, k: usize, x: f64, z: f64) -> f64 {
    let s = spec.sigma;
    let lnh = spec.barrier.ln();
    if k == m {
        return (x.exp() - spec.strike).max(0.0) + z;
    }
    let lam = s * h.sqrt() - 0.5 * s * s * h;
    let zone = x >= lnh + 0.5 * s * s * h - s * h.sqrt();
    if zone {
        match algo {
            // hitting knocks the caplet out, so only Z survives
            Algorithm::OrderHalf => return z,
            Algorithm::Order1 => {
                let dist = (lnh - x).max(0.0);
                let p = lam / (dist + lam);
                let rest = if p < 1.0 {
                    euler(spec, algo, h, opt, m, k, x - lam, z)
                } else {
                    0.0
                };
                return p * z + (1.0 - p) * rest;
            }
        }
    }
    euler(spec, algo, h, opt, m, k, x, z)
}

#[allow(clippy::too_many_arguments)]
fn euler(spec: &CapletSpec, algo: Algorithm, h: f64, opt: bool, m: usize, k: usize, x: f64, z: f64) -> f64 {
    let s = spec.sigma;
    let t = k as f64 * h;
    let f = if opt {
        let l = x.exp();
        -s * l * up_and_out_call_delta_raw(l, spec.strike, spec.barrier, spec.remaining_vol(t))
    } else {
        0.0
    };
    let a = x - 0.5 * s * s * h;
    let dz = h.sqrt() * f;
    0.5 * dp(spec, algo, h, opt, m, k + 1, a + s * h.sqrt(), z + dz)
        + 0.5 * dp(spec, algo, h, opt, m, k + 1, a - s * h.sqrt(), z - dz)
}

/// Short, volatile caplets whose three-step lattices reach the boundary zone.
pub fn small_caplets() -> Vec<(CapletSpec, f64)> {
    let base = CapletSpec {
        rate_index: 0,
        expiry: 0.3,
        strike: 0.15,
        barrier: 0.3,
        sigma: 0.6,
        initial_rate: 0.25,
    };
    vec![
        (base, 0.1),
        (CapletSpec { initial_rate: 0.27, ..base }, 0.1),
        (CapletSpec { initial_rate: 0.29, ..base }, 0.1),
        (CapletSpec { expiry: 0.2, sigma: 0.9, ..base }, 0.1),
        (CapletSpec { expiry: 0.1, initial_rate: 0.2, ..base }, 0.1),
    ]
}

/// Largest disagreement between tree and recursion over the small cases,
/// both algorithms and both control choices, plus the total leaf count.
pub fn tree_vs_dp_max_error() -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut leaves = 0;
    for (spec, h) in small_caplets() {
        for algo in [Algorithm::Order1, Algorithm::OrderHalf] {
            for opt in [false, true] {
                let (tree, n) = caplet_tree_expectation(&spec, algo, h, opt);
                let dp = caplet_dp_expectation(&spec, algo, h, opt);
                worst = worst.max((tree - dp).abs());
                leaves += n;
            }
        }
    }
    (worst, leaves)
}

/// Residuals of the projection over `n` zone points of the reference swaption
/// drawn from a fixed stream.
pub fn swaption_zone_residuals(n: usize) -> (f64, usize) {
    let m = swaption::reference_model();
    let spec: SwaptionSpec = swaption::reference_spec();
    let dom = SwaptionDomain::new(&m, &spec);
    let h = 0.25;
    let mut s = open_stream(SeedSpec::new(77, 0));
    let mut worst: f64 = 0.0;
    let mut found = 0;
    while found < n {
        let x: Vec<f64> = (0..m.n_rates())
            .map(|_| spec.r_up.ln() - 0.25 * s.next_uniform() + 0.02)
            .collect();
        let rates: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        if !(dom.in_boundary_zone(0, 0.0, &x, h) && swap_rate(&rates, 1.0) < spec.r_up) {
            continue;
        }
        let p = dom.project(&x).unwrap();
        let on: Vec<f64> = p.point.iter().map(|v| v.exp()).collect();
        worst = worst.max((swap_rate(&on, 1.0).ln() - spec.r_up.ln()).abs());
        found += 1;
    }
    (worst, found)
}
