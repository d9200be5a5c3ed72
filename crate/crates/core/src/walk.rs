//! Random walks for diffusions stopped at the boundary of a space domain `G`.
//!
//! Far from the boundary both algorithms take weak Euler steps. When the chain
//! enters the boundary zone `S_{t,h}` (the set of points from which some
//! realization of the next Euler step leaves `Ḡ`):
//!
//! * [`Algorithm::Order1`] flips a coin: with probability
//!   `p = λ√h / (dist + λ√h)` the chain stops on the projection `x^π`,
//!   otherwise it is kicked a distance `λ√h` along the inward normal and the
//!   Euler step is taken from there. The two-point law reproduces linear
//!   interpolation between `x^π` and the kicked point.
//! * [`Algorithm::OrderHalf`] stops on the projection as soon as the zone is
//!   entered.
//!
//! All geometry lives behind [`DomainOracle`], so the engine is product-agnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::sde::{advance, Coefficients, SdeSystem, SystemState, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Auxiliary coin step near the boundary; weak order one.
    Order1,
    /// Stop on first zone entry; weak order one half.
    OrderHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuxiliaryStep {
    /// Stop the chain at `point`. `marker` is a product-defined tag, e.g. the
    /// index of the barrier that was hit.
    Stop { point: Vec<f64>, marker: Option<usize> },
    /// Stay on the time layer and continue from `point`.
    Continue { point: Vec<f64> },
}

/// Probability of stopping on the projection for a point at distance `dist`
/// from the boundary, displaced along the normal.
pub fn boundary_stop_probability(dist: f64, lam_sqrt_h: f64) -> Result<f64> {
    if !(lam_sqrt_h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "λ√h must be positive, got {lam_sqrt_h}"
        )));
    }
    if !(dist >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distance to the boundary must be non-negative, got {dist}"
        )));
    }
    Ok(lam_sqrt_h / (dist + lam_sqrt_h))
}

/// `x + λ√h (x - x^π) / |x - x^π|`, the point reached by moving away from the
/// projection. Returns `x` unchanged when `x` sits on the boundary.
pub fn kick_away_from_projection(x: &[f64], proj: &Projection, lam_sqrt_h: f64) -> Vec<f64> {
    if proj.dist == 0.0 {
        return x.to_vec();
    }
    x.iter()
        .zip(&proj.point)
        .map(|(xi, pi)| xi + lam_sqrt_h * (xi - pi) / proj.dist)
        .collect()
}

pub trait DomainOracle {
    /// Whether `x` on layer `t_k` belongs to the boundary zone `S_{t_k,h}`.
    fn in_boundary_zone(&self, k: usize, t: f64, x: &[f64], h: f64) -> bool;

    /// Projection of `x` on `∂G` and the distance to it. Points outside `Ḡ`
    /// report distance zero.
    fn project(&self, x: &[f64]) -> Result<Projection>;

    /// Inward kick length `λ√h` on layer `t_k`.
    fn lambda_sqrt_h(&self, k: usize, t: f64, h: f64) -> f64;

    /// Membership in the closed domain `Ḡ` on layer `t`.
    fn contains(&self, t: f64, x: &[f64]) -> bool;

    fn inward_point(&self, x: &[f64], proj: &Projection, lam_sqrt_h: f64) -> Vec<f64> {
        kick_away_from_projection(x, proj, lam_sqrt_h)
    }

    /// The auxiliary step of the order-one walk. The default is the single
    /// coin between the projection and the inward point; products with
    /// several barriers override it.
    fn auxiliary_step<N: NoiseSource>(
        &self,
        k: usize,
        t: f64,
        x: &[f64],
        h: f64,
        noise: &mut N,
    ) -> Result<AuxiliaryStep> {
        let proj = self.project(x)?;
        let lam = self.lambda_sqrt_h(k, t, h);
        let p = boundary_stop_probability(proj.dist, lam)?;
        if noise.coin(p) {
            Ok(AuxiliaryStep::Stop {
                point: proj.point,
                marker: None,
            })
        } else {
            Ok(AuxiliaryStep::Continue {
                point: self.inward_point(x, &proj, lam),
            })
        }
    }

    /// Invoked when the chain stops on the boundary. Returning `Some(m)` makes
    /// the engine keep simulating, with the barrier ignored, up to grid step `m`.
    fn continuation_horizon(&self, _outcome: &WalkOutcome, _grid: &TimeGrid) -> Option<usize> {
        None
    }
}

/// State reached by simulating past a boundary hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub step: usize,
    pub state: SystemState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome {
    /// Stop step index `ϰ ≤ M`.
    pub kappa: usize,
    pub t_stop: f64,
    pub x_stop: Vec<f64>,
    pub y_stop: f64,
    pub z_stop: f64,
    pub hit_boundary: bool,
    pub marker: Option<usize>,
    pub continuation: Option<Continuation>,
    /// Number of auxiliary steps taken (zone visits).
    pub zone_visits: usize,
    /// Euler steps that landed outside `Ḡ`; zero whenever the oracle's zone is
    /// wide enough.
    pub containment_violations: usize,
}

impl WalkOutcome {
    /// Final state: the continuation end point if there is one, otherwise the
    /// stop state.
    pub fn final_x(&self) -> &[f64] {
        match &self.continuation {
            Some(c) => &c.state.x,
            None => &self.x_stop,
        }
    }
}

/// Runs one chain from `x0` at `grid.t0()` with `Y = 1`, `Z = 0`.
pub fn run_walk<S, O, N>(
    algorithm: Algorithm,
    system: &S,
    oracle: &O,
    grid: &TimeGrid,
    x0: &[f64],
    noise: &mut N,
) -> Result<WalkOutcome>
where
    S: SdeSystem + ?Sized,
    O: DomainOracle,
    N: NoiseSource,
{
    let d = system.dim_x();
    let r = system.dim_w();
    if x0.len() != d {
        return Err(Error::InvalidDimension(format!(
            "initial point has dimension {} but the system expects {d}",
            x0.len()
        )));
    }
    let h = grid.h();
    let m = grid.steps();
    let mut scratch = Coefficients::zeros(d, r);
    let mut xi = vec![0.0; r];
    let mut state = SystemState::start(grid.t0(), x0.to_vec());
    let mut zone_visits = 0;
    let mut violations = 0;

    let mut k = 0;
    loop {
        let t_k = grid.time(k);
        state.t = t_k;
        if oracle.in_boundary_zone(k, t_k, &state.x, h) {
            zone_visits += 1;
            let stop = match algorithm {
                Algorithm::Order1 => {
                    match oracle.auxiliary_step(k, t_k, &state.x, h, noise)? {
                        AuxiliaryStep::Stop { point, marker } => Some((point, marker)),
                        AuxiliaryStep::Continue { point } => {
                            state.x = point;
                            None
                        }
                    }
                }
                Algorithm::OrderHalf => Some((oracle.project(&state.x)?.point, None)),
            };
            if let Some((point, marker)) = stop {
                let mut outcome = WalkOutcome {
                    kappa: k,
                    t_stop: t_k,
                    x_stop: point,
                    y_stop: state.y,
                    z_stop: state.z,
                    hit_boundary: true,
                    marker,
                    continuation: None,
                    zone_visits,
                    containment_violations: violations,
                };
                if let Some(horizon) = oracle.continuation_horizon(&outcome, grid) {
                    outcome.continuation = Some(continue_free(
                        system,
                        &outcome,
                        horizon,
                        grid,
                        noise,
                        &mut scratch,
                        &mut xi,
                    )?);
                }
                return Ok(outcome);
            }
        }

        noise.fill_rademacher(&mut xi);
        advance(system, &mut state, &xi, h, &mut scratch)?;
        k += 1;
        state.t = grid.time(k);
        if !oracle.contains(state.t, &state.x) {
            violations += 1;
        }
        if k == m {
            return Ok(WalkOutcome {
                kappa: m,
                t_stop: state.t,
                x_stop: state.x,
                y_stop: state.y,
                z_stop: state.z,
                hit_boundary: false,
                marker: None,
                continuation: None,
                zone_visits,
                containment_violations: violations,
            });
        }
    }
}

fn continue_free<S, N>(
    system: &S,
    stop: &WalkOutcome,
    horizon: usize,
    grid: &TimeGrid,
    noise: &mut N,
    scratch: &mut Coefficients,
    xi: &mut [f64],
) -> Result<Continuation>
where
    S: SdeSystem + ?Sized,
    N: NoiseSource,
{
    let h = grid.h();
    let mut state = SystemState {
        t: stop.t_stop,
        x: stop.x_stop.clone(),
        y: stop.y_stop,
        z: stop.z_stop,
    };
    let mut k = stop.kappa;
    while k < horizon {
        noise.fill_rademacher(xi);
        advance(system, &mut state, xi, h, scratch)?;
        k += 1;
        state.t = grid.t0() + k as f64 * h;
    }
    Ok(Continuation { step: k, state })
}

pub fn run_walk_order1<S, O, N>(
    system: &S,
    oracle: &O,
    grid: &TimeGrid,
    x0: &[f64],
    noise: &mut N,
) -> Result<WalkOutcome>
where
    S: SdeSystem + ?Sized,
    O: DomainOracle,
    N: NoiseSource,
{
    run_walk(Algorithm::Order1, system, oracle, grid, x0, noise)
}

pub fn run_walk_order_half<S, O, N>(
    system: &S,
    oracle: &O,
    grid: &TimeGrid,
    x0: &[f64],
    noise: &mut N,
) -> Result<WalkOutcome>
where
    S: SdeSystem + ?Sized,
    O: DomainOracle,
    N: NoiseSource,
{
    run_walk(Algorithm::OrderHalf, system, oracle, grid, x0, noise)
}
