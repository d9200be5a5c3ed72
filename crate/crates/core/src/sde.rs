//! Coefficient systems for the `(X, Y, Z)` triple and the weak explicit Euler
//! step with two-point noise.
//!
//! ```text
//! dX = (b - σμ) ds + σ dw
//! dY = c Y ds + μᵀ Y dw
//! dZ = g Y ds + Fᵀ Y dw
//! ```
//!
//! The expectation `E[φ(τ, X(τ)) Y(τ) + Z(τ)]` does not depend on the choice of
//! `μ` and `F`; they are free parameters for variance reduction.

use crate::error::{Error, Result};

/// Coefficient values at one `(t, x)`. `diffusion` is the `d × r` matrix stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub mu: Vec<f64>,
    pub c: f64,
    pub g: f64,
    pub f: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(d: usize, r: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * r],
            mu: vec![0.0; r],
            c: 0.0,
            g: 0.0,
            f: vec![0.0; r],
        }
    }

    fn all_finite(&self) -> bool {
        self.drift.iter().all(|v| v.is_finite())
            && self.diffusion.iter().all(|v| v.is_finite())
            && self.mu.iter().all(|v| v.is_finite())
            && self.f.iter().all(|v| v.is_finite())
            && self.c.is_finite()
            && self.g.is_finite()
    }
}

pub trait SdeSystem {
    fn dim_x(&self) -> usize;
    fn dim_w(&self) -> usize;

    /// Writes every coefficient at `(t, x)` into `out`, which has the shapes
    /// returned by [`Coefficients::zeros`]`(dim_x, dim_w)`. Implementations must
    /// overwrite all fields.
    fn coefficients(&self, t: f64, x: &[f64], out: &mut Coefficients);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: f64,
    pub z: f64,
}

impl SystemState {
    /// Initial state with `y = 1`, `z = 0`.
    pub fn start(t: f64, x: Vec<f64>) -> Self {
        Self { t, x, y: 1.0, z: 0.0 }
    }
}

/// Equidistant grid `t_k = t0 + k h`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    steps: usize,
}

/// Relative slack used when deciding whether a span is an integer number of steps.
const ALIGN_TOL: f64 = 1e-9;

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > t0) || steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t0 < T and M >= 1 (t0={t0}, T={t_end}, M={steps})"
            )));
        }
        Ok(Self { t0, t_end, steps })
    }

    /// Builds the grid for step `h`, failing when `(T - t0) / h` is not integral.
    pub fn with_step(t0: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
        }
        let steps = steps_for(t_end - t0, h, "T - t0")?;
        Self::new(t0, t_end, steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        (self.t_end - self.t0) / self.steps as f64
    }

    /// `t_k`; exact at `k = M`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.h()
        }
    }
}

/// Number of steps of size `h` in `span`, or a misalignment error naming `what`.
pub fn steps_for(span: f64, h: f64, what: &str) -> Result<usize> {
    let ratio = span / h;
    let n = ratio.round();
    if n < 0.0 || (ratio - n).abs() > ALIGN_TOL * n.max(1.0) {
        return Err(Error::GridMisalignment {
            what: what.to_string(),
            span,
            h,
        });
    }
    Ok(n as usize)
}

/// Advances `state` in place by one weak Euler step using the coefficients at
/// the current `(t, x)`. `scratch` must have the system's shapes.
pub fn advance<S: SdeSystem + ?Sized>(
    system: &S,
    state: &mut SystemState,
    xi: &[f64],
    h: f64,
    scratch: &mut Coefficients,
) -> Result<()> {
    let d = system.dim_x();
    let r = system.dim_w();
    debug_assert_eq!(xi.len(), r);
    system.coefficients(state.t, &state.x, scratch);
    if !scratch.all_finite() {
        return Err(Error::NonFinite {
            t: state.t,
            x: state.x.clone(),
        });
    }
    let sqrt_h = h.sqrt();
    let y = state.y;

    let mu_xi: f64 = scratch.mu.iter().zip(xi).map(|(m, e)| m * e).sum();
    let f_xi: f64 = scratch.f.iter().zip(xi).map(|(f, e)| f * e).sum();

    for i in 0..d {
        let row = &scratch.diffusion[i * r..(i + 1) * r];
        let mut sig_mu = 0.0;
        let mut sig_xi = 0.0;
        for j in 0..r {
            sig_mu += row[j] * scratch.mu[j];
            sig_xi += row[j] * xi[j];
        }
        state.x[i] += h * (scratch.drift[i] - sig_mu) + sqrt_h * sig_xi;
    }
    state.z += h * scratch.g * y + sqrt_h * f_xi * y;
    state.y = y + h * scratch.c * y + sqrt_h * mu_xi * y;
    state.t += h;
    Ok(())
}

/// One weak explicit Euler step returning the new state.
pub fn weak_euler_step<S: SdeSystem + ?Sized>(
    system: &S,
    state: &SystemState,
    xi: &[f64],
    h: f64,
) -> Result<SystemState> {
    if xi.len() != system.dim_w() {
        return Err(Error::InvalidDimension(format!(
            "noise has dimension {} but the system expects {}",
            xi.len(),
            system.dim_w()
        )));
    }
    if state.x.len() != system.dim_x() {
        return Err(Error::InvalidDimension(format!(
            "state has dimension {} but the system expects {}",
            state.x.len(),
            system.dim_x()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    let mut scratch = Coefficients::zeros(system.dim_x(), system.dim_w());
    let mut next = state.clone();
    advance(system, &mut next, xi, h, &mut scratch)?;
    Ok(next)
}

/// System with every coefficient supplied as a closure; handy for small
/// experiments and tests.
pub struct FnSystem<F> {
    d: usize,
    r: usize,
    eval: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut Coefficients),
{
    pub fn new(d: usize, r: usize, eval: F) -> Self {
        Self { d, r, eval }
    }
}

impl<F> SdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut Coefficients),
{
    fn dim_x(&self) -> usize {
        self.d
    }

    fn dim_w(&self) -> usize {
        self.r
    }

    fn coefficients(&self, t: f64, x: &[f64], out: &mut Coefficients) {
        (self.eval)(t, x, out)
    }
}
