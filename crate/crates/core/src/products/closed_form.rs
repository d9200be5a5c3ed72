//! Lognormal up-and-out call with zero interest rate.
//!
//! With `x` the underlying, `K` the strike, `H > x` the upper barrier and `v`
//! the total volatility to expiry:
//!
//! ```text
//! V = x [Φ(δ+(x/K)) - Φ(δ+(x/H))] - K [Φ(δ-(x/K)) - Φ(δ-(x/H))]
//!   - H [Φ(δ+(H²/(Kx))) - Φ(δ+(H/x))] + (K x / H) [Φ(δ-(H²/(Kx))) - Φ(δ-(H/x))]
//! δ±(y) = (ln y ± v²/2) / v
//! ```
//!
//! The barrier caplet (after dropping `δ P(t, T_{i+1})`) and the swap-market
//! barrier swaption (per unit annuity) are both this formula.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::standard()
}

#[inline]
fn d_plus(y: f64, v: f64) -> f64 {
    (y.ln() + 0.5 * v * v) / v
}

#[inline]
fn d_minus(y: f64, v: f64) -> f64 {
    (y.ln() - 0.5 * v * v) / v
}

fn check_inputs(x: f64, strike: f64, barrier: f64, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::DegenerateVol(format!("total volatility must be positive, got {v}")));
    }
    if !(x > 0.0 && strike > 0.0 && barrier > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "underlying, strike and barrier must be positive (x={x}, K={strike}, H={barrier})"
        )));
    }
    Ok(())
}

/// Undiscounted up-and-out call value; zero when `x >= H`.
pub fn up_and_out_call(x: f64, strike: f64, barrier: f64, v: f64) -> Result<f64> {
    check_inputs(x, strike, barrier, v)?;
    if x >= barrier || strike >= barrier {
        return Ok(0.0);
    }
    Ok(up_and_out_call_raw(x, strike, barrier, v))
}

/// The formula itself, without the knocked-out and strike-above-barrier
/// conventions. Smooth in `x > 0`.
pub fn up_and_out_call_raw(x: f64, k: f64, h: f64, v: f64) -> f64 {
    let n = std_normal();
    let cdf = |z: f64| n.cdf(z);
    let a = h * h / (k * x);
    let b = h / x;
    x * (cdf(d_plus(x / k, v)) - cdf(d_plus(x / h, v)))
        - k * (cdf(d_minus(x / k, v)) - cdf(d_minus(x / h, v)))
        - h * (cdf(d_plus(a, v)) - cdf(d_plus(b, v)))
        + k * x / h * (cdf(d_minus(a, v)) - cdf(d_minus(b, v)))
}

/// `∂V/∂x` of [`up_and_out_call_raw`].
pub fn up_and_out_call_delta_raw(x: f64, k: f64, h: f64, v: f64) -> f64 {
    let n = std_normal();
    let cdf = |z: f64| n.cdf(z);
    let pdf = |z: f64| n.pdf(z);
    let a = h * h / (k * x);
    let b = h / x;
    // d/dx δ±(x/c) = 1/(v x), d/dx δ±(c/x) = -1/(v x)
    let s = 1.0 / (v * x);
    let t1 = cdf(d_plus(x / k, v)) - cdf(d_plus(x / h, v))
        + x * s * (pdf(d_plus(x / k, v)) - pdf(d_plus(x / h, v)));
    let t2 = -k * s * (pdf(d_minus(x / k, v)) - pdf(d_minus(x / h, v)));
    let t3 = h * s * (pdf(d_plus(a, v)) - pdf(d_plus(b, v)));
    let t4 = k / h * (cdf(d_minus(a, v)) - cdf(d_minus(b, v)))
        - k * x / h * s * (pdf(d_minus(a, v)) - pdf(d_minus(b, v)));
    t1 + t2 + t3 + t4
}

/// Undiscounted Black call value with zero rate.
pub fn black_call(x: f64, strike: f64, v: f64) -> Result<f64> {
    check_inputs(x, strike, 1.0, v)?;
    let n = std_normal();
    Ok(x * n.cdf(d_plus(x / strike, v)) - strike * n.cdf(d_minus(x / strike, v)))
}
