//! Euclidean projection of a log-LIBOR point onto the swap-rate level set
//! `{ℓ : R_swap(exp ℓ) = R_up}`.
//!
//! `ln L^0` is eliminated through the constraint:
//!
//! ```text
//! L^0 = ((R δ B + 1) / A - 1) / δ,  A = Π_{j=1}^{N-1} a_j,
//! B = 1 + Σ_{i=0}^{N-2} Π_{j=i+1}^{N-1} a_j,  a_j = 1 + δ L^j
//! ```
//!
//! and the squared distance is minimized over `ln L^1..ln L^{N-1}` by BFGS
//! with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lmm::swap_rate;
use crate::walk::Projection;

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-12;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

struct Surface<'a> {
    x: &'a [f64],
    r_up: f64,
    delta: f64,
}

impl Surface<'_> {
    /// `Q = (RδB + 1)/A` and `∂Q/∂a_j` for `j = 1..N-1` (written to `dq[j-1]`).
    fn q_and_grad(&self, a: &[f64], dq: Option<&mut [f64]>) -> f64 {
        let n = a.len() + 1;
        // tail[i] = Π_{m=i}^{N-1} a_m for i = 1..N-1, stored at i-1; tail[N] = 1
        let mut tail = vec![1.0; n];
        for i in (1..n).rev() {
            tail[i - 1] = tail[i] * a[i - 1];
        }
        let big_a = tail[0];
        let big_b = 1.0 + tail[..n - 1].iter().sum::<f64>();
        let rd = self.r_up * self.delta;
        let q = (rd * big_b + 1.0) / big_a;
        if let Some(dq) = dq {
            let mut partial = 0.0;
            for j in 1..n {
                partial += tail[j - 1];
                let db = partial / a[j - 1];
                dq[j - 1] = rd * db / big_a - q / a[j - 1];
            }
        }
        q
    }

    /// `ln L^0(y)`, or `None` where the surface leaves the positive orthant.
    fn ln_l0(&self, y: &[f64]) -> Option<f64> {
        let a: Vec<f64> = y.iter().map(|v| 1.0 + self.delta * v.exp()).collect();
        let q = self.q_and_grad(&a, None);
        (q > 1.0).then(|| ((q - 1.0) / self.delta).ln())
    }

    fn objective(&self, y: &[f64]) -> Option<f64> {
        let l0 = self.ln_l0(y)?;
        let mut f = (l0 - self.x[0]).powi(2);
        for (yj, xj) in y.iter().zip(&self.x[1..]) {
            f += (yj - xj).powi(2);
        }
        f.is_finite().then_some(f)
    }

    fn gradient(&self, y: &[f64]) -> Option<(f64, DVector<f64>)> {
        let m = y.len();
        let l: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let a: Vec<f64> = l.iter().map(|v| 1.0 + self.delta * v).collect();
        let mut dq = vec![0.0; m];
        let q = self.q_and_grad(&a, Some(&mut dq));
        if !(q > 1.0) {
            return None;
        }
        let l0 = (q - 1.0) / self.delta;
        let r0 = l0.ln() - self.x[0];
        let mut f = r0 * r0;
        let mut g = DVector::zeros(m);
        for j in 0..m {
            let d = y[j] - self.x[j + 1];
            f += d * d;
            // ∂ ln L^0 / ∂y_j = ∂Q/∂a_j · δ L^j / (δ L^0)
            g[j] = 2.0 * r0 * dq[j] * l[j] / l0 + 2.0 * d;
        }
        Some((f, g))
    }

    fn point(&self, y: &[f64]) -> Option<Vec<f64>> {
        let mut p = Vec::with_capacity(y.len() + 1);
        p.push(self.ln_l0(y)?);
        p.extend_from_slice(y);
        Some(p)
    }
}

/// BFGS from `y0`; `None` if it does not converge within [`MAX_ITERATIONS`].
fn minimize(s: &Surface, y0: Vec<f64>) -> Option<Vec<f64>> {
    let m = y0.len();
    let mut y = DVector::from_vec(y0);
    let (mut f, mut g) = s.gradient(y.as_slice())?;
    let mut hinv = DMatrix::<f64>::identity(m, m);
    for _ in 0..MAX_ITERATIONS {
        if g.amax() < 1e-15 {
            return Some(y.as_slice().to_vec());
        }
        let mut d = -(&hinv * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            hinv.fill_with_identity();
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &y + alpha * &d;
            if let Some(ft) = s.objective(trial.as_slice()) {
                if ft <= f + 1e-4 * alpha * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let y_new = accepted?;
        let step = &y_new - &y;
        let (f_new, g_new) = s.gradient(y_new.as_slice())?;
        let yv = &g_new - &g;
        let sy = step.dot(&yv);
        y = y_new;
        f = f_new;
        g = g_new;
        if step.amax() < STEP_TOLERANCE {
            return Some(y.as_slice().to_vec());
        }
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &hinv * &yv;
            let yhy = yv.dot(&hy);
            // H ← H - ρ(s (Hy)ᵀ + (Hy) sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            hinv -= rho * (&step * hy.transpose() + &hy * step.transpose());
            hinv += (rho * rho * yhy + rho) * (&step * step.transpose());
        }
    }
    None
}

/// Nearest point of the barrier surface to `ln_l` (a point with
/// `R_swap < R_up`), and its distance.
///
/// Starts from the current point; if that fails, restarts from the flat point
/// `ln R_up (1, …, 1)`, which lies on the surface.
pub fn project_to_barrier(ln_l: &[f64], r_up: f64, delta: f64) -> Result<Projection> {
    let n = ln_l.len();
    if n == 0 {
        return Err(Error::InvalidDimension("projection of an empty point".into()));
    }
    if !(r_up > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection needs R_up > 0 and δ > 0 (R_up={r_up}, δ={delta})"
        )));
    }
    let s = Surface {
        x: ln_l,
        r_up,
        delta,
    };
    let point = if n == 1 {
        Some(vec![r_up.ln()])
    } else {
        minimize(&s, ln_l[1..].to_vec())
            .or_else(|| minimize(&s, vec![r_up.ln(); n - 1]))
            .and_then(|y| s.point(&y))
    };
    let point = point.ok_or(Error::ProjectionFailure {
        iterations: MAX_ITERATIONS,
    })?;
    let rates: Vec<f64> = point.iter().map(|v| v.exp()).collect();
    let residual = (swap_rate(&rates, delta).ln() - r_up.ln()).abs();
    if !(residual < RESIDUAL_TOLERANCE) {
        return Err(Error::ProjectionFailure {
            iterations: MAX_ITERATIONS,
        });
    }
    let dist = point
        .iter()
        .zip(ln_l)
        .map(|(p, x)| (p - x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Projection { point, dist })
}
