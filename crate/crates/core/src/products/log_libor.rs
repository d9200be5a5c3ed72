//! Weak Euler system for the vector of log-LIBOR rates under the forward
//! measure with numeraire `P(t, T_n)`.
//!
//! Rate `i` is simulated on `(t, t + h]` while `T_i > t`; afterwards it is
//! frozen at its fixing value.

use crate::lmm::LmmModel;
use crate::sde::{Coefficients, SdeSystem};

const TIME_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LogLiborSystem {
    n: usize,
    numeraire: usize,
    delta: f64,
    dates: Vec<f64>,
    sigma: Vec<f64>,
    /// `ρ`, row-major.
    rho: Vec<f64>,
    /// `σ_i U_ij`, row-major.
    vol_root: Vec<f64>,
}

impl LogLiborSystem {
    pub fn new(model: &LmmModel, numeraire: usize) -> Self {
        let n = model.n_rates();
        assert!(numeraire <= n, "numeraire index {numeraire} above N = {n}");
        let sigma: Vec<f64> = (0..n).map(|i| model.vol.sigma(i, 0.0)).collect();
        let rho = model.corr.rho();
        let root = model.corr.root();
        let mut rho_rm = vec![0.0; n * n];
        let mut vol_root = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rho_rm[i * n + j] = rho[(i, j)];
                vol_root[i * n + j] = sigma[i] * root[(i, j)];
            }
        }
        Self {
            n,
            numeraire,
            delta: model.tenor.delta(),
            dates: model.tenor.dates().to_vec(),
            sigma,
            rho: rho_rm,
            vol_root,
        }
    }

    pub fn numeraire(&self) -> usize {
        self.numeraire
    }
}

impl SdeSystem for LogLiborSystem {
    fn dim_x(&self) -> usize {
        self.n
    }

    fn dim_w(&self) -> usize {
        self.n
    }

    fn coefficients(&self, t: f64, x: &[f64], out: &mut Coefficients) {
        let n = self.n;
        let nu = self.numeraire;
        // a_j = δL^j/(1+δL^j) σ_j
        let a: Vec<f64> = (0..n)
            .map(|j| {
                let dl = self.delta * x[j].exp();
                dl / (1.0 + dl) * self.sigma[j]
            })
            .collect();
        for i in 0..n {
            let row = &mut out.diffusion[i * n..(i + 1) * n];
            if self.dates[i] <= t + TIME_EPS {
                out.drift[i] = 0.0;
                row.fill(0.0);
                continue;
            }
            let rho_i = &self.rho[i * n..(i + 1) * n];
            let s: f64 = if i >= nu {
                (nu..=i).map(|j| rho_i[j] * a[j]).sum()
            } else {
                -(i + 1..nu).map(|j| rho_i[j] * a[j]).sum::<f64>()
            };
            let si = self.sigma[i];
            out.drift[i] = si * s - 0.5 * si * si;
            row.copy_from_slice(&self.vol_root[i * n..(i + 1) * n]);
        }
        out.mu.fill(0.0);
        out.c = 0.0;
        out.g = 0.0;
        out.f.fill(0.0);
    }
}
