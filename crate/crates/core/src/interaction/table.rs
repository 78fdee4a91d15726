use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::interp::{lagrange6, UniformGrid};

use super::{Collision, Convolutions, CorrectionState};

/// Largest `|R₂⁽⁰⁾|` accepted at the table ends; beyond them the cross terms
/// are treated as exactly zero.
pub const EDGE_TOLERANCE: f64 = 1e-14;

/// Every `σ`-dependent quantity of the model on a uniform `σ` grid.
#[derive(Debug, Clone)]
pub struct SigmaTable {
    pub grid: UniformGrid,
    pub conv: Vec<Convolutions>,
    pub states: Vec<CorrectionState>,
    pub f: Vec<f64>,
    pub energy: Vec<f64>,
    pub q: Vec<f64>,
    pub frak_f: Vec<f64>,
    pub dq: Vec<f64>,
    /// `dσ/dτ = 𝔉 / (dQ/dσ)`
    pub rho: Vec<f64>,
    s1: Vec<f64>,
}

/// Fourth-order first derivative on a uniform grid.
pub fn derivative4(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 5);
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    }
    let fwd = |k: usize| {
        (-25.0 * y[k] + 48.0 * y[k + 1] - 36.0 * y[k + 2] + 16.0 * y[k + 3] - 3.0 * y[k + 4])
            / (12.0 * h)
    };
    let bwd = |k: usize| {
        (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4])
            / (12.0 * h)
    };
    d[0] = fwd(0);
    d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h);
    d[n - 1] = bwd(n - 1);
    d[n - 2] = (3.0 * y[n - 1] + 10.0 * y[n - 2] - 18.0 * y[n - 3] + 6.0 * y[n - 4]
        - y[n - 5])
        / (12.0 * h);
    d
}

impl SigmaTable {
    /// Picks the half-width so that the overlap is negligible at both ends.
    pub fn cutoff(c: &Collision) -> f64 {
        let mut s = 30.0;
        while s < 2000.0 {
            let lo = c.convolutions(-s).r0.abs();
            let hi = c.convolutions(s).r0.abs();
            if lo.max(hi) < EDGE_TOLERANCE {
                return s;
            }
            s += 10.0;
        }
        s
    }

    pub fn build(c: &Collision, half_width: f64, step: f64) -> Result<Self> {
        let n = (2.0 * half_width / step).round() as usize + 1;
        let grid = UniformGrid::symmetric(half_width, n.max(7));
        let conv: Vec<Convolutions> = (0..grid.len)
            .into_par_iter()
            .map(|i| c.convolutions(grid.at(i)))
            .collect();

        // branch continuation is inherently sequential
        let mut states = Vec::with_capacity(grid.len);
        let mut prev = 0.0;
        for (i, r) in conv.iter().enumerate() {
            let st = c.amplitude_corrections(grid.at(i), r.r0, prev)?;
            prev = st.s[0];
            states.push(st);
        }

        let rhs: Vec<_> = states
            .par_iter()
            .zip(conv.par_iter())
            .map(|(s, r)| c.rhs(s, r))
            .collect();
        let q: Vec<f64> = rhs.iter().map(|r| r.q).collect();
        let dq = derivative4(&q, grid.step);
        let frak_f: Vec<f64> = rhs.iter().map(|r| r.frak_f).collect();

        if let Some(i) = dq.iter().position(|&d| !(d < 0.0)) {
            return Err(Error::regime(format!(
                "dQ/dsigma = {:.4e} is not negative at sigma = {:.4} (theta = {:.4})",
                dq[i],
                grid.at(i),
                c.theta()
            )));
        }
        if let Some(i) = frak_f.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::regime(format!(
                "right-hand side of the sigma equation is {:.4e} <= 0 at sigma = {:.4} \
                 (theta = {:.4})",
                frak_f[i],
                grid.at(i),
                c.theta()
            )));
        }
        let rho = frak_f.iter().zip(&dq).map(|(f, d)| f / d).collect();
        Ok(Self {
            s1: states.iter().map(|s| s.s[0]).collect(),
            f: rhs.iter().map(|r| r.f).collect(),
            energy: rhs.iter().map(|r| r.energy).collect(),
            grid,
            conv,
            states,
            q,
            frak_f,
            dq,
            rho,
        })
    }

    fn inside(&self, sigma: f64) -> bool {
        sigma >= self.grid.start && sigma <= self.grid.end()
    }

    /// `dσ/dτ`; exactly `−1` outside the table.
    pub fn rho_at(&self, sigma: f64) -> f64 {
        if self.inside(sigma) {
            lagrange6(&self.grid, &self.rho, sigma)
        } else {
            -1.0
        }
    }

    pub fn f_at(&self, sigma: f64) -> f64 {
        if self.inside(sigma) {
            lagrange6(&self.grid, &self.f, sigma)
        } else {
            0.0
        }
    }

    pub fn s1_at(&self, sigma: f64) -> f64 {
        if self.inside(sigma) {
            lagrange6(&self.grid, &self.s1, sigma)
        } else {
            0.0
        }
    }
}
