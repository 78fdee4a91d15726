use crate::error::{Error, Result};
use crate::numerics::interp::{cubic_hermite, UniformGrid};
use crate::numerics::ode::rk4_step;
use crate::pde::WaveField;

use super::{Collision, SigmaTable, THETA_WARNING};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub sigma_step: f64,
    pub tau_step: f64,
    /// Half-width of the `τ` window; default `max(40/θ, σ cutoff + 20)`.
    pub tau_half_width: Option<f64>,
    /// Half-width of the `σ` table; default chosen from the overlap decay.
    pub sigma_half_width: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            sigma_step: 0.05,
            tau_step: 0.02,
            tau_half_width: None,
            sigma_half_width: None,
        }
    }
}

/// Model state at one fast time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastState {
    pub tau: f64,
    pub sigma: f64,
    pub s: [f64; 2],
    pub g: [f64; 2],
    /// `φ₁₁`, `φ₂₁`
    pub phi: [f64; 2],
    /// `χ_i = V_i τ/ψ̇₀ + φ_{i1}`
    pub chi: [f64; 2],
}

/// Solved collision layer on a uniform `τ` grid.
#[derive(Debug, Clone)]
pub struct InteractionSolution {
    pub collision: Collision,
    pub table: SigmaTable,
    pub tau: UniformGrid,
    pub sigma: Vec<f64>,
    pub sigma_tilde: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub phi11: Vec<f64>,
    pub phi21: Vec<f64>,
    /// `∫ f/(a_{1,1} ψ̇₀) dτ`
    integral: Vec<f64>,
    offset: f64,
    /// `φ₁₁(+∞)`, `φ₂₁(+∞)`
    pub phase_limits: [f64; 2],
    pub warnings: Vec<String>,
}

impl InteractionSolution {
    pub fn solve(collision: Collision, opts: SolveOptions) -> Result<Self> {
        let theta = collision.theta();
        let mut warnings = Vec::new();
        if theta > THETA_WARNING {
            warnings.push(format!(
                "theta = {theta:.4} > {THETA_WARNING}: outside the small-theta regime of the model"
            ));
        }
        let cutoff = opts
            .sigma_half_width
            .unwrap_or_else(|| SigmaTable::cutoff(&collision));
        let table = SigmaTable::build(&collision, cutoff, opts.sigma_step)?;
        let mut half = opts
            .tau_half_width
            .unwrap_or((40.0 / theta).max(cutoff + 20.0));

        loop {
            let sol = Self::integrate(&collision, &table, half, opts.tau_step)?;
            let (sig, i_end) = sol;
            let last = *sig.last().unwrap();
            if last < table.grid.start {
                return Ok(Self::finish(collision, table, half, sig, i_end, warnings));
            }
            if opts.tau_half_width.is_some() || half > 1e5 {
                return Err(Error::numerical(format!(
                    "tau window [-{half}, {half}] ends inside the interaction layer (sigma = {last:.3})"
                )));
            }
            half *= 2.0;
        }
    }

    fn integrate(
        c: &Collision,
        table: &SigmaTable,
        half: f64,
        step: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = (2.0 * half / step).round() as usize + 1;
        let grid = UniformGrid::symmetric(half, n);
        let scale = 1.0 / (c.moments[0].a1 * c.geometry.psi_dot);
        let rhs = |_t: f64, y: &[f64; 2]| Ok([table.rho_at(y[0]), table.f_at(y[0]) * scale]);
        let mut sigma = Vec::with_capacity(n);
        let mut integral = Vec::with_capacity(n);
        let mut y = [half, 0.0];
        sigma.push(y[0]);
        integral.push(y[1]);
        for i in 1..n {
            let t0 = grid.at(i - 1);
            y = rk4_step(rhs, t0, &y, grid.at(i) - t0)?;
            sigma.push(y[0]);
            integral.push(y[1]);
        }
        Ok((sigma, integral))
    }

    fn finish(
        collision: Collision,
        table: SigmaTable,
        half: f64,
        sigma: Vec<f64>,
        integral: Vec<f64>,
        warnings: Vec<String>,
    ) -> Self {
        let n = sigma.len();
        let tau = UniformGrid::symmetric(half, n);
        let lam = collision.lambda;
        let mut sol = Self {
            sigma_tilde: sigma.iter().enumerate().map(|(i, s)| s + tau.at(i)).collect(),
            s1: sigma.iter().map(|&s| table.s1_at(s)).collect(),
            s2: Vec::new(),
            phi11: Vec::new(),
            phi21: Vec::new(),
            phase_limits: [0.0; 2],
            offset: 0.0,
            collision,
            table,
            tau,
            sigma,
            integral,
            warnings,
        };
        sol.s2 = sol.s1.iter().map(|s| -lam * s).collect();
        // fix φ₂₁(τ_min) = 0
        sol.offset = -sol.phi21_raw(0);
        sol.phi21 = (0..n).map(|i| sol.phi21_raw(i)).collect();
        let b1 = sol.collision.geometry.beta1;
        sol.phi11 = (0..n).map(|i| sol.phi21[i] + sol.sigma_tilde[i] / b1).collect();
        sol.phase_limits = [sol.phi11[n - 1], sol.phi21[n - 1]];
        sol
    }

    fn phi21_from(&self, tau: f64, sigma: f64, integral: f64, s1: f64) -> f64 {
        let b1 = self.collision.geometry.beta1;
        let a1 = self.collision.config.a1;
        let st = sigma + tau;
        ((integral + self.offset) - st * (a1 + s1) / b1 / b1 + tau * s1 / b1 / b1)
            / self.collision.r[0]
    }

    fn phi21_raw(&self, i: usize) -> f64 {
        self.phi21_from(self.tau.at(i), self.sigma[i], self.integral[i], self.s1[i])
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.tau.start, self.tau.end())
    }

    /// State at `τ` inside the solved window.
    pub fn state_at(&self, tau: f64) -> Result<FastState> {
        let (lo, hi) = self.tau_range();
        if tau < lo || tau > hi {
            return Err(Error::input(format!(
                "tau = {tau} outside the solved range [{lo}, {hi}]"
            )));
        }
        Ok(self.state_extended(tau))
    }

    /// State at any `τ`. Outside the window there is no overlap, so `σ`
    /// continues with slope −1 and every correction is frozen.
    pub fn state_extended(&self, tau: f64) -> FastState {
        let (lo, hi) = self.tau_range();
        let n = self.sigma.len();
        let (sigma, integral) = if tau <= lo {
            (self.sigma[0] - (tau - lo), self.integral[0])
        } else if tau >= hi {
            (self.sigma[n - 1] - (tau - hi), self.integral[n - 1])
        } else {
            let pos = (tau - lo) / self.tau.step;
            let i = (pos.floor() as usize).min(n - 2);
            let (t0, t1) = (self.tau.at(i), self.tau.at(i + 1));
            let scale = 1.0 / (self.collision.moments[0].a1 * self.collision.geometry.psi_dot);
            let (s0, s1) = (self.sigma[i], self.sigma[i + 1]);
            let sigma = cubic_hermite(
                t0,
                t1,
                s0,
                s1,
                self.table.rho_at(s0),
                self.table.rho_at(s1),
                tau,
            );
            let integral = cubic_hermite(
                t0,
                t1,
                self.integral[i],
                self.integral[i + 1],
                self.table.f_at(s0) * scale,
                self.table.f_at(s1) * scale,
                tau,
            );
            (sigma, integral)
        };
        let s1 = self.table.s1_at(sigma);
        let s = [s1, -self.collision.lambda * s1];
        let c = &self.collision;
        let phi21 = self.phi21_from(tau, sigma, integral, s1);
        let phi11 = phi21 + (sigma + tau) / c.geometry.beta1;
        let geo = &c.geometry;
        FastState {
            tau,
            sigma,
            s,
            g: [c.config.a1 + s[0], c.config.a2 + s[1]],
            phi: [phi11, phi21],
            chi: [
                geo.v1 * tau / geo.psi_dot + phi11,
                geo.v2 * tau / geo.psi_dot + phi21,
            ],
        }
    }

    /// Trajectories `φ_i(t) = x* + ε χ_i(τ)`.
    pub fn positions(&self, eps: f64, t: f64) -> [f64; 2] {
        let st = self.state_extended(self.collision.geometry.tau(eps, t));
        let x = self.collision.geometry.x_star;
        [x + eps * st.chi[0], x + eps * st.chi[1]]
    }

    /// `(u, u_x)` of the two-phase ansatz at `(t, x)`.
    pub fn field(&self, eps: f64, t: f64, x: f64) -> (f64, f64) {
        let st = self.state_extended(self.collision.geometry.tau(eps, t));
        self.field_at_state(&st, eps, x)
    }

    pub fn field_at_state(&self, st: &FastState, eps: f64, x: f64) -> (f64, f64) {
        let c = &self.collision;
        let betas = [c.geometry.beta1, c.geometry.beta2];
        let mut u = 0.0;
        let mut ux = 0.0;
        for i in 0..2 {
            let phi = c.geometry.x_star + eps * st.chi[i];
            let eta = betas[i] * (x - phi) / eps;
            let (w, wp) = c.profiles[i].eval(eta);
            u += st.g[i] * w;
            ux += st.g[i] * betas[i] / eps * wp;
        }
        (u, ux)
    }

    /// Samples the ansatz on a periodic grid; `t` must map into the solved window.
    pub fn assemble(&self, eps: f64, t: f64, x0: f64, length: f64, n: usize) -> Result<WaveField> {
        let st = self.state_at(self.collision.geometry.tau(eps, t))?;
        let h = length / n as f64;
        let u = (0..n)
            .map(|i| self.field_at_state(&st, eps, x0 + i as f64 * h).0)
            .collect();
        WaveField::new(x0, length, eps, t, u)
    }
}

#[cfg(test)]
mod tests {
    use super::super::InteractionConfig;
    use super::*;
    use crate::nonlinearity::Nonlinearity;

    fn solved() -> InteractionSolution {
        let cfg = InteractionConfig::new(Nonlinearity::kdv(), 1.0, 10.0, 10.0, 0.0).unwrap();
        InteractionSolution::solve(Collision::new(cfg).unwrap(), SolveOptions::default()).unwrap()
    }

    #[test]
    fn collision_layer_structure() {
        let s = solved();
        let n = s.sigma.len();
        // σ strictly decreasing: the fast soliton overtakes exactly once
        assert!(s.sigma.windows(2).all(|w| w[1] < w[0]));
        assert!(s.sigma_tilde[0].abs() < 1e-14);
        assert!(s.s1[0].abs() < 1e-14 && s.s1[n - 1].abs() < 1e-14);
        assert!(s.phi21[0].abs() < 1e-14 && s.phi11[0].abs() < 1e-14);
        // small soliton pushed back, large one forward
        assert!(s.phase_limits[0] < 0.0 && s.phase_limits[1] > 0.0, "{:?}", s.phase_limits);
        assert!(s.warnings.is_empty());
        let b1 = s.collision.geometry.beta1;
        for i in (0..n).step_by(97) {
            let st = s.state_extended(s.tau.at(i));
            assert!((b1 * (st.chi[0] - st.chi[1]) - st.sigma).abs() < 1e-10);
            assert!((st.sigma - s.sigma[i]).abs() < 1e-12);
            assert!((st.phi[1] - s.phi21[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_is_continuous() {
        let s = solved();
        let (lo, hi) = s.tau_range();
        for t in [lo, hi] {
            let a = s.state_extended(t);
            let b = s.state_extended(t + t.signum() * 1e-9);
            assert!((a.phi[0] - b.phi[0]).abs() < 1e-8 && (a.phi[1] - b.phi[1]).abs() < 1e-8);
        }
        assert!(s.state_at(hi + 1.0).is_err());
        let far = s.state_extended(hi + 1e4);
        assert!((far.phi[0] - s.phase_limits[0]).abs() < 1e-12);
    }

    #[test]
    fn isolated_solitons_far_from_collision() {
        let s = solved();
        let eps = 0.05;
        let geo = s.collision.geometry;
        let t = 0.0;
        let p = s.positions(eps, t);
        assert!((p[0] - 10.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let (u, _) = s.field(eps, t, 10.0);
        assert!((u - 1.0).abs() < 1e-12);
        assert!(geo.t_star > 0.0);
    }
}
