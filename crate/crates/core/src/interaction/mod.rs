//! Weak-asymptotic model of the collision of two solitary waves.
//!
//! Given amplitudes `A₂ > A₁` the fast soliton overtakes the slow one at
//! `(t*, x*)`. The model resolves the collision layer in the fast time
//! `τ = ψ̇₀(t − t*)/ε` through the scaled phase difference `σ(τ)`, transient
//! amplitude corrections `S_i` and phase corrections `φ_{i1}`.

mod corrections;
mod solution;
mod table;

pub use corrections::{CorrectionState, Rhs};
pub use solution::{FastState, InteractionSolution, SolveOptions};
pub use table::SigmaTable;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numerics::quadrature::trapezoid;
use crate::profile::{MomentSet, SolitonProfile};

/// Above this `θ` the model is run but flagged as outside its asymptotic regime.
pub const THETA_WARNING: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct InteractionConfig {
    pub nl: Nonlinearity,
    pub a1: f64,
    pub a2: f64,
    pub x1_0: f64,
    pub x2_0: f64,
}

impl InteractionConfig {
    pub fn new(nl: Nonlinearity, a1: f64, a2: f64, x1_0: f64, x2_0: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > a1) {
            return Err(Error::input(format!(
                "amplitudes must satisfy A2 > A1 > 0 (got A1 = {a1}, A2 = {a2})"
            )));
        }
        if !(x1_0 > x2_0) {
            return Err(Error::input(format!(
                "the slow soliton must start ahead: x1_0 = {x1_0} <= x2_0 = {x2_0}"
            )));
        }
        if a2 > nl.u_max() {
            return Err(Error::input(format!(
                "A2 = {a2} exceeds the validated range u_max = {}",
                nl.u_max()
            )));
        }
        Ok(Self {
            nl,
            a1,
            a2,
            x1_0,
            x2_0,
        })
    }

    pub fn geometry(&self) -> Geometry {
        let v1 = 2.0 * self.nl.g1(self.a1);
        let v2 = 2.0 * self.nl.g1(self.a2);
        Geometry::new(v1, v2, self.x1_0, self.x2_0).expect("validated config has V2 > V1")
    }
}

/// Kinematics of the two unperturbed trajectories `x = V_i t + x_i⁰`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub v1: f64,
    pub v2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub theta: f64,
    pub t_star: f64,
    pub x_star: f64,
    pub psi_dot: f64,
}

impl Geometry {
    pub fn new(v1: f64, v2: f64, x1_0: f64, x2_0: f64) -> Result<Self> {
        if !(v2 > v1 && v1 > 0.0) {
            return Err(Error::input(format!("need V2 > V1 > 0, got V1 = {v1}, V2 = {v2}")));
        }
        let (beta1, beta2) = (v1.sqrt(), v2.sqrt());
        let t_star = (x1_0 - x2_0) / (v2 - v1);
        Ok(Self {
            v1,
            v2,
            beta1,
            beta2,
            theta: beta1 / beta2,
            t_star,
            x_star: v1 * t_star + x1_0,
            psi_dot: beta1 * (v2 - v1),
        })
    }

    /// Fast time of slow time `t` at dispersion `ε`.
    pub fn tau(&self, eps: f64, t: f64) -> f64 {
        self.psi_dot * (t - self.t_star) / eps
    }
}

/// The three overlap integrals at one `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Convolutions {
    pub r0: f64,
    pub r1: f64,
    pub r01: f64,
}

/// `(1/norm) ∫ ηⁱ ω₁(θη − σ) ω₂(η) dη` for `i = 0, 1`, and the same with `ω'`.
///
/// The quadrature runs over the grid of `p2`; `ω₂` confines the integrand there.
pub fn convolutions(
    p1: &SolitonProfile,
    p2: &SolitonProfile,
    theta: f64,
    sigma: f64,
    norm: f64,
    norm_prime: f64,
) -> Convolutions {
    let n = p2.omega.len();
    let mut c0 = vec![0.0; n];
    let mut c1 = vec![0.0; n];
    let mut c01 = vec![0.0; n];
    for i in 0..n {
        let eta = p2.grid.at(i);
        let (w1, w1p) = p1.eval(theta * eta - sigma);
        c0[i] = w1 * p2.omega[i];
        c1[i] = eta * c0[i];
        c01[i] = w1p * p2.d1[i];
    }
    let h = p2.grid.step;
    Convolutions {
        r0: trapezoid(&c0, h) / norm,
        r1: trapezoid(&c1, h) / norm,
        r01: trapezoid(&c01, h) / norm_prime,
    }
}

/// Profiles, moments and derived constants for one collision.
#[derive(Debug, Clone)]
pub struct Collision {
    pub config: InteractionConfig,
    pub geometry: Geometry,
    pub profiles: [SolitonProfile; 2],
    pub moments: [MomentSet; 2],
    /// `ã₂ = √(a_{2,1} a_{2,2})`
    pub a2_tilde: f64,
    /// `ã'₂ = √(a'_{2,1} a'_{2,2})`
    pub a2p_tilde: f64,
    /// `r₁`, `r₂`
    pub r: [f64; 2],
    /// `S₂ = −λ S₁`
    pub lambda: f64,
}

impl Collision {
    pub fn new(config: InteractionConfig) -> Result<Self> {
        let nl = &config.nl;
        let p1 = SolitonProfile::solve(nl, config.a1)?;
        let p2 = SolitonProfile::solve(nl, config.a2)?;
        let m1 = p1.moments(nl)?;
        let m2 = p2.moments(nl)?;
        let geometry = config.geometry();
        let (b1, b2) = (geometry.beta1, geometry.beta2);
        let (a1, a2) = (config.a1, config.a2);
        let r1 = a1 / b1 + (m2.a1 / m1.a1) * a2 / b2;
        let r2 = a1 * a1 / b1 + (m2.a2 / m1.a2) * a2 * a2 / b2;
        Ok(Self {
            a2_tilde: (m1.a2 * m2.a2).sqrt(),
            a2p_tilde: (m1.a2_prime * m2.a2_prime).sqrt(),
            r: [r1, r2],
            lambda: m1.a1 * b2 / (m2.a1 * b1),
            geometry,
            profiles: [p1, p2],
            moments: [m1, m2],
            config,
        })
    }

    pub fn theta(&self) -> f64 {
        self.geometry.theta
    }

    pub fn convolutions(&self, sigma: f64) -> Convolutions {
        convolutions(
            &self.profiles[0],
            &self.profiles[1],
            self.theta(),
            sigma,
            self.a2_tilde,
            self.a2p_tilde,
        )
    }

    /// `ā_k = a_{k,1}/a_{k,2}` for `k = 1, 2`.
    pub fn a_bar(&self) -> [f64; 2] {
        let [m1, m2] = &self.moments;
        [m1.a1 / m2.a1, m1.a2 / m2.a2]
    }

    /// Scale `c' β₂^{q'−1}` used to define `κ_i = (S_i/β_i)/scale`.
    pub fn kappa_scale(&self) -> f64 {
        let nl = &self.config.nl;
        nl.c_prime() * self.geometry.beta2.powf(nl.q_prime() - 1.0)
    }

    /// Small-`θ` prediction `κ₁ ≈ (√ā₂/ā₁) θ^{q'} R₂⁽⁰⁾`.
    pub fn kappa1_leading(&self, r0: f64) -> f64 {
        let [ab1, ab2] = self.a_bar();
        ab2.sqrt() / ab1 * self.theta().powf(self.config.nl.q_prime()) * r0
    }

    /// Small-`θ` prediction of `−dQ/dσ` and of `𝔉`:
    /// `(A₁A₂/β₁²)(ā₁/ā₂ − θ^{q'})`.
    pub fn frak_f_leading(&self) -> f64 {
        let [ab1, ab2] = self.a_bar();
        let (a1, a2) = (self.config.a1, self.config.a2);
        let b1 = self.geometry.beta1;
        a1 * a2 / (b1 * b1) * (ab1 / ab2 - self.theta().powf(self.config.nl.q_prime()))
    }

    /// The constant (secular) part of `𝔉`, also the far-field `−dQ/dσ`.
    pub fn secular_rate(&self) -> f64 {
        let (a1, b1) = (self.config.a1, self.geometry.beta1);
        -(a1 * a1 / b1 - self.r[1] / self.r[0] * a1 / b1) / b1
    }
}
