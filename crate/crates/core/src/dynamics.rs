//! One-phase dynamics of a solitary wave under a small local force
//! `F(x, t, u)` with `F(x, t, 0) = 0`, and the long-wave tail it leaves behind.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numerics::interp::cubic_hermite;
use crate::numerics::ode::{Dopri5, Tolerance};
use crate::numerics::quadrature::trapezoid;
use crate::profile::{speed_and_width, MomentSet, SolitonProfile};

/// Relative change of `A` after which profile moments are recomputed for
/// nonlinearities whose profile shape depends on the amplitude.
pub const MOMENT_REFRESH: f64 = 1e-3;

type ForceFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
type SlopeFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Local force `F(x, t, u)` together with `∂F/∂u` at `u = 0`.
#[derive(Clone)]
pub struct LocalForce {
    f: Arc<ForceFn>,
    fu0: Arc<SlopeFn>,
    logistic: Option<(f64, f64)>,
}

impl std::fmt::Debug for LocalForce {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.logistic {
            Some((mu, alpha)) => write!(out, "LocalForce::logistic(mu = {mu}, alpha = {alpha})"),
            None => write!(out, "LocalForce(..)"),
        }
    }
}

impl LocalForce {
    pub fn new(
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        fu0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            fu0: Arc::new(fu0),
            logistic: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _, _| 0.0, |_, _| 0.0)
    }

    /// `F = μ(α − u)u`.
    pub fn logistic(mu: f64, alpha: f64) -> Self {
        Self {
            logistic: Some((mu, alpha)),
            ..Self::new(
                move |_, _, u| mu * (alpha - u) * u,
                move |_, _| mu * alpha,
            )
        }
    }

    /// `(μ, α)` when this is the logistic force.
    pub fn logistic_parameters(&self) -> Option<(f64, f64)> {
        self.logistic
    }

    pub fn value(&self, x: f64, t: f64, u: f64) -> f64 {
        (self.f)(x, t, u)
    }

    pub fn du0(&self, x: f64, t: f64) -> f64 {
        (self.fu0)(x, t)
    }

    /// Largest `|F(x, t, 0)|` over the given samples.
    pub fn zero_state_violation(&self, xs: &[f64], ts: &[f64]) -> f64 {
        xs.iter()
            .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
            .map(|(x, t)| self.value(x, t, 0.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn as_pde_force(&self) -> impl Fn(f64, f64, f64) -> f64 + Sync + '_ {
        move |x, t, u| self.value(x, t, u)
    }
}

/// Force integrals along the soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceMoments {
    /// `F̄ = F(φ, t, A)`
    pub fbar: f64,
    /// `∫ F₀ dη`
    pub int_f0: f64,
    /// `∫ ω F₀ dη`
    pub int_omega_f0: f64,
    /// `a_{F₀} = F̄⁻¹ ∫F₀ dη`; `None` when `F̄ = 0` but the integral is not.
    pub a_f0: Option<f64>,
    /// `a_{ωF₀} = F̄⁻¹ ∫ωF₀ dη`, same convention.
    pub a_omega_f0: Option<f64>,
}

fn normalise(int: f64, fbar: f64) -> Option<f64> {
    if fbar != 0.0 {
        Some(int / fbar)
    } else if int == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// `F₀(η) = F(φ, t, A ω(η))` integrated over the profile of amplitude `amplitude`.
///
/// `profile` may have been computed for a nearby amplitude; the shape is used
/// as is and scaled by `amplitude`.
pub fn force_moments(
    profile: &SolitonProfile,
    amplitude: f64,
    force: &LocalForce,
    phi: f64,
    t: f64,
) -> ForceMoments {
    let f0: Vec<f64> = profile
        .omega
        .iter()
        .map(|&w| force.value(phi, t, amplitude * w))
        .collect();
    let wf0: Vec<f64> = f0.iter().zip(&profile.omega).map(|(f, w)| f * w).collect();
    let h = profile.grid.step;
    let fbar = force.value(phi, t, amplitude);
    let int_f0 = trapezoid(&f0, h);
    let int_omega_f0 = trapezoid(&wf0, h);
    ForceMoments {
        fbar,
        int_f0,
        int_omega_f0,
        a_f0: normalise(int_f0, fbar),
        a_omega_f0: normalise(int_omega_f0, fbar),
    }
}

/// Profile and moments cached around one amplitude.
#[derive(Debug, Clone)]
struct MomentCache {
    amplitude: f64,
    profile: SolitonProfile,
    moments: MomentSet,
    /// `da₁/dA`, `da₂/dA`; zero for homogeneous nonlinearities.
    slopes: [f64; 2],
}

impl MomentCache {
    fn build(nl: &Nonlinearity, amplitude: f64) -> Result<Self> {
        let profile = SolitonProfile::solve(nl, amplitude)?;
        let moments = profile.moments(nl)?;
        let slopes = if nl.is_homogeneous() {
            [0.0, 0.0]
        } else {
            let d = amplitude * MOMENT_REFRESH;
            let lo = SolitonProfile::solve(nl, amplitude - d)?.moments(nl)?;
            let hi = SolitonProfile::solve(nl, amplitude + d)?.moments(nl)?;
            [(hi.a1 - lo.a1) / (2.0 * d), (hi.a2 - lo.a2) / (2.0 * d)]
        };
        Ok(Self {
            amplitude,
            profile,
            moments,
            slopes,
        })
    }

    fn refresh(&mut self, nl: &Nonlinearity, amplitude: f64) -> Result<()> {
        if !nl.is_homogeneous() && (amplitude / self.amplitude - 1.0).abs() > MOMENT_REFRESH {
            *self = Self::build(nl, amplitude)?;
        }
        Ok(())
    }
}

/// Right-hand side of the amplitude equation and the boundary value of the tail.
struct OnePhase<'a> {
    nl: &'a Nonlinearity,
    force: &'a LocalForce,
    cache: MomentCache,
}

impl OnePhase<'_> {
    fn check(&self, a: f64) -> Result<()> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::numerical(format!("amplitude collapsed: A = {a}")));
        }
        if a > self.nl.u_max() {
            return Err(Error::numerical(format!(
                "amplitude A = {a} left the validated range (0, {}]",
                self.nl.u_max()
            )));
        }
        Ok(())
    }

    /// `dA/dt` from `d/dt(a₂A²/β) = 2(A/β) ∫ωF₀ dη`.
    fn amplitude_rate(&mut self, a: f64, phi: f64, t: f64) -> Result<f64> {
        self.check(a)?;
        self.cache.refresh(self.nl, a)?;
        let nl = self.nl;
        let beta = (2.0 * nl.g1(a)).sqrt();
        let dbeta = nl.g1_prime(a) / beta;
        let a2 = self.cache.moments.a2;
        let dphi_da = a2 * (2.0 * a / beta - a * a * dbeta / (beta * beta))
            + a * a / beta * self.cache.slopes[1];
        let fm = force_moments(&self.cache.profile, a, self.force, phi, t);
        Ok(2.0 * a / beta * fm.int_omega_f0 / dphi_da)
    }

    /// `u⁻(φ, t) = [∫F₀dη/β − d/dt(a₁A/β)] / (dφ/dt)`.
    fn boundary_value(&mut self, a: f64, phi: f64, t: f64) -> Result<f64> {
        let da = self.amplitude_rate(a, phi, t)?;
        let nl = self.nl;
        let beta = (2.0 * nl.g1(a)).sqrt();
        let dbeta = nl.g1_prime(a) / beta;
        let a1 = self.cache.moments.a1;
        let d_mass = (a1 * (1.0 / beta - a * dbeta / (beta * beta)) + a / beta * self.cache.slopes[0]) * da;
        let fm = force_moments(&self.cache.profile, a, self.force, phi, t);
        let speed = beta * beta;
        if speed == 0.0 {
            return Err(Error::numerical("soliton speed vanished; tail boundary undefined"));
        }
        Ok((fm.int_f0 / beta - d_mass) / speed)
    }
}

/// `A(t)`, `β(t)`, `φ(t)` on an output grid.
#[derive(Debug, Clone)]
pub struct PerturbedTrajectory {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub fbar: Vec<f64>,
    pub a_dot: Vec<f64>,
}

impl PerturbedTrajectory {
    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = (self.t[0], *self.t.last().unwrap());
        if t < lo || t > hi {
            return Err(Error::input(format!("t = {t} outside trajectory [{lo}, {hi}]")));
        }
        let i = self.t.partition_point(|&s| s <= t).saturating_sub(1);
        Ok(i.min(self.t.len() - 2))
    }

    pub fn a_at(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        Ok(cubic_hermite(
            self.t[i],
            self.t[i + 1],
            self.a[i],
            self.a[i + 1],
            self.a_dot[i],
            self.a_dot[i + 1],
            t,
        ))
    }

    pub fn phi_at(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        let b = &self.beta;
        Ok(cubic_hermite(
            self.t[i],
            self.t[i + 1],
            self.phi[i],
            self.phi[i + 1],
            b[i] * b[i],
            b[i + 1] * b[i + 1],
            t,
        ))
    }

    /// First `t` with `φ(t) = x`, by bisection.
    pub fn entry_time(&self, x: f64) -> Option<f64> {
        let n = self.t.len();
        if x < self.phi[0] || x > self.phi[n - 1] {
            return None;
        }
        let k = self.phi.partition_point(|&p| p < x).max(1).min(n - 1);
        let (mut lo, mut hi) = (self.t[k - 1], self.t[k]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi_at(mid).ok()? < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Integrates `dA/dt` and `dφ/dt = β² = 2g₁(A)` on `n_out` equally spaced outputs.
pub fn evolve_one_phase(
    nl: &Nonlinearity,
    force: &LocalForce,
    a0: f64,
    phi0: f64,
    t_end: f64,
    n_out: usize,
) -> Result<PerturbedTrajectory> {
    speed_and_width(nl, a0)?;
    if !(t_end > 0.0) || n_out < 2 {
        return Err(Error::input("need t_end > 0 and at least two output times"));
    }
    let mut sys = OnePhase {
        nl,
        force,
        cache: MomentCache::build(nl, a0)?,
    };
    let mut ode = Dopri5::new(Tolerance {
        rtol: 1e-11,
        atol: 1e-13,
        ..Tolerance::default()
    });
    let mut traj = PerturbedTrajectory {
        t: Vec::with_capacity(n_out),
        a: Vec::with_capacity(n_out),
        beta: Vec::with_capacity(n_out),
        phi: Vec::with_capacity(n_out),
        fbar: Vec::with_capacity(n_out),
        a_dot: Vec::with_capacity(n_out),
    };
    let mut y = [a0, phi0];
    let mut t = 0.0;
    for k in 0..n_out {
        let tk = t_end * k as f64 / (n_out - 1) as f64;
        y = ode.advance(
            |s, y: &[f64; 2]| {
                let rate = sys.amplitude_rate(y[0], y[1], s)?;
                Ok([rate, 2.0 * nl.g1(y[0])])
            },
            t,
            y,
            tk,
        )?;
        t = tk;
        sys.check(y[0])?;
        traj.t.push(t);
        traj.a.push(y[0]);
        traj.beta.push((2.0 * nl.g1(y[0])).sqrt());
        traj.phi.push(y[1]);
        traj.fbar.push(force.value(y[1], t, y[0]));
        traj.a_dot.push(sys.amplitude_rate(y[0], y[1], t)?);
    }
    Ok(traj)
}

/// `dA/dt` at a single state, for locating equilibria.
pub fn amplitude_rate(
    nl: &Nonlinearity,
    force: &LocalForce,
    a: f64,
    phi: f64,
    t: f64,
) -> Result<f64> {
    let mut sys = OnePhase {
        nl,
        force,
        cache: MomentCache::build(nl, a)?,
    };
    sys.amplitude_rate(a, phi, t)
}

/// Closed-form logistic law for `g'(u) = u^{3/2}`, `F = μ(α − u)u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticLaw {
    pub a0: f64,
    pub mu_prime: f64,
    pub a_star: f64,
}

impl LogisticLaw {
    /// `μ' = 8αμ/7`, `A* = α a₂/a₃` with `a₂`, `a₃` from the tabulated profile.
    pub fn new(nl: &Nonlinearity, a0: f64, mu: f64, alpha: f64) -> Result<Self> {
        if nl.power_law_exponent() != Some(1.5) {
            return Err(Error::input(
                "the logistic closed form applies to g'(u) = u^{3/2} only",
            ));
        }
        if !(a0 > 0.0) {
            return Err(Error::input(format!("A0 must be positive, got {a0}")));
        }
        let m = SolitonProfile::solve(nl, a0)?.moments(nl)?;
        Ok(Self {
            a0,
            mu_prime: 8.0 * alpha * mu / 7.0,
            a_star: alpha * m.a2 / m.a3,
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        let e = (self.mu_prime * t).exp_m1();
        let c = self.a0 / self.a_star;
        self.a0 * (e + 1.0) / (1.0 + c * e)
    }
}

/// Evolution law for the tail behind the soliton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `∂u⁻/∂t = F'_u(x, t, 0) u⁻`
    Linear,
    /// `∂u⁻/∂t = F(x, t, ε u⁻)/ε`, which keeps the `O(ε)` saturation.
    Retained { eps: f64 },
}

/// `u⁻(x, t)` on a tensor grid, zero ahead of the soliton.
#[derive(Debug, Clone)]
pub struct TailField {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `u[k][j] = u⁻(x_j, t_k)`
    pub u: Vec<Vec<f64>>,
    /// `t_x` with `φ(t_x) = x`; `None` for points behind `φ(0)` or never reached.
    pub entry: Vec<Option<f64>>,
    /// Boundary value `u⁻(φ(t_x), t_x)` at each entry.
    pub boundary: Vec<f64>,
}

impl TailField {
    /// `max_x u⁻(x, t_k)` for each output time.
    pub fn max_over_x(&self) -> Vec<f64> {
        self.u.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect()
    }
}

/// Boundary value of the tail at one point of the trajectory.
pub fn tail_boundary(
    nl: &Nonlinearity,
    force: &LocalForce,
    a: f64,
    phi: f64,
    t: f64,
) -> Result<f64> {
    let mut sys = OnePhase {
        nl,
        force,
        cache: MomentCache::build(nl, a)?,
    };
    sys.boundary_value(a, phi, t)
}

pub fn solve_tail(
    nl: &Nonlinearity,
    force: &LocalForce,
    traj: &PerturbedTrajectory,
    x_grid: &[f64],
    t_grid: &[f64],
    model: TailModel,
) -> Result<TailField> {
    if traj.phi.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("trajectory must move strictly forward"));
    }
    let t_last = *traj.t.last().unwrap();
    if t_grid.iter().any(|&t| t < traj.t[0] || t > t_last) {
        return Err(Error::input("tail output times must lie inside the trajectory"));
    }
    // boundary values need moments at A(t_x); for homogeneous g one cache serves all
    let entries: Vec<Option<f64>> = x_grid.iter().map(|&x| traj.entry_time(x)).collect();
    let boundary: Vec<f64> = entries
        .par_iter()
        .zip(x_grid.par_iter())
        .map(|(e, &x)| match e {
            Some(tx) => tail_boundary(nl, force, traj.a_at(*tx)?, x, *tx),
            None => Ok(0.0),
        })
        .collect::<Result<_>>()?;

    let columns: Vec<Vec<f64>> = x_grid
        .par_iter()
        .enumerate()
        .map(|(j, &x)| -> Result<Vec<f64>> {
            let mut col = vec![0.0; t_grid.len()];
            let Some(tx) = entries[j] else {
                return Ok(col);
            };
            let mut ode = Dopri5::new(Tolerance::default());
            let mut y = [boundary[j]];
            let mut t = tx;
            for (k, &tk) in t_grid.iter().enumerate() {
                if tk < tx {
                    continue;
                }
                y = ode.advance(
                    |s, y: &[f64; 1]| {
                        Ok([match model {
                            TailModel::Linear => force.du0(x, s) * y[0],
                            TailModel::Retained { eps } => force.value(x, s, eps * y[0]) / eps,
                        }])
                    },
                    t,
                    y,
                    tk,
                )?;
                t = tk;
                col[k] = y[0];
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;

    let u = (0..t_grid.len())
        .map(|k| columns.iter().map(|c| c[k]).collect())
        .collect();
    Ok(TailField {
        x: x_grid.to_vec(),
        t: t_grid.to_vec(),
        u,
        entry: entries,
        boundary,
    })
}

/// Destruction time of the soliton by its own tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTime {
    /// `ln(1/(εμ))/(αμ)`
    pub estimate: f64,
    /// First `t` with `max_x ε u⁻ ≥ A(t)`, if reached.
    pub measured: Option<f64>,
}

pub fn critical_time_estimate(eps: f64, mu: f64, alpha: f64) -> Result<f64> {
    if !(eps > 0.0 && mu > 0.0 && alpha > 0.0) || eps * mu >= 1.0 {
        return Err(Error::input(format!(
            "need eps, mu, alpha > 0 and eps*mu < 1 (eps = {eps}, mu = {mu}, alpha = {alpha})"
        )));
    }
    Ok((1.0 / (eps * mu)).ln() / (alpha * mu))
}

/// Runs the logistic scenario from `A0` and measures when `ε u⁻` reaches `A`.
pub fn critical_time(
    nl: &Nonlinearity,
    eps: f64,
    mu: f64,
    alpha: f64,
    a0: f64,
) -> Result<CriticalTime> {
    let estimate = critical_time_estimate(eps, mu, alpha)?;
    let force = LocalForce::logistic(mu, alpha);
    let t_end = 4.0 * estimate;
    let traj = evolve_one_phase(nl, &force, a0, 0.0, t_end, 2001)?;
    let phi_end = *traj.phi.last().unwrap();
    let xs: Vec<f64> = (0..401).map(|j| phi_end * j as f64 / 400.0).collect();
    let tail = solve_tail(nl, &force, &traj, &xs, &traj.t, TailModel::Linear)?;
    let peak = tail.max_over_x();
    let mut measured = None;
    for k in 1..traj.t.len() {
        if eps * peak[k] >= traj.a[k] {
            // linear interpolation of the crossing
            let f0 = eps * peak[k - 1] - traj.a[k - 1];
            let f1 = eps * peak[k] - traj.a[k];
            let s = if f1 != f0 { -f0 / (f1 - f0) } else { 1.0 };
            measured = Some(traj.t[k - 1] + s * (traj.t[k] - traj.t[k - 1]));
            break;
        }
    }
    Ok(CriticalTime { estimate, measured })
}
