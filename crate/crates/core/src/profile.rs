//! Solitary-wave profiles `ω(η, A)` and their moment integrals.
//!
//! The profile solves `ω'' = ω − g'(Aω)/(AV)` with `ω(0) = 1`, `ω → 0` at
//! infinity, which integrates once to `ω' = −sgn(η) ω √D(ω)` with
//! `D(ω) = 1 − g₁(Aω)/g₁(A)`. We invert `η(ω) = ∫_ω^1 dz / (z √D(z))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numerics::fit::exponential_decay_rate;
use crate::numerics::interp::{quintic_hermite, UniformGrid};
use crate::numerics::quadrature::{trapezoid, GaussLegendre};

pub const DEFAULT_ETA_MAX: f64 = 40.0;
pub const DEFAULT_POINTS: usize = 4097;
/// Largest admissible `ω(η_max)`.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Where the inversion switches from `z = 1 − s²` to `z = e^{-ζ}`.
const SWITCH_OMEGA: f64 = 0.5;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX: usize = 60;

/// `V = 2 g₁(A)` and `β = √V`.
pub fn speed_and_width(nl: &Nonlinearity, amplitude: f64) -> Result<(f64, f64)> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::input(format!("amplitude must be positive, got {amplitude}")));
    }
    let v = 2.0 * nl.g1(amplitude);
    Ok((v, v.sqrt()))
}

/// Tabulated solitary wave for one amplitude.
///
/// Stores `ω` and its first three derivatives on a symmetric grid so that it
/// can be evaluated anywhere by quintic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct SolitonProfile {
    pub amplitude: f64,
    pub speed: f64,
    pub beta: f64,
    pub grid: UniformGrid,
    pub omega: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    d3: Vec<f64>,
    /// Fitted `r` in `ω ≈ C e^{-r|η|}` over the outer quarter.
    pub decay_rate: f64,
    /// Local decay rate used to extend the profile beyond the grid.
    tail_rate: f64,
}

struct Inverter<'a> {
    nl: &'a Nonlinearity,
    amplitude: f64,
    gl: GaussLegendre,
}

impl Inverter<'_> {
    /// `dη/ds` in the core variable.
    fn core(&self, s: f64) -> f64 {
        2.0 / ((1.0 - s * s) * self.nl.deficit_over_s2(self.amplitude, s).sqrt())
    }

    /// `dη/dζ` in the tail variable.
    fn tail(&self, zeta: f64) -> f64 {
        1.0 / self.nl.deficit_log(self.amplitude, zeta).sqrt()
    }

    fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.gl.integrate_composite(a, b, 0.05, f)
    }

    /// Solves `η(x) = target` for the variable `x`, given an anchor `(x_a, η_a)`.
    fn newton<F: Fn(f64) -> f64 + Copy>(
        &self,
        f: F,
        x_a: f64,
        eta_a: f64,
        target: f64,
        upper: f64,
    ) -> Result<f64> {
        let mut x = (x_a + (target - eta_a) / f(x_a)).min(upper);
        for _ in 0..NEWTON_MAX {
            let r = eta_a + self.integrate(x_a, x, f) - target;
            let dx = r / f(x);
            x = (x - dx).clamp(x_a, upper);
            if dx.abs() <= NEWTON_TOL * x.abs().max(1.0) {
                return Ok(x);
            }
        }
        Err(Error::numerical(format!(
            "profile inversion did not converge at eta = {target}"
        )))
    }
}

impl SolitonProfile {
    /// Default grid, growing `η_max` until the tail is below [`TAIL_TOLERANCE`].
    pub fn solve(nl: &Nonlinearity, amplitude: f64) -> Result<Self> {
        let mut eta_max = DEFAULT_ETA_MAX;
        let mut n = DEFAULT_POINTS;
        loop {
            match Self::solve_with(nl, amplitude, eta_max, n) {
                Err(Error::Numerical(msg)) if msg.contains("eta_max") && eta_max < 640.0 => {
                    eta_max *= 2.0;
                    n = 2 * n - 1;
                }
                other => return other,
            }
        }
    }

    /// Profile on `n_points` nodes of `[-eta_max, eta_max]`.
    pub fn solve_with(
        nl: &Nonlinearity,
        amplitude: f64,
        eta_max: f64,
        n_points: usize,
    ) -> Result<Self> {
        let (speed, beta) = speed_and_width(nl, amplitude)?;
        if !(eta_max > 0.0) || n_points < 16 {
            return Err(Error::input(format!(
                "profile grid needs eta_max > 0 and at least 16 points (got {eta_max}, {n_points})"
            )));
        }
        let grid = UniformGrid::symmetric(eta_max, n_points);
        let inv = Inverter {
            nl,
            amplitude,
            gl: GaussLegendre::new(16),
        };
        let s_switch = (1.0 - SWITCH_OMEGA).sqrt();
        let zeta_switch = -SWITCH_OMEGA.ln();
        let eta_switch = inv.integrate(0.0, s_switch, |s| inv.core(s));

        let half = n_points / 2;
        let mut omega = vec![0.0; n_points];
        // march outward over the non-negative half
        let (mut s_a, mut eta_a) = (0.0, 0.0);
        let (mut z_a, mut eta_za) = (zeta_switch, eta_switch);
        for i in half..n_points {
            let eta = grid.at(i);
            let w = if eta == 0.0 {
                1.0
            } else if eta <= eta_switch {
                let s = inv.newton(|s| inv.core(s), s_a, eta_a, eta, s_switch)?;
                s_a = s;
                eta_a = eta;
                1.0 - s * s
            } else {
                let z = inv.newton(|z| inv.tail(z), z_a, eta_za, eta, f64::INFINITY)?;
                z_a = z;
                eta_za = eta;
                (-z).exp()
            };
            omega[i] = w;
            omega[n_points - 1 - i] = w;
        }

        let end = omega[n_points - 1];
        if end >= TAIL_TOLERANCE {
            return Err(Error::numerical(format!(
                "eta_max = {eta_max} too small: omega(eta_max) = {end:.3e}"
            )));
        }

        let mut profile = Self::from_values(nl, amplitude, speed, beta, grid, omega);
        profile.tail_rate = nl.deficit(amplitude, end).sqrt();
        Ok(profile)
    }

    fn from_values(
        nl: &Nonlinearity,
        amplitude: f64,
        speed: f64,
        beta: f64,
        grid: UniformGrid,
        omega: Vec<f64>,
    ) -> Self {
        let n = omega.len();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        let mut d3 = vec![0.0; n];
        for i in 0..n {
            let eta = grid.at(i);
            let w = omega[i];
            let sign = if eta > 0.0 {
                -1.0
            } else if eta < 0.0 {
                1.0
            } else {
                0.0
            };
            d1[i] = sign * w * nl.deficit(amplitude, w).max(0.0).sqrt();
            d2[i] = w - nl.g_prime(amplitude * w) / (amplitude * speed);
            d3[i] = d1[i] * (1.0 - nl.g_second(amplitude * w) / speed);
        }
        let outer: Vec<usize> = (0..n).filter(|&i| grid.at(i).abs() >= 0.75 * grid.end()).collect();
        let xs: Vec<f64> = outer.iter().map(|&i| grid.at(i)).collect();
        let ys: Vec<f64> = outer.iter().map(|&i| omega[i]).collect();
        let decay_rate = exponential_decay_rate(&xs, &ys, 1e-300).unwrap_or(f64::NAN);
        Self {
            amplitude,
            speed,
            beta,
            grid,
            omega,
            d1,
            d2,
            d3,
            decay_rate,
            tail_rate: 1.0,
        }
    }

    /// Closed form `ω = cosh((κ−1)η/2)^{-2/(κ−1)}` for `g'(u) = u^κ`, sampled
    /// on `grid`. The shape does not depend on `amplitude`, which only sets
    /// `V` and `β`.
    pub fn power_law(kappa: f64, amplitude: f64, grid: UniformGrid) -> Result<Self> {
        if !(kappa > 1.0) {
            return Err(Error::input(format!("power law needs kappa > 1, got {kappa}")));
        }
        let nl = Nonlinearity::power_law(kappa, amplitude.max(1.0) * 10.0)?;
        let (speed, beta) = speed_and_width(&nl, amplitude)?;
        let omega = grid.points().map(|e| power_law_omega(kappa, e)).collect();
        let mut p = Self::from_values(&nl, amplitude, speed, beta, grid, omega);
        p.tail_rate = 1.0;
        Ok(p)
    }

    pub fn eta_max(&self) -> f64 {
        self.grid.end()
    }

    /// `ω(η)`; beyond the grid the tail continues exponentially.
    pub fn omega_at(&self, eta: f64) -> f64 {
        let m = self.eta_max();
        let a = eta.abs();
        if a <= m {
            quintic_hermite(&self.grid, &self.omega, &self.d1, &self.d2, eta)
        } else {
            self.omega[self.omega.len() - 1] * (-self.tail_rate * (a - m)).exp()
        }
    }

    /// `ω'(η)`.
    pub fn d1_at(&self, eta: f64) -> f64 {
        let m = self.eta_max();
        let a = eta.abs();
        if a <= m {
            quintic_hermite(&self.grid, &self.d1, &self.d2, &self.d3, eta)
        } else {
            -eta.signum() * self.tail_rate * self.omega_at(eta)
        }
    }

    /// `(ω, ω')` at once.
    pub fn eval(&self, eta: f64) -> (f64, f64) {
        (self.omega_at(eta), self.d1_at(eta))
    }

    pub fn moments(&self, nl: &Nonlinearity) -> Result<MomentSet> {
        MomentSet::compute(nl, self)
    }
}

/// `cosh((κ−1)η/2)^{-2/(κ−1)}`, evaluated in log form so the tail never overflows.
pub fn power_law_omega(kappa: f64, eta: f64) -> f64 {
    let p = kappa - 1.0;
    let x = 0.5 * p * eta.abs();
    // ln cosh x = x + ln((1 + e^{-2x})/2)
    let lncosh = x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2;
    (-2.0 / p * lncosh).exp()
}

/// Moment integrals of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a2_prime: f64,
    pub a_g: f64,
    pub a_gprime: f64,
    pub a_g2: f64,
}

impl MomentSet {
    pub fn compute(nl: &Nonlinearity, p: &SolitonProfile) -> Result<Self> {
        let n = p.omega.len();
        let edge = p.omega[0].max(p.omega[n - 1]);
        if edge >= TAIL_TOLERANCE {
            return Err(Error::numerical(format!(
                "profile tail not decayed: omega at grid end = {edge:.3e}"
            )));
        }
        let h = p.grid.step;
        let a = p.amplitude;
        let map = |f: &dyn Fn(usize) -> f64| trapezoid(&(0..n).map(f).collect::<Vec<_>>(), h);
        let w = &p.omega;
        Ok(Self {
            a1: map(&|i| w[i]),
            a2: map(&|i| w[i] * w[i]),
            a3: map(&|i| w[i] * w[i] * w[i]),
            a2_prime: map(&|i| p.d1[i] * p.d1[i]),
            a_g: map(&|i| nl.g(a * w[i])) / nl.g(a),
            a_gprime: map(&|i| nl.g_prime(a * w[i])) / nl.g_prime(a),
            a_g2: map(&|i| nl.g2(a * w[i])) / nl.g2(a),
        })
    }

    /// `F(A)⁻¹ ∫ F(Aω) dη` for an arbitrary `F`.
    pub fn functional(p: &SolitonProfile, f: impl Fn(f64) -> f64) -> f64 {
        let a = p.amplitude;
        let vals: Vec<f64> = p.omega.iter().map(|&w| f(a * w)).collect();
        trapezoid(&vals, p.grid.step) / f(a)
    }
}

/// Relative residuals of the five algebraic moment identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `a₁AV = a_{g'} g'(A)`
    pub speed: f64,
    /// `a₂V + 2a_{g₂}g₂(A)/A² + 3a₂'β² = 0`
    pub energy: f64,
    /// `a₂V − 2a_g g(A)/A² − a₂'β² = 0`
    pub virial: f64,
    /// `a_g g(A) + a_{g₂}g₂(A) + 2a₂'β²A² = 0`
    pub combined: f64,
    /// `a₂' = a₂ − a_g`
    pub derivative: f64,
}

impl IdentityResiduals {
    pub fn as_array(&self) -> [f64; 5] {
        [self.speed, self.energy, self.virial, self.combined, self.derivative]
    }

    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }
}

fn relative(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

pub fn identity_residuals(nl: &Nonlinearity, amplitude: f64, m: &MomentSet) -> IdentityResiduals {
    let a = amplitude;
    let v = 2.0 * nl.g1(a);
    let b2 = v;
    let (g, gp, g2) = (nl.g(a), nl.g_prime(a), nl.g2(a));
    IdentityResiduals {
        speed: relative(&[m.a1 * a * v, -m.a_gprime * gp]),
        energy: relative(&[m.a2 * v, 2.0 * m.a_g2 * g2 / (a * a), 3.0 * m.a2_prime * b2]),
        virial: relative(&[m.a2 * v, -2.0 * m.a_g * g / (a * a), -m.a2_prime * b2]),
        combined: relative(&[m.a_g * g, m.a_g2 * g2, 2.0 * m.a2_prime * b2 * a * a]),
        derivative: relative(&[m.a2_prime, -m.a2, m.a_g]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PowerTerm;

    #[test]
    fn speeds() {
        let (v, b) = speed_and_width(&Nonlinearity::kdv(), 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15 && (b * b - v).abs() < 1e-15);
        let cubic = Nonlinearity::power_law(3.0, 10.0).unwrap();
        assert!((speed_and_width(&cubic, 2.0).unwrap().0 - 2.0).abs() < 1e-14);
        assert!(speed_and_width(&cubic, 0.0).is_err());
        assert!(speed_and_width(&cubic, 1e-12).unwrap().0 < 1e-20);
    }

    #[test]
    fn kdv_value_at_two() {
        let p = SolitonProfile::solve(&Nonlinearity::kdv(), 3.0).unwrap();
        let expect = 1.0 / 1f64.cosh().powi(2);
        assert!((p.omega_at(2.0) - expect).abs() < 1e-12);
        assert!((expect - 0.419974).abs() < 1e-6);
        assert_eq!(p.omega_at(0.0), 1.0);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(power_law_omega(2.0, 0.0), 1.0);
        assert!((power_law_omega(3.0, 1.0) - 0.648054).abs() < 1e-6);
        assert!((power_law_omega(1.5, 4.0) - 1f64.cosh().powi(-4)).abs() < 1e-15);
        assert!((power_law_omega(1.5, 4.0) - 0.176380).abs() < 5e-6);
        assert!((power_law_omega(3.0, 1.0) - 1.0 / 1f64.cosh()).abs() < 1e-15);
        assert!(power_law_omega(2.0, 2000.0) >= 0.0);
        let g = UniformGrid::symmetric(10.0, 101);
        assert!(SolitonProfile::power_law(1.0, 1.0, g).is_err());
    }

    #[test]
    fn even_and_monotone() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.4, 0.5), PowerTerm::new(0.1, 2.0)],
            100.0,
        )
        .unwrap();
        let p = SolitonProfile::solve(&nl, 5.0).unwrap();
        let n = p.omega.len();
        for i in 0..n {
            assert_eq!(p.omega[i], p.omega[n - 1 - i]);
        }
        for i in n / 2..n - 1 {
            assert!(p.omega[i + 1] < p.omega[i]);
            assert!(p.omega[i + 1] > 0.0);
        }
        assert!((p.decay_rate - 1.0).abs() < 0.05, "{}", p.decay_rate);
    }

    #[test]
    fn ode_residual_by_finite_differences() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.3, 0.7), PowerTerm::new(0.05, 3.0)],
            100.0,
        )
        .unwrap();
        let a = 2.5;
        let p = SolitonProfile::solve(&nl, a).unwrap();
        let h = p.grid.step;
        let n = p.omega.len();
        let w = &p.omega;
        let mut worst = 0.0f64;
        for i in n / 2 + 1..n - 4 {
            // sixth-order central difference
            let fd = (-w[i - 3] + 9.0 * w[i - 2] - 45.0 * w[i - 1] + 45.0 * w[i + 1]
                - 9.0 * w[i + 2]
                + w[i + 3])
                / (60.0 * h);
            let rhs = -w[i] * nl.deficit(a, w[i]).sqrt();
            worst = worst.max((fd - rhs).abs());
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn kdv_moments() {
        let nl = Nonlinearity::kdv();
        let m = SolitonProfile::solve(&nl, 1.0).unwrap().moments(&nl).unwrap();
        assert!((m.a1 - 4.0).abs() < 1e-9);
        assert!((m.a2 - 8.0 / 3.0).abs() < 1e-9);
        assert!((m.a3 - 32.0 / 15.0).abs() < 1e-9);
        assert!((m.a2_prime - 8.0 / 15.0).abs() < 1e-9);
        assert!((m.a_g - m.a3).abs() < 1e-9);
        assert!((m.a_gprime - m.a2).abs() < 1e-9);
        assert!(m.a_g2 > 0.0);
        let r = identity_residuals(&nl, 1.0, &m);
        assert!(r.max() < 1e-9, "{r:?}");
    }

    #[test]
    fn amplitude_sensitivity_is_localised() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.5, 0.5), PowerTerm::new(0.2, 1.5)],
            100.0,
        )
        .unwrap();
        let (a, da) = (2.0, 1e-4);
        let lo = SolitonProfile::solve_with(&nl, a - da, 60.0, 6145).unwrap();
        let hi = SolitonProfile::solve_with(&nl, a + da, 60.0, 6145).unwrap();
        let d = |eta: f64| (hi.omega_at(eta) - lo.omega_at(eta)) / (2.0 * da);
        assert!(d(0.0).abs() < 1e-6);
        assert!(d(60.0).abs() < 1e-6);
        assert!(d(3.0).abs() > 1e-3);
    }

    #[test]
    fn tail_extension_is_continuous() {
        let nl = Nonlinearity::kdv();
        let p = SolitonProfile::solve_with(&nl, 1.0, 40.0, 4097).unwrap();
        let m = p.eta_max();
        assert!((p.omega_at(m + 1e-12) - p.omega_at(m)).abs() < 1e-25);
        assert!((p.omega_at(45.0) / power_law_omega(2.0, 45.0) - 1.0).abs() < 1e-6);
        assert!((p.d1_at(-45.0) - p.omega_at(45.0)).abs() < 1e-6 * p.omega_at(45.0));
    }

    #[test]
    fn short_domain_is_rejected() {
        let err = SolitonProfile::solve_with(&Nonlinearity::kdv(), 1.0, 10.0, 1025).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("eta_max")));
    }
}
