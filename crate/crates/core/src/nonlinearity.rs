//! Nonlinearities of the form `g(u) = u² g₁(u)` with a power-sum factor
//! `g₁(z) = Σ c_k z^{q_k}`, and the derived functions used by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of log-spaced samples used by the admissibility checks.
pub const VALIDATION_POINTS: usize = 1024;

/// Lower end of the validation grid relative to `u_max`.
const VALIDATION_SPAN: f64 = 1e-8;

/// One term `c z^q` of the power sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }
}

/// Validated nonlinearity. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    terms: Vec<PowerTerm>,
    u_max: f64,
}

/// All derived values at one point `u ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub g1: f64,
    pub g1_prime: f64,
    pub g: f64,
    pub g_prime: f64,
    pub g2: f64,
}

/// Outcome of one admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Admissibility report. Never an error by itself; [`Nonlinearity::power_sum`]
/// turns a failing report into [`Error::Inadmissible`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<Check>,
    /// Lower growth exponent offset used for the envelope check.
    pub delta1: f64,
    /// Upper growth exponent offset used for the envelope check.
    pub delta2: f64,
    /// `min g'(u)/u^{1+δ₁}` on the grid (envelope constant `c₁`).
    pub envelope_lower: f64,
    /// `max g'(u)/u^{5-δ₂}` on the grid (envelope constant `c₂`).
    pub envelope_upper: f64,
}

impl AdmissibilityReport {
    /// The structural conditions (ordering and positivity) all pass.
    /// The growth envelope is reported only.
    pub fn is_admissible(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name != "growth envelope")
            .all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[inline]
fn pow(z: f64, q: f64) -> f64 {
    if q == 1.0 {
        z
    } else if q == 2.0 {
        z * z
    } else {
        z.powf(q)
    }
}

fn validation_grid(u_max: f64) -> impl Iterator<Item = f64> {
    let lo = (u_max * VALIDATION_SPAN).ln();
    let hi = u_max.ln();
    (0..VALIDATION_POINTS).map(move |i| {
        if i + 1 == VALIDATION_POINTS {
            u_max
        } else {
            (lo + (hi - lo) * i as f64 / (VALIDATION_POINTS - 1) as f64).exp()
        }
    })
}

/// Runs every admissibility check on raw terms.
pub fn check_terms(terms: &[PowerTerm], u_max: f64) -> AdmissibilityReport {
    let mut checks = Vec::new();

    let nonempty = !terms.is_empty();
    checks.push(Check {
        name: "nonempty",
        passed: nonempty,
        detail: format!("{} term(s)", terms.len()),
    });
    let finite = terms
        .iter()
        .all(|t| t.coeff.is_finite() && t.exponent.is_finite())
        && u_max.is_finite()
        && u_max > 0.0;
    checks.push(Check {
        name: "finite parameters",
        passed: finite,
        detail: format!("u_max = {u_max}"),
    });

    let ordered = nonempty
        && terms[0].exponent > 0.0
        && terms.windows(2).all(|w| w[0].exponent < w[1].exponent)
        && terms.last().map(|t| t.exponent < 4.0).unwrap_or(false);
    let exps: Vec<String> = terms.iter().map(|t| t.exponent.to_string()).collect();
    checks.push(Check {
        name: "exponent ordering",
        passed: ordered,
        detail: format!("0 < {} < 4 required", exps.join(" < ")),
    });

    let probe = Nonlinearity {
        terms: terms.to_vec(),
        u_max,
    };
    let (mut worst_g1, mut worst_g1p) = (f64::INFINITY, f64::INFINITY);
    let (mut at_g1, mut at_g1p) = (0.0, 0.0);
    let (mut env_lo, mut env_hi) = (f64::INFINITY, 0.0f64);
    let delta1 = terms.first().map(|t| t.exponent).unwrap_or(f64::NAN);
    let delta2 = terms.last().map(|t| 4.0 - t.exponent).unwrap_or(f64::NAN);
    if nonempty && finite {
        for u in validation_grid(u_max) {
            let g1 = probe.g1(u);
            let g1p = probe.g1_prime(u);
            // scale-free comparisons: g₁ ~ u^{q₁}, g₁' ~ u^{q₁-1} near zero
            let s1 = g1 / pow(u, delta1);
            let s2 = g1p * u / pow(u, delta1);
            if s1 < worst_g1 {
                worst_g1 = s1;
                at_g1 = u;
            }
            if s2 < worst_g1p {
                worst_g1p = s2;
                at_g1p = u;
            }
            let gp = probe.g_prime(u);
            env_lo = env_lo.min(gp / pow(u, 1.0 + delta1));
            env_hi = env_hi.max(gp / pow(u, 5.0 - delta2));
        }
    }
    let g1_ok = nonempty && finite && worst_g1 > 0.0;
    let g1p_ok = nonempty && finite && worst_g1p > 0.0;
    checks.push(Check {
        name: "g1 > 0",
        passed: g1_ok,
        detail: format!("min g1(u)/u^q1 = {worst_g1:.6e} at u = {at_g1:.6e}"),
    });
    checks.push(Check {
        name: "g1' > 0",
        passed: g1p_ok,
        detail: format!("min u g1'(u)/u^q1 = {worst_g1p:.6e} at u = {at_g1p:.6e}"),
    });
    let env_ok = nonempty && finite && env_lo > 0.0 && env_hi.is_finite();
    checks.push(Check {
        name: "growth envelope",
        passed: env_ok,
        detail: format!(
            "c1 = {env_lo:.6e} (delta1 = {delta1}), c2 = {env_hi:.6e} (delta2 = {delta2})"
        ),
    });

    AdmissibilityReport {
        checks,
        delta1,
        delta2,
        envelope_lower: env_lo,
        envelope_upper: env_hi,
    }
}

impl Nonlinearity {
    /// Builds and validates `g₁(z) = Σ c_k z^{q_k}` on `(0, u_max]`.
    pub fn power_sum(terms: Vec<PowerTerm>, u_max: f64) -> Result<Self> {
        let report = check_terms(&terms, u_max);
        if !report.is_admissible() {
            let why: Vec<String> = report
                .failures()
                .iter()
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            return Err(Error::Inadmissible(why.join("; ")));
        }
        Ok(Self { terms, u_max })
    }

    /// Homogeneous `g'(u) = u^κ`, i.e. `g₁(u) = u^{κ-1}/(κ+1)`, for `1 < κ < 5`.
    pub fn power_law(kappa: f64, u_max: f64) -> Result<Self> {
        if !(kappa > 1.0 && kappa < 5.0) {
            return Err(Error::input(format!(
                "power law exponent kappa = {kappa} must lie in (1, 5)"
            )));
        }
        Self::power_sum(vec![PowerTerm::new(1.0 / (kappa + 1.0), kappa - 1.0)], u_max)
    }

    /// The KdV case `g'(u) = u²`.
    pub fn kdv() -> Self {
        Self::power_law(2.0, 1e6).expect("KdV nonlinearity is admissible")
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// `Some(κ)` when `g'(u) = u^κ` exactly (single term with `c = 1/(κ+1)`).
    pub fn power_law_exponent(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [t] => {
                let kappa = t.exponent + 1.0;
                ((t.coeff * (kappa + 1.0) - 1.0).abs() < 1e-14).then_some(kappa)
            }
            _ => None,
        }
    }

    /// Single-term nonlinearities have an amplitude-independent profile shape.
    pub fn is_homogeneous(&self) -> bool {
        self.terms.len() == 1
    }

    /// Leading term `(c_n, q_n)`.
    pub fn leading(&self) -> PowerTerm {
        *self.terms.last().expect("validated nonlinearity is nonempty")
    }

    /// `q' = 2/q_n` from the large-amplitude relation `A ≈ c' β^{q'}`.
    pub fn q_prime(&self) -> f64 {
        2.0 / self.leading().exponent
    }

    /// `c' = (2 c_n)^{-1/q_n}`.
    pub fn c_prime(&self) -> f64 {
        let PowerTerm { coeff, exponent } = self.leading();
        (2.0 * coeff).powf(-1.0 / exponent)
    }

    pub fn validate(&self) -> AdmissibilityReport {
        check_terms(&self.terms, self.u_max)
    }

    pub fn g1(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|t| t.coeff * pow(u, t.exponent)).sum()
    }

    pub fn g1_prime(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| t.coeff * t.exponent * pow(u, t.exponent - 1.0))
            .sum()
    }

    pub fn g(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        u * u * self.g1(u)
    }

    /// `g'(u) = Σ c_k (2 + q_k) u^{1+q_k}`; zero for `u ≤ 0`.
    pub fn g_prime(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| t.coeff * (2.0 + t.exponent) * pow(u, 1.0 + t.exponent))
            .sum()
    }

    /// `g''(u) = Σ c_k (2 + q_k)(1 + q_k) u^{q_k}`; zero for `u ≤ 0`.
    pub fn g_second(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| t.coeff * (2.0 + t.exponent) * (1.0 + t.exponent) * pow(u, t.exponent))
            .sum()
    }

    /// `g₂(u) = g(u) − u g'(u) = −Σ c_k (1 + q_k) u^{2+q_k}`; zero for `u ≤ 0`.
    pub fn g2(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        -self
            .terms
            .iter()
            .map(|t| t.coeff * (1.0 + t.exponent) * pow(u, 2.0 + t.exponent))
            .sum::<f64>()
    }

    /// All derived quantities at `u ≥ 0`.
    pub fn evaluate(&self, u: f64) -> Result<Derived> {
        if !(u >= 0.0) {
            return Err(Error::input(format!("nonlinearity evaluated at u = {u} < 0")));
        }
        Ok(Derived {
            g1: self.g1(u),
            g1_prime: self.g1_prime(u),
            g: self.g(u),
            g_prime: self.g_prime(u),
            g2: self.g2(u),
        })
    }

    /// `1 − g₁(A(1−s²))/g₁(A)` divided by `s²`, computed without cancellation.
    /// At `s = 0` returns the limit `A g₁'(A)/g₁(A)`.
    pub(crate) fn deficit_over_s2(&self, amplitude: f64, s: f64) -> f64 {
        let g1a = self.g1(amplitude);
        let s2 = s * s;
        let sum: f64 = if s2 == 0.0 {
            self.terms
                .iter()
                .map(|t| t.coeff * pow(amplitude, t.exponent) * t.exponent)
                .sum()
        } else {
            let l = (-s2).ln_1p();
            self.terms
                .iter()
                .map(|t| t.coeff * pow(amplitude, t.exponent) * (-(t.exponent * l).exp_m1()) / s2)
                .sum()
        };
        sum / g1a
    }

    /// `1 − g₁(A e^{-ζ})/g₁(A)` for `ζ ≥ 0`, computed without cancellation.
    pub(crate) fn deficit_log(&self, amplitude: f64, zeta: f64) -> f64 {
        let g1a = self.g1(amplitude);
        self.terms
            .iter()
            .map(|t| t.coeff * pow(amplitude, t.exponent) * (-(-t.exponent * zeta).exp_m1()))
            .sum::<f64>()
            / g1a
    }

    /// `1 − g₁(A ω)/g₁(A)` for `0 ≤ ω ≤ 1`.
    pub fn deficit(&self, amplitude: f64, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 1.0;
        }
        if omega >= 0.5 {
            let s = (1.0 - omega).max(0.0).sqrt();
            s * s * self.deficit_over_s2(amplitude, s)
        } else {
            self.deficit_log(amplitude, -omega.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn kdv_values() {
        let nl = Nonlinearity::power_sum(vec![PowerTerm::new(1.0 / 3.0, 1.0)], 10.0).unwrap();
        let d = nl.evaluate(1.0).unwrap();
        assert!((d.g1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.g - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.g_prime - 1.0).abs() < 1e-15);
        assert!((d.g2 + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(nl.power_law_exponent(), Some(2.0));
    }

    #[test]
    fn three_halves_values() {
        let nl = Nonlinearity::power_sum(vec![PowerTerm::new(0.4, 0.5)], 10.0).unwrap();
        let d = nl.evaluate(4.0).unwrap();
        assert!(rel(d.g_prime, 8.0) < 1e-14);
        assert!(rel(d.g, 12.8) < 1e-14);
        assert!(rel(d.g2, -19.2) < 1e-14);
    }

    #[test]
    fn zero_is_zero() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.3, 0.25), PowerTerm::new(0.1, 2.5)],
            10.0,
        )
        .unwrap();
        let d = nl.evaluate(0.0).unwrap();
        assert_eq!(
            d,
            Derived {
                g1: 0.0,
                g1_prime: 0.0,
                g: 0.0,
                g_prime: 0.0,
                g2: 0.0
            }
        );
        assert_eq!(nl.g_second(0.0), 0.0);
    }

    #[test]
    fn negative_u_is_rejected() {
        assert!(matches!(
            Nonlinearity::kdv().evaluate(-1e-3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn exponent_ordering_errors() {
        let err = Nonlinearity::power_sum(vec![PowerTerm::new(1.0, 5.0)], 10.0).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(ref m) if m.contains("exponent ordering")));
        assert!(Nonlinearity::power_sum(
            vec![PowerTerm::new(1.0, 2.0), PowerTerm::new(1.0, 1.0)],
            10.0
        )
        .is_err());
        assert!(Nonlinearity::power_sum(vec![PowerTerm::new(1.0, 0.0)], 10.0).is_err());
        assert!(Nonlinearity::power_sum(vec![], 10.0).is_err());
    }

    #[test]
    fn mixed_sign_report() {
        // g₁' = 0.5/√z − 0.2 changes sign at z = 6.25
        let r = check_terms(&[PowerTerm::new(1.0, 0.5), PowerTerm::new(-0.2, 1.0)], 10.0);
        assert!(!r.is_admissible());
        let bad: Vec<_> = r.failures().iter().map(|c| c.name).collect();
        assert!(bad.contains(&"g1' > 0"), "{bad:?}");
        assert!(!bad.contains(&"exponent ordering"));
        // below the turning point the same terms pass
        assert!(check_terms(&[PowerTerm::new(1.0, 0.5), PowerTerm::new(-0.2, 1.0)], 6.0)
            .is_admissible());
    }

    #[test]
    fn near_quartic_passes() {
        let r = check_terms(&[PowerTerm::new(1.0, 3.9)], 10.0);
        assert!(r.is_admissible());
        assert!(r.checks.iter().all(|c| c.passed));
        assert!((r.delta1 - 3.9).abs() < 1e-15 && (r.delta2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn kdv_report_all_pass() {
        let r = Nonlinearity::kdv().validate();
        assert!(r.checks.iter().all(|c| c.passed), "{r:?}");
        // g' = u² = u^{1+δ₁} exactly
        assert!((r.envelope_lower - 1.0).abs() < 1e-12);
        assert!((r.envelope_upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deficits_agree_with_direct_formula() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.3, 0.5), PowerTerm::new(0.2, 1.5)],
            100.0,
        )
        .unwrap();
        let a = 3.0;
        for w in [0.999, 0.9, 0.6, 0.5, 0.3, 1e-3, 1e-9] {
            let direct = 1.0 - nl.g1(a * w) / nl.g1(a);
            assert!((nl.deficit(a, w) - direct).abs() < 1e-13, "w={w}");
        }
        let lim = a * nl.g1_prime(a) / nl.g1(a);
        assert!((nl.deficit_over_s2(a, 0.0) - lim).abs() < 1e-14);
        assert!((nl.deficit_over_s2(a, 1e-9) - lim).abs() < 1e-9);
    }

    #[test]
    fn derivatives_are_consistent() {
        let nl = Nonlinearity::power_sum(
            vec![PowerTerm::new(0.5, 0.3), PowerTerm::new(0.05, 2.2)],
            50.0,
        )
        .unwrap();
        for u in [0.01, 0.5, 2.0, 17.0] {
            let h = 1e-5 * u;
            let fd = (nl.g_prime(u + h) - nl.g_prime(u - h)) / (2.0 * h);
            assert!(rel(nl.g_second(u), fd) < 1e-7);
        }
    }
}
