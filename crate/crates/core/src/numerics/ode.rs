//! Explicit Runge–Kutta integrators for small autonomous or time-dependent systems.

use crate::error::{Error, Result};

/// Tolerances and step limits for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Dormand–Prince 5(4) with PI-free classic step control.
///
/// The integrator keeps its last accepted step size so that repeated calls to
/// [`Dopri5::advance`] over consecutive output intervals stay efficient.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerance,
    h: Option<f64>,
    pub steps_taken: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            h: None,
            steps_taken: 0,
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn advance<const N: usize, F>(
        &mut self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
    ) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = self
            .h
            .map(|h| h.abs())
            .unwrap_or_else(|| (span.abs() * 1e-3).max(self.tol.h_min))
            .min(span.abs());
        let mut k1 = f(t, &y)?;
        let mut steps = 0usize;
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 1e-15 * span.abs().max(1.0) {
                break;
            }
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;
            let k2 = f(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs))?;
            let k3 = f(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs))?;
            let k4 = f(
                t + C4 * hs,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs),
            )?;
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            )?;
            let k6 = f(
                t + hs,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    hs,
                ),
            )?;
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                hs,
            );
            let t_new = if last { t1 } else { t + hs };
            let k7 = f(t_new, &y_new)?;
            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::numerical("non-finite state in adaptive integrator"));
            }
            steps += 1;
            if steps > self.tol.max_steps {
                return Err(Error::numerical("adaptive integrator exceeded step budget"));
            }
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                self.steps_taken += 1;
                if !last {
                    self.h = Some(h);
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if err > 1.0 && h < self.tol.h_min {
                return Err(Error::numerical(format!(
                    "step size underflow at t = {t}"
                )));
            }
            if err <= 1.0 && last {
                break;
            }
        }
        Ok(y)
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(mut f: F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k1)], h))?;
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k2)], h))?;
    let k4 = f(t + h, &axpy(y, &[(1.0, &k3)], h))?;
    Ok(axpy(
        y,
        &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        h,
    ))
}
