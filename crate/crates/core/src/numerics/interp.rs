//! Interpolation on uniform grids.

/// Uniform grid description: `x_i = start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    symmetric: bool,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, len: usize) -> Self {
        assert!(len >= 2 && end > start);
        Self {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
            symmetric: false,
        }
    }

    /// Symmetric grid on `[-half_width, half_width]`; nodes `i` and `len-1-i`
    /// are exact negatives of each other.
    pub fn symmetric(half_width: f64, len: usize) -> Self {
        Self {
            symmetric: true,
            ..Self::new(-half_width, half_width, len)
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        if self.symmetric {
            // (i - c) * h with c half-integer or integer keeps mirror symmetry exact
            let c = 0.5 * (self.len - 1) as f64;
            (i as f64 - c) * self.step
        } else {
            self.start + i as f64 * self.step
        }
    }

    pub fn end(&self) -> f64 {
        self.start + (self.len - 1) as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }

    /// Cell index and local coordinate in `[0, 1]`, clamped to the grid.
    fn locate(&self, x: f64) -> (usize, f64) {
        let pos = (x - self.start) / self.step;
        let i = (pos.floor().max(0.0) as usize).min(self.len - 2);
        (i, pos - i as f64)
    }
}

/// Quintic Hermite interpolation from values, first and second derivatives.
pub fn quintic_hermite(
    grid: &UniformGrid,
    y: &[f64],
    dy: &[f64],
    d2y: &[f64],
    x: f64,
) -> f64 {
    let (i, t) = grid.locate(x);
    let h = grid.step;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    y[i] * h0
        + h * dy[i] * h1
        + h * h * d2y[i] * h2
        + h * h * d2y[i + 1] * h3
        + h * dy[i + 1] * h4
        + y[i + 1] * h5
}

/// Six-point Lagrange interpolation on a uniform grid (fifth-order accurate).
///
/// Near the ends the stencil is shifted inward; outside the grid the caller
/// decides what to do, this function extrapolates.
pub fn lagrange6(grid: &UniformGrid, y: &[f64], x: f64) -> f64 {
    const W: usize = 6;
    debug_assert!(grid.len >= W);
    let pos = (x - grid.start) / grid.step;
    let base = (pos.floor() as isize - 2).clamp(0, (grid.len - W) as isize) as usize;
    let u = pos - base as f64;
    let mut acc = 0.0;
    for j in 0..W {
        let mut l = 1.0;
        for m in 0..W {
            if m != j {
                l *= (u - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += l * y[base + j];
    }
    acc
}

/// Cubic Hermite interpolation on an arbitrary interval.
pub fn cubic_hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}
