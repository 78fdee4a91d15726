//! Least-squares fits used for convergence orders and decay rates.

/// Ordinary least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Observed order `p` in `value ≈ C h^p`, fitted in log–log space.
pub fn convergence_order(h: &[f64], values: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    if ly.iter().any(|v| !v.is_finite()) {
        return None;
    }
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// Rate `r` in `|y| ≈ C e^{-r |x|}` fitted over the samples whose magnitude is
/// above `floor`. Returns `None` when fewer than three samples qualify.
pub fn exponential_decay_rate(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let (px, py): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() > floor && y.is_finite())
        .map(|(x, y)| (x.abs(), y.abs().ln()))
        .unzip();
    if px.len() < 3 {
        return None;
    }
    linear_fit(&px, &py).map(|(s, _)| -s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law_order() {
        let h = [0.1, 0.05, 0.025];
        let v: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(2.0)).collect();
        assert!((convergence_order(&h, &v).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_decay_rate_and_ignores_noise() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| if *x < 30.0 { 2.0 * (-0.7 * x).exp() } else { 1e-20 })
            .collect();
        let r = exponential_decay_rate(&xs, &ys, 1e-15).unwrap();
        assert!((r - 0.7).abs() < 1e-10);
    }
}
