//! Small numerical helpers shared across modules.

use num_complex::Complex64;

/// Builds `exp(ln_mag) * e^{i phase}`, returning exact zero for `ln_mag = -inf`.
#[inline]
pub fn from_log_polar(ln_mag: f64, phase: f64) -> Complex64 {
    if ln_mag == f64::NEG_INFINITY {
        return Complex64::new(0.0, 0.0);
    }
    let (s, c) = phase.sin_cos();
    let m = ln_mag.exp();
    Complex64::new(m * c, m * s)
}

/// `ln Σ exp(x_i)` computed with max-shift rescaling.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Natural log of `n!`. Exact products below 171, log-gamma above.
pub fn ln_factorial(n: u64) -> f64 {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(171);
        let mut acc = 1.0_f64;
        out.push(0.0);
        for k in 1..=170u32 {
            acc *= k as f64;
            out.push(acc.ln());
        }
        out
    });
    match table.get(n as usize) {
        Some(v) => *v,
        None => libm::lgamma(n as f64 + 1.0),
    }
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Relative deviation `|a - b| / max(|b|, floor)`.
#[inline]
pub fn rel_dev(a: Complex64, b: Complex64, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_products_and_gamma() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        // crossover between table and lgamma is smooth
        let a = ln_factorial(170);
        let b = libm::lgamma(171.0);
        assert!((a - b).abs() / a < 1e-14);
        assert!((ln_factorial(171) - a - 171f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let (s, c) = linear_fit(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-13);
    }
}
