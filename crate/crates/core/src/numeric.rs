//! Small numerical kernels: bracketed root finding, golden-section search,
//! least squares and tail-index regression.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("no sign change in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("regression needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

/// Root of `f` in `[lo, hi]` by a secant step safeguarded with bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them vanish).
/// Terminates when the bracket is narrower than `xtol`.
pub fn bisect_secant<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, NumericError> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericError::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        let width = hi - lo;
        if width.abs() <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        // Fall back to bisection whenever the secant step leaves the middle
        // 90% of the bracket; keeps the width shrinking geometrically.
        let guard = 0.05 * width;
        let x = if secant.is_finite() && secant > lo + guard && secant < hi - guard {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    if (hi - lo).abs() <= xtol * 16.0 {
        Ok(0.5 * (lo + hi))
    } else {
        Err(NumericError::NoConvergence(max_iter))
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    [(x1, f1), (x2, f2), (x, fx)]
        .into_iter()
        .fold((x, fx), |best, c| if c.1 < best.1 { c } else { best })
}

/// Minimum of `f` on `[lo, hi]`: a uniform grid locates the best cell, golden
/// section refines inside its two neighbouring cells.
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize, xtol: f64) -> (f64, f64) {
    let n = points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let (best_i, _) = (0..n)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    golden_section(&f, a, b, xtol)
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, NumericError> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(NumericError::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_std_err = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_std_err,
        n,
    })
}

/// Tail index from a log-rank regression on the largest `fraction` of the
/// sample: `ln(i / n)` against `ln x_(i)`, slope `-alpha`.
pub fn tail_index_rank_regression(samples: &[f64], fraction: f64) -> Result<LinearFit, NumericError> {
    let mut sorted: Vec<f64> = samples.iter().cloned().filter(|v| *v > 0.0 && v.is_finite()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let k = ((n as f64 * fraction).round() as usize).min(n);
    if k < 3 {
        return Err(NumericError::TooFewPoints { needed: 3, got: k });
    }
    let xs: Vec<f64> = sorted[..k].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = (1..=k).map(|i| (i as f64 / n as f64).ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(LinearFit {
        slope: -fit.slope,
        ..fit
    })
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `(sin(pi y) / (pi y))^2` for `y = s / b^m`, with the fractional part of `y`
/// reduced in integer arithmetic so that integer `y` gives exactly zero.
pub fn sinc_sq_badic(s: u64, b: u32, m: u32) -> f64 {
    if s == 0 {
        return 1.0;
    }
    let y = s as f64 / (b as f64).powi(m as i32);
    let frac = badic_frac(s, b, m);
    let num = (std::f64::consts::PI * frac).sin();
    let den = std::f64::consts::PI * y;
    (num / den) * (num / den)
}

/// Fractional part of `s / b^m`, exact when `b^m` fits in `u64`.
pub fn badic_frac(s: u64, b: u32, m: u32) -> f64 {
    match (b as u64).checked_pow(m) {
        Some(p) => (s % p) as f64 / p as f64,
        None => {
            let y = s as f64 / (b as f64).powi(m as i32);
            y - y.floor()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn root_of_cubic() {
        let r = bisect_secant(|x| x * x * x - 2.0, 0.0, 4.0, 1e-14, 200).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-13);
        assert!(bisect_secant(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_section(|t| (t - 0.7).powi(2) + 3.0, 0.5, 1.0, 1e-12);
        assert!((x - 0.7).abs() < 1e-6);
        assert_relative_eq!(fx, 3.0, epsilon = 1e-12);
        let (x, _) = grid_then_golden(|t| (t - 0.5).abs(), 0.5, 1.0, 64, 1e-12);
        assert!(x < 0.5 + 1e-9);
    }

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 0.75 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, -0.75, epsilon = 1e-14);
        assert_relative_eq!(fit.intercept, 2.5, epsilon = 1e-14);
        assert!(fit.slope_std_err < 1e-12);
        assert!(linear_fit(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn pareto_tail_index() {
        // Exact Pareto(1.5) quantiles.
        let n = 20_000;
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 / (n as f64 + 1.0)).powf(-1.0 / 1.5)).collect();
        let fit = tail_index_rank_regression(&xs, 0.05).unwrap();
        assert!((fit.slope - 1.5).abs() < 0.02, "{}", fit.slope);
    }

    #[test]
    fn sinc_vanishes_on_badic_integers() {
        assert_eq!(sinc_sq_badic(9, 3, 1), 0.0);
        assert_eq!(sinc_sq_badic(27, 3, 2), 0.0);
        let v = sinc_sq_badic(1, 2, 1);
        assert_relative_eq!(v, 4.0 / std::f64::consts::PI.powi(2), epsilon = 1e-15);
        assert_relative_eq!(log_add_exp(0.0, 0.0), 2f64.ln());
    }
}
