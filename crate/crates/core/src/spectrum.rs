//! Exact Fourier coefficients of piecewise-constant cascade fields.
//!
//! A depth-`n` field has constant density on each b-adic interval, so
//! `mu_hat(s) = K_n(s) * DFT(masses)[s mod b^n]` with
//! `K_n(s) = (1 - e^(-2 pi i s / b^n)) / (2 pi i s / b^n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::cascade::CascadeField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("interval [{0}, {1}] is not a subinterval of [0, 1]")]
    BadInterval(f64, f64),
}

/// Coefficients `mu_hat(s)` for `s = 0..=kmax` of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub b: u32,
    pub depth: u32,
    pub seed: u64,
    pub base_tag: u32,
    pub kmax: u64,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn abs2(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

fn leaves(field: &CascadeField) -> u64 {
    field.masses.len() as u64
}

/// `K_n(s)` for a field with `len = b^n` leaves; exactly zero at nonzero
/// multiples of `len`.
pub fn kernel(s: u64, len: u64) -> Complex64 {
    if s == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let r = s % len;
    if r == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let theta = 2.0 * PI * (r as f64 / len as f64);
    let num = Complex64::new(1.0 - theta.cos(), theta.sin());
    let den = Complex64::new(0.0, 2.0 * PI * (s as f64 / len as f64));
    num / den
}

/// All coefficients `0..=kmax` from one FFT of the leaf masses.
pub fn fourier_all(field: &CascadeField, kmax: u64) -> Spectrum {
    let len = leaves(field);
    let dft = dft(&field.masses);
    let coeffs = (0..=kmax)
        .map(|s| kernel(s, len) * dft[(s % len) as usize])
        .collect();
    Spectrum {
        b: field.b(),
        depth: field.depth,
        seed: field.seed(),
        base_tag: field.base.tag(),
        kmax,
        coeffs,
    }
}

fn dft(masses: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = masses.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    if buf.len() > 1 {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `sum_k masses[k] e^(-2 pi i s k / len)`, with the phase reduced exactly.
fn direct_sum(masses: &[f64], s: u64) -> Complex64 {
    let len = masses.len() as u64;
    let r = s % len;
    if r == 0 {
        return Complex64::new(masses.iter().sum(), 0.0);
    }
    let g = gcd(r, len);
    let period = len / g;
    let step = r / g;
    let table: Vec<Complex64> = (0..period)
        .map(|j| {
            let theta = -2.0 * PI * (j as f64 / period as f64);
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    let mut idx = 0u64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &m in masses {
        if m != 0.0 {
            acc += table[idx as usize] * m;
        }
        idx += step;
        if idx >= period {
            idx -= period;
        }
    }
    acc
}

/// `mu_hat(s)` by direct summation over the leaves.
pub fn fourier_at(field: &CascadeField, s: u64) -> Complex64 {
    kernel(s, leaves(field)) * direct_sum(&field.masses, s)
}

/// Unit roots `e^(-2 pi i j / len)` shared across many fields of one size.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    len: u64,
    table: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(len: u64) -> Self {
        let table = (0..len)
            .map(|j| {
                let theta = -2.0 * PI * (j as f64 / len as f64);
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        PhaseTable { len, table }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    /// `mu_hat(s)` for every `s` in `freqs`, in one pass over the leaves.
    ///
    /// # Panics
    /// If `masses.len()` differs from the table length.
    pub fn coeffs(&self, masses: &[f64], freqs: &[u64]) -> Vec<Complex64> {
        assert_eq!(masses.len() as u64, self.len, "phase table built for another depth");
        let steps: Vec<u64> = freqs.iter().map(|s| s % self.len).collect();
        let mut idx = vec![0u64; freqs.len()];
        let mut acc = vec![Complex64::new(0.0, 0.0); freqs.len()];
        for &m in masses {
            for ((a, i), st) in acc.iter_mut().zip(idx.iter_mut()).zip(&steps) {
                if m != 0.0 {
                    *a += self.table[*i as usize] * m;
                }
                *i += st;
                if *i >= self.len {
                    *i -= self.len;
                }
            }
        }
        acc.iter()
            .zip(freqs)
            .map(|(a, &s)| kernel(s, self.len) * a)
            .collect()
    }
}

/// `mu_hat_n(b^m)`; zero when `m >= depth`.
pub fn badic_coeff(field: &CascadeField, m: u32) -> Complex64 {
    if m >= field.depth {
        return Complex64::new(0.0, 0.0);
    }
    fourier_at(field, (field.b() as u64).pow(m))
}

/// `int_a^c e^(-2 pi i s t) dt` for `s = 0..=kmax`.
fn segment(a: f64, c: f64, s: u64) -> Complex64 {
    if s == 0 {
        return Complex64::new(c - a, 0.0);
    }
    let w = 2.0 * PI * s as f64;
    let ea = Complex64::from_polar(1.0, -w * a);
    let ec = Complex64::from_polar(1.0, -w * c);
    (ea - ec) / Complex64::new(0.0, w)
}

/// `int_[a, c] e^(-2 pi i s t) d mu_n(t)` for `s = 0..=kmax`.
pub fn restricted_coeffs(field: &CascadeField, a: f64, c: f64, kmax: u64) -> Result<Vec<Complex64>, SpectrumError> {
    if !(0.0 <= a && a < c && c <= 1.0) {
        return Err(SpectrumError::BadInterval(a, c));
    }
    let len = field.masses.len();
    let lf = len as f64;
    // Leaves [first_full, end_full) lie inside [a, c]; at most two are cut.
    let first_full = (a * lf).ceil() as usize;
    let end_full = ((c * lf).floor() as usize).min(len);
    let mut out = vec![Complex64::new(0.0, 0.0); kmax as usize + 1];
    if first_full < end_full {
        let mut masked = vec![0.0; len];
        masked[first_full..end_full].copy_from_slice(&field.masses[first_full..end_full]);
        let d = dft(&masked);
        for (s, o) in out.iter_mut().enumerate() {
            *o = kernel(s as u64, len as u64) * d[s % len];
        }
    }
    let mut partial = |k: usize| {
        let lo = (k as f64 / lf).max(a);
        let hi = ((k + 1) as f64 / lf).min(c);
        if hi > lo && field.masses[k] != 0.0 {
            let density = field.masses[k] * lf;
            for (s, o) in out.iter_mut().enumerate() {
                *o += segment(lo, hi, s as u64) * density;
            }
        }
    };
    if first_full > end_full {
        // [a, c] inside a single leaf
        partial(end_full);
    } else {
        if first_full > 0 && (first_full - 1) as f64 / lf < a {
            partial(first_full - 1);
        }
        if end_full < len && (end_full as f64) / lf < c {
            partial(end_full);
        }
    }
    Ok(out)
}
