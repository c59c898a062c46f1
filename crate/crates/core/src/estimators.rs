//! Monte Carlo and deterministic estimators checked against the closed forms
//! of [`crate::regimes`].
//!
//! Replicate `r` of a run with master seed `s` uses seed `s ^ r`. Replicates
//! run in parallel but are collected in index order and reduced sequentially,
//! so every result is independent of the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{self, BaseMeasure, CascadeError, CascadeField, DEFAULT_MAX_LEAVES};
use crate::numeric::{self, NumericError};
use crate::regimes::{self, RegimeError, SquaredRegime};
use crate::spectrum::{PhaseTable, Spectrum};
use crate::weights::{ModelSpec, WeightSource};

/// Replicates with total mass below this count as extinct.
pub const SURVIVAL_MASS: f64 = 1e-12;

/// `|mu_hat|^2` below this fraction of `|mu_hat(0)|^2` is FFT round-off.
const ROUND_OFF_POWER: f64 = 1e-26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("need at least 3 usable blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("need at least 2 spectra, got {0}")]
    TooFewSpectra(usize),
    #[error("spectra disagree on {0}")]
    MixedSpectra(String),
    #[error("field has zero mass")]
    ZeroField,
    #[error("field depth must be at least 1")]
    TooShallow,
    #[error("need at least {needed} replicates, got {got}")]
    TooFewReplicates { needed: usize, got: usize },
    #[error("expected regime {expected}, model is {found}")]
    RegimeMismatch { expected: SquaredRegime, found: SquaredRegime },
    #[error("bad exponents: {0}")]
    BadExponents(String),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: f64,
    pub std_err: f64,
    pub n_points: usize,
    pub method: String,
}

/// Seed of replicate `rep`. The master seed is hashed first, so nearby
/// master seeds give disjoint replicate sets.
pub fn replicate_seed(seed: u64, rep: u64) -> u64 {
    SplitMix64::seed_from_u64(seed).next_u64() ^ rep
}

/// `f(0), ..., f(reps - 1)` evaluated in parallel, returned in index order.
pub fn replicates<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps as u64).into_par_iter().map(f).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn leaves(b: u32, depth: u32) -> Result<u64, EstimatorError> {
    match (b as u64).checked_pow(depth) {
        Some(n) if n <= DEFAULT_MAX_LEAVES => Ok(n),
        _ => Err(CascadeError::DepthTooLarge {
            b,
            depth,
            cap: DEFAULT_MAX_LEAVES,
        }
        .into()),
    }
}

/// Decay exponent `D` from `ln max_{B^(l-1) <= k < B^l} |mu_hat(k)|^2 ~ c - D l ln B`,
/// with the block maxima averaged in log scale across realizations and
/// divided by the harmonic number of the block size. Blocks reaching past
/// `b^(depth - 1)` are left out.
pub fn decay_fit(spectra: &[Spectrum], block_base: u64) -> Result<FitResult, EstimatorError> {
    if spectra.len() < 2 {
        return Err(EstimatorError::TooFewSpectra(spectra.len()));
    }
    let first = &spectra[0];
    for s in spectra {
        if s.depth != first.depth {
            return Err(EstimatorError::MixedSpectra("depth".into()));
        }
        if s.b != first.b {
            return Err(EstimatorError::MixedSpectra("branching number".into()));
        }
        if s.kmax != first.kmax {
            return Err(EstimatorError::MixedSpectra("kmax".into()));
        }
    }
    let base = block_base.max(2);
    let lb = (base as f64).ln();
    // Extinct realizations carry no decay information.
    let abs2: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| s.abs2())
        .filter(|a| a[0].sqrt() >= SURVIVAL_MASS)
        .collect();
    // Frequencies near b^depth only see the flat leaf density.
    let top = (first.kmax + 1).min((first.b as u64).saturating_pow(first.depth.saturating_sub(1)));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut l = 1u32;
    while let Some(hi) = base.checked_pow(l) {
        if hi > top {
            break;
        }
        let lo = base.pow(l - 1) as usize;
        // The maximum of n roughly exponential values grows like H_n.
        let harmonic: f64 = (1..=hi as usize - lo).map(|i| 1.0 / i as f64).sum();
        let mut logs = Vec::with_capacity(abs2.len());
        for a in &abs2 {
            let floor = ROUND_OFF_POWER * a[0];
            let m = a[lo..hi as usize].iter().cloned().fold(0.0, f64::max);
            if m > floor {
                logs.push(m.ln());
            }
        }
        if !logs.is_empty() && logs.len() == abs2.len() {
            xs.push(l as f64 * lb);
            ys.push(mean(&logs) - harmonic.ln());
        }
        l += 1;
    }
    if xs.len() < 3 {
        return Err(EstimatorError::TooFewBlocks(xs.len()));
    }
    let fit = numeric::linear_fit(&xs, &ys)?;
    Ok(FitResult {
        estimate: -fit.slope,
        std_err: fit.slope_std_err,
        n_points: fit.n,
        method: format!("block-max regression, base {base}"),
    })
}

/// Plug-in `L^p` dimension `-ln(sum m^p) / (n (p - 1) ln b)`.
pub fn lp_dimension(field: &CascadeField, p: f64) -> Result<f64, EstimatorError> {
    lp_dimension_of(field.b(), field.depth, &field.masses, p)
}

pub fn lp_dimension_of(b: u32, depth: u32, masses: &[f64], p: f64) -> Result<f64, EstimatorError> {
    if !(p > 1.0) {
        return Err(EstimatorError::BadExponents(format!("p = {p} must exceed 1")));
    }
    if depth == 0 {
        return Err(EstimatorError::TooShallow);
    }
    let s: f64 = masses.iter().filter(|m| **m > 0.0).map(|m| m.powf(p)).sum();
    if !(s > 0.0) {
        return Err(EstimatorError::ZeroField);
    }
    Ok(-s.ln() / (depth as f64 * (p - 1.0) * (b as f64).ln()))
}

/// Normalized entropy `sum -(m/M) log_b(m/M) / n`.
pub fn entropy_dimension(field: &CascadeField) -> Result<f64, EstimatorError> {
    entropy_dimension_of(field.b(), field.depth, &field.masses)
}

pub fn entropy_dimension_of(b: u32, depth: u32, masses: &[f64]) -> Result<f64, EstimatorError> {
    if depth == 0 {
        return Err(EstimatorError::TooShallow);
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(EstimatorError::ZeroField);
    }
    let h: f64 = masses
        .iter()
        .filter(|m| **m > 0.0)
        .map(|m| {
            let x = m / total;
            -x * x.ln()
        })
        .sum();
    Ok(h / (depth as f64 * (b as f64).ln()))
}

/// `max mu(I) / |I|^gamma` over the b-adic intervals of every level up to the depth.
pub fn frostman_stat(field: &CascadeField, gamma: f64) -> f64 {
    frostman_stat_of(field.b(), field.depth, &field.masses, gamma)
}

pub fn frostman_stat_of(b: u32, depth: u32, masses: &[f64], gamma: f64) -> f64 {
    let lb = (b as f64).ln();
    let level_max = |level: &[f64], m: u32| level.iter().cloned().fold(0.0, f64::max) * (gamma * m as f64 * lb).exp();
    let mut level = masses.to_vec();
    let mut best = level_max(&level, depth);
    for m in (0..depth).rev() {
        level = cascade::block_sums(&level, b, 1);
        best = best.max(level_max(&level, m));
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationConfig {
    pub n: u32,
    pub depth: u32,
    pub reps: usize,
    pub seed: u64,
    /// Tail replicates sharing one level-`n` prefix; 0 skips the conditional test.
    pub conditional_reps: usize,
    pub expect: Option<SquaredRegime>,
    /// Fraction of order statistics used by the tail-index fit.
    pub tail_fraction: f64,
}

impl FluctuationConfig {
    pub fn new(n: u32, depth: u32, reps: usize, seed: u64) -> Self {
        FluctuationConfig {
            n,
            depth,
            reps,
            seed,
            conditional_reps: 0,
            expect: None,
            tail_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStats {
    pub reps: usize,
    pub prefix_squared_mass: f64,
    /// `E[|mu_hat_N(b^n)|^2 | F_n]` predicted from the prefix.
    pub expected: f64,
    pub ratio_mean: f64,
    pub ratio_sd: f64,
    pub ratio_std_err: f64,
    pub re_im_corr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub regime: SquaredRegime,
    pub n: u32,
    pub depth: u32,
    pub reps: usize,
    pub extinct: usize,
    /// `b^(n D_F / 2)` times `n^(1/4)` (critical) or `n^(3 beta / 2)` (super-critical).
    pub scale: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub mean_std_err: f64,
    pub second_moment: f64,
    pub second_moment_std_err: f64,
    pub oracle_second_moment: f64,
    pub re_im_corr: f64,
    pub variance_ratio: Option<f64>,
    pub oracle_variance_ratio: Option<f64>,
    pub conditional: Option<ConditionalStats>,
    pub tail_index: Option<f64>,
    pub tail_index_target: Option<f64>,
}

/// Statistics of `mu_hat_N(b^n)` over independent realizations, plus the
/// conditional second-moment identity on one fixed level-`n` prefix.
pub fn fluctuation_suite(spec: &ModelSpec, cfg: &FluctuationConfig) -> Result<FluctuationReport, EstimatorError> {
    if cfg.depth <= cfg.n {
        return Err(EstimatorError::BadExponents(format!(
            "depth {} must exceed n = {}",
            cfg.depth, cfg.n
        )));
    }
    if cfg.reps < 100 {
        return Err(EstimatorError::TooFewReplicates {
            needed: 100,
            got: cfg.reps,
        });
    }
    let regime = regimes::classify_squared_regime(spec);
    if let Some(expected) = cfg.expect {
        if expected != regime {
            return Err(EstimatorError::RegimeMismatch { expected, found: regime });
        }
    }
    let d_f = regimes::fourier_dimension(spec)?;
    let boundary = regimes::biggins_kyprianou(spec)?;
    let len = leaves(spec.b, cfg.depth)?;
    let b = spec.b;
    let s = (b as u64).pow(cfg.n);
    let table = PhaseTable::new(len);
    let coeff = |source: WeightSource| -> Result<(Complex64, f64), EstimatorError> {
        let f = cascade::sample_field_with(spec, cfg.depth, source, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES)?;
        Ok((table.coeffs(&f.masses, &[s])[0], cascade::total_mass(&f)))
    };

    let draws = replicates(cfg.reps, |r| coeff(WeightSource::new(replicate_seed(cfg.seed, r))))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let re: Vec<f64> = draws.iter().map(|d| d.0.re).collect();
    let im: Vec<f64> = draws.iter().map(|d| d.0.im).collect();
    let abs2: Vec<f64> = draws.iter().map(|d| d.0.norm_sqr()).collect();
    let (mean_re, se_re) = mean_se(&re);
    let (mean_im, se_im) = mean_se(&im);
    let (second_moment, second_moment_std_err) = mean_se(&abs2);
    let oracle_second_moment = regimes::second_moment_series(spec, s, Some(cfg.depth), 0.0)?;

    let (variance_ratio, oracle_variance_ratio) = if b == 2 {
        let er2 = mean(&re.iter().map(|x| x * x).collect::<Vec<_>>());
        let ei2 = mean(&im.iter().map(|x| x * x).collect::<Vec<_>>());
        let pseudo = regimes::pseudo_second_moment(spec, s, cfg.depth);
        (
            Some(er2 / ei2),
            Some((oracle_second_moment + pseudo) / (oracle_second_moment - pseudo)),
        )
    } else {
        (None, None)
    };

    let survivors: Vec<f64> = draws
        .iter()
        .filter(|d| d.1 >= SURVIVAL_MASS)
        .map(|d| d.0.norm())
        .collect();
    let extinct = draws.len() - survivors.len();
    let nf = cfg.n as f64;
    let mut scale = (0.5 * nf * d_f * (b as f64).ln()).exp();
    match (regime, &boundary) {
        (SquaredRegime::SquaredCritical, _) => scale *= nf.powf(0.25),
        (SquaredRegime::SquaredSuper, Some(tr)) => scale *= nf.powf(1.5 * tr.beta),
        _ => {}
    }
    let (tail_index, tail_index_target) = match (regime, &boundary) {
        (SquaredRegime::SquaredSuper, Some(tr)) => {
            let fit = numeric::tail_index_rank_regression(&survivors, cfg.tail_fraction)?;
            (Some(fit.slope), Some(1.0 / tr.beta))
        }
        _ => (None, None),
    };

    let conditional = if cfg.conditional_reps > 0 {
        let prefix_source = WeightSource::new(cfg.seed);
        let prefix = cascade::sample_field_with(spec, cfg.n, prefix_source, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES)?;
        let prefix_squared_mass = cascade::squared_mass(&prefix)?;
        let rho = regimes::second_moment_series(spec, 1, Some(cfg.depth - cfg.n), 0.0)?;
        let expected = (spec.weight.moment(2.0) / b as f64).powi(cfg.n as i32) * prefix_squared_mass * rho;
        let tails = replicates(cfg.conditional_reps, |r| coeff(prefix_source.with_tail_salt(cfg.n, r)))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let ratios: Vec<f64> = tails.iter().map(|t| t.0.norm_sqr() / expected).collect();
        let (ratio_mean, ratio_std_err) = mean_se(&ratios);
        let ratio_sd = ratio_std_err * (ratios.len() as f64).sqrt();
        let cre: Vec<f64> = tails.iter().map(|t| t.0.re).collect();
        let cim: Vec<f64> = tails.iter().map(|t| t.0.im).collect();
        Some(ConditionalStats {
            reps: cfg.conditional_reps,
            prefix_squared_mass,
            expected,
            ratio_mean,
            ratio_sd,
            ratio_std_err,
            re_im_corr: correlation(&cre, &cim),
        })
    } else {
        None
    };

    Ok(FluctuationReport {
        regime,
        n: cfg.n,
        depth: cfg.depth,
        reps: cfg.reps,
        extinct,
        scale,
        mean_re,
        mean_im,
        mean_std_err: (se_re * se_re + se_im * se_im).sqrt(),
        second_moment,
        second_moment_std_err,
        oracle_second_moment,
        re_im_corr: correlation(&re, &im),
        variance_ratio,
        oracle_variance_ratio,
        conditional,
        tail_index,
        tail_index_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMethod {
    /// Exact second moments from the series; `depth = None` is the limit measure.
    Series { tol: f64 },
    MonteCarlo { reps: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScaling {
    pub fit: FitResult,
    pub k: Vec<u64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// Log-log slope of `E|mu_hat(k)|^q` over `k_list`.
pub fn moment_scaling(
    spec: &ModelSpec,
    q: f64,
    k_list: &[u64],
    depth: Option<u32>,
    method: MomentMethod,
) -> Result<MomentScaling, EstimatorError> {
    if !(q >= 2.0) {
        return Err(EstimatorError::BadExponents(format!("q = {q} must be at least 2")));
    }
    let (values, std_errs) = match method {
        MomentMethod::Series { tol } => {
            if q != 2.0 {
                return Err(EstimatorError::BadExponents("the series gives second moments only".into()));
            }
            let v = k_list
                .iter()
                .map(|&k| regimes::second_moment_series(spec, k, depth, tol))
                .collect::<Result<Vec<_>, _>>()?;
            let z = vec![0.0; v.len()];
            (v, z)
        }
        MomentMethod::MonteCarlo { reps, seed } => {
            let Some(depth) = depth else {
                return Err(EstimatorError::BadExponents("Monte Carlo needs a finite depth".into()));
            };
            if reps < 2 {
                return Err(EstimatorError::TooFewReplicates { needed: 2, got: reps });
            }
            let table = PhaseTable::new(leaves(spec.b, depth)?);
            let draws = replicates(reps, |r| -> Result<Vec<f64>, EstimatorError> {
                let f = cascade::sample_field(spec, depth, replicate_seed(seed, r), None)?;
                Ok(table.coeffs(&f.masses, k_list).iter().map(|c| c.norm().powf(q)).collect())
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            (0..k_list.len())
                .map(|i| mean_se(&draws.iter().map(|d| d[i]).collect::<Vec<_>>()))
                .unzip()
        }
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = k_list
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(&k, &v)| ((k as f64).ln(), v.ln()))
        .unzip();
    let fit = numeric::linear_fit(&xs, &ys)?;
    Ok(MomentScaling {
        fit: FitResult {
            estimate: fit.slope,
            std_err: fit.slope_std_err,
            n_points: fit.n,
            method: match method {
                MomentMethod::Series { .. } => "series".into(),
                MomentMethod::MonteCarlo { .. } => "monte-carlo".into(),
            },
        },
        k: k_list.to_vec(),
        values,
        std_errs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Diverging,
    /// Outside the range where the finiteness criteria decide.
    Borderline,
}

fn check_norm_exponents(alpha: f64, p: f64, q: f64) -> Result<(), EstimatorError> {
    if !(0.0..1.0).contains(&alpha) || !(p > 1.0 && p <= 2.0 && q >= 2.0) || !(q > 1.0 / (1.0 - alpha)) {
        return Err(EstimatorError::BadExponents(format!(
            "need 0 <= alpha < 1, 1 < p <= 2 <= q, q > 1/(1 - alpha); got alpha = {alpha}, p = {p}, q = {q}"
        )));
    }
    Ok(())
}

/// Finiteness of the `(alpha, p, q)`-norm of the limit measure's Fourier
/// coefficients, from the regime-specific criteria.
pub fn norm_verdict(spec: &ModelSpec, alpha: f64, p: f64, q: f64) -> Result<Verdict, EstimatorError> {
    check_norm_exponents(alpha, p, q)?;
    let lb = spec.log_b();
    let ln_m2 = spec.weight.moment(2.0).ln();
    let threshold = (1.0 - 2.0 * alpha - 2.0 / q) * lb;
    Ok(match regimes::classify_squared_regime(spec) {
        SquaredRegime::SquaredSub => {
            if q <= 2.0 {
                Verdict::Borderline
            } else if ln_m2 < threshold {
                Verdict::Finite
            } else {
                Verdict::Diverging
            }
        }
        SquaredRegime::SquaredCritical => {
            if !(alpha < 0.5 && q > 2.0 && q > 2.0 / (1.0 - 2.0 * alpha)) {
                Verdict::Borderline
            } else if ln_m2 < threshold {
                Verdict::Finite
            } else if ln_m2 > threshold {
                Verdict::Diverging
            } else {
                Verdict::Borderline
            }
        }
        SquaredRegime::SquaredSuper => {
            let tr = match regimes::biggins_kyprianou(spec)? {
                Some(tr) if tr.beta > 0.5 && tr.beta < 1.0 => tr,
                _ => return Ok(Verdict::Borderline),
            };
            if !(alpha < 0.5 && q > 2.0 / (1.0 - 2.0 * alpha)) {
                return Ok(Verdict::Borderline);
            }
            let holds = alpha + 1.0 / q <= tr.psi(tr.beta) / lb;
            let (lo, hi) = (2.0 / (3.0 * tr.beta), 1.0 / tr.beta);
            match (holds, p < hi, p > lo) {
                (true, true, _) => Verdict::Finite,
                (false, _, true) => Verdict::Diverging,
                _ => Verdict::Borderline,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub regime: SquaredRegime,
    pub chi_hat: f64,
    pub chi_std_err: f64,
    /// Depth-`N` partial norm `(E[(sum_s |s^alpha mu_hat_N(s)|^q)^(p/q)])^(1/p)`.
    pub norm_hat: f64,
    pub r_seq: Vec<f64>,
    pub verdict: Verdict,
}

/// Monte Carlo partial norm and characteristic quantity at depth `depth`,
/// the sequence `R_1..R_depth`, and the analytic verdict.
pub fn chi_and_norm(
    spec: &ModelSpec,
    alpha: f64,
    p: f64,
    q: f64,
    depth: u32,
    reps: usize,
    seed: u64,
) -> Result<NormReport, EstimatorError> {
    let verdict = norm_verdict(spec, alpha, p, q)?;
    if depth == 0 {
        return Err(EstimatorError::TooShallow);
    }
    if reps < 2 {
        return Err(EstimatorError::TooFewReplicates { needed: 2, got: reps });
    }
    let b = spec.b;
    let len = leaves(b, depth)?;
    let kmax = 4 * len;
    let m2 = spec.weight.moment(2.0);
    let regime = regimes::classify_squared_regime(spec);

    // |V(I_u)(s)|^2 depends on u only through its level.
    let level_weight: Vec<Vec<f64>> = (1..=depth)
        .map(|m| {
            let c = (b as f64).powi(-(m as i32)) * m2.powi(m as i32 - 1);
            (1..=kmax).map(|s| c * numeric::sinc_sq_badic(s, b, m)).collect()
        })
        .collect();
    let s_alpha: Vec<f64> = (1..=kmax).map(|s| (s as f64).powf(alpha)).collect();

    struct Rep {
        norm_p: f64,
        chi: f64,
        path: Vec<f64>,
    }
    let draws = replicates(reps, |r| -> Result<Rep, EstimatorError> {
        let seed_r = replicate_seed(seed, r);
        let path = (0..depth)
            .map(|m| Ok(cascade::squared_mass(&cascade::sample_field(spec, m, seed_r, None)?)?))
            .collect::<Result<Vec<f64>, EstimatorError>>()?;
        let field = cascade::sample_field(spec, depth, seed_r, None)?;
        let sp = crate::spectrum::fourier_all(&field, kmax);
        let lq: f64 = (1..=kmax as usize)
            .map(|s| (s_alpha[s - 1] * sp.coeffs[s].norm()).powf(q))
            .sum();
        let chi_sum: f64 = (0..kmax as usize)
            .map(|i| {
                let inner: f64 = (0..depth as usize).map(|m| path[m] * level_weight[m][i]).sum();
                (s_alpha[i] * s_alpha[i] * inner).powf(q / 2.0)
            })
            .sum();
        Ok(Rep {
            norm_p: lq.powf(p / q),
            chi: chi_sum.powf(p / q),
            path,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let norm_hat = mean(&draws.iter().map(|d| d.norm_p).collect::<Vec<_>>()).powf(1.0 / p);
    let (chi_hat, chi_std_err) = mean_se(&draws.iter().map(|d| d.chi).collect::<Vec<_>>());
    let growth = m2 / (b as f64).powf(1.0 - 2.0 * alpha - 2.0 / q);
    let proxy = match (regime, regimes::biggins_kyprianou(spec)?) {
        (SquaredRegime::SquaredSuper, Some(tr)) => Some(tr),
        _ => None,
    };
    let r_seq = (1..=depth)
        .map(|n| {
            let moment = match &proxy {
                Some(tr) => {
                    let k = (n - 1) as f64;
                    k.max(1.0).powf(-1.5 * p * tr.beta) * (-0.5 * k * p * tr.psi(2.0 * tr.beta)).exp()
                }
                None => mean(&draws.iter().map(|d| d.path[n as usize - 1].powf(p / 2.0)).collect::<Vec<_>>()),
            };
            moment * growth.powf(0.5 * n as f64 * p)
        })
        .collect();
    Ok(NormReport {
        regime,
        chi_hat,
        chi_std_err,
        norm_hat,
        r_seq,
        verdict,
    })
}

/// `sum_{l >= 1} (1 + c l)^(-gamma)` by direct summation plus an
/// Euler-Maclaurin tail.
fn shifted_zeta_tail(c: f64, gamma: f64) -> f64 {
    const J: u32 = 8;
    let f = |l: f64| (1.0 + c * l).powf(-gamma);
    let mut s: f64 = (1..J).map(|l| f(l as f64)).sum();
    let j = J as f64;
    let x = 1.0 + c * j;
    s += x.powf(1.0 - gamma) / (c * (gamma - 1.0));
    s += 0.5 * f(j);
    s += gamma * c * x.powf(-gamma - 1.0) / 12.0;
    s
}

/// `ln ||T_n||^p` for the Lebesgue `l^q` vector measure with weights `s^alpha`.
pub fn hv_log_norm(alpha: f64, p: f64, q: f64, b: u32, n: u32) -> Result<f64, EstimatorError> {
    let gamma = (1.0 - alpha) * q;
    if !(gamma > 1.0) {
        return Err(RegimeError::SeriesDiverges(gamma).into());
    }
    let len = (b as u64)
        .checked_pow(n)
        .filter(|l| *l <= 1 << 26)
        .ok_or_else(|| EstimatorError::BadExponents(format!("b^n = {b}^{n} is too large")))?;
    let lf = len as f64;
    // ln sum_k |e^(2 pi i k / L) - 1|^q sum_l (k + L l)^(-gamma)
    let mut acc = f64::NEG_INFINITY;
    for k in 1..len {
        let chord = 2.0 * (PI * k as f64 / lf).sin();
        let kf = k as f64;
        let term = q * chord.ln() - gamma * kf.ln() + (1.0 + shifted_zeta_tail(lf / kf, gamma)).ln();
        acc = numeric::log_add_exp(acc, term);
    }
    Ok(p * n as f64 * (b as f64).ln() - p * (2.0 * PI).ln() + (p / q) * acc)
}

/// Growth rate of `ln ||T_n||^p / (n ln b)`, expected `p (alpha + 1/q)`.
pub fn hv_growth(alpha: f64, p: f64, q: f64, b: u32, n_max: u32) -> Result<FitResult, EstimatorError> {
    if !(0.0..1.0).contains(&alpha) || !(q > 1.0 / (1.0 - alpha)) {
        return Err(EstimatorError::BadExponents(format!(
            "need 0 <= alpha < 1 and q > 1/(1 - alpha); got alpha = {alpha}, q = {q}"
        )));
    }
    let n_min = (n_max / 2).max(1);
    if n_max < n_min + 2 {
        return Err(EstimatorError::TooFewBlocks((n_max + 1 - n_min) as usize));
    }
    let lb = (b as f64).ln();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in n_min..=n_max {
        xs.push(n as f64 * lb);
        ys.push(hv_log_norm(alpha, p, q, b, n)?);
    }
    let fit = numeric::linear_fit(&xs, &ys)?;
    Ok(FitResult {
        estimate: fit.slope,
        std_err: fit.slope_std_err,
        n_points: fit.n,
        method: format!("log-norm regression over n = {n_min}..={n_max}"),
    })
}

/// Whether `b^(n (D_F + eps)) median|mu_hat_N(b^n)|^2`, running-maxed over
/// `n <= N - 2`, grows from the first to the last third of the range. Depths
/// below 6 are inconclusive and give `false`.
pub fn divergence_probe(spec: &ModelSpec, eps: f64, depth: u32, reps: usize, seed: u64) -> Result<bool, EstimatorError> {
    if depth < 6 {
        return Ok(false);
    }
    let d_f = regimes::fourier_dimension(spec)?;
    let b = spec.b;
    let table = PhaseTable::new(leaves(b, depth)?);
    let top = depth - 2;
    let freqs: Vec<u64> = (1..=top).map(|n| (b as u64).pow(n)).collect();
    let draws = replicates(reps, |r| -> Result<Option<Vec<f64>>, EstimatorError> {
        let f = cascade::sample_field(spec, depth, replicate_seed(seed, r), None)?;
        if cascade::total_mass(&f) < SURVIVAL_MASS {
            return Ok(None);
        }
        Ok(Some(table.coeffs(&f.masses, &freqs).iter().map(|c| c.norm_sqr()).collect()))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let alive: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    if alive.is_empty() {
        return Ok(false);
    }
    let lb = (b as f64).ln();
    let mut running = f64::NEG_INFINITY;
    let envelope: Vec<f64> = (0..top as usize)
        .map(|i| {
            let n = (i + 1) as f64;
            let med = median(&alive.iter().map(|a| a[i]).collect::<Vec<_>>());
            running = running.max(n * (d_f + eps) * lb + med.ln());
            running
        })
        .collect();
    let third = (envelope.len() / 3).max(1);
    Ok(envelope[envelope.len() - 1] > envelope[third - 1])
}
