//! Closed-form dimension theory of the cascade measure: Hausdorff and Fourier
//! dimensions, squared regimes, the Biggins-Kyprianou boundary transform,
//! exact second moments of Fourier coefficients, and the Fourier-dimension
//! lower bound for cascades acting on a general base measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{self, NumericError};
use crate::weights::{ModelSpec, WeightError, WeightModel};

/// `|E[W2 ln W2] - ln b|` below this counts as squared-critical.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegimeError {
    #[error("degenerate model: E[W ln W] = {entropy} >= ln b = {log_b}")]
    DegenerateModel { entropy: f64, log_b: f64 },
    #[error("series diverges: E[W^2] / b = {0} >= 1")]
    SeriesDiverges(f64),
    #[error("boundary root search failed: {0}")]
    ConvergenceFailure(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

impl From<NumericError> for RegimeError {
    fn from(e: NumericError) -> Self {
        RegimeError::ConvergenceFailure(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquaredRegime {
    SquaredSub,
    SquaredCritical,
    SquaredSuper,
}

impl std::fmt::Display for SquaredRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SquaredRegime::SquaredSub => "squared_sub",
            SquaredRegime::SquaredCritical => "squared_critical",
            SquaredRegime::SquaredSuper => "squared_super",
        })
    }
}

pub fn is_nondegenerate(spec: &ModelSpec) -> bool {
    spec.weight.mean_w_log_w() < spec.log_b()
}

fn require_nondegenerate(spec: &ModelSpec) -> Result<(), RegimeError> {
    if is_nondegenerate(spec) {
        Ok(())
    } else {
        Err(RegimeError::DegenerateModel {
            entropy: spec.weight.mean_w_log_w(),
            log_b: spec.log_b(),
        })
    }
}

/// `E[W2 ln W2]` for the squared weight `W2 = W^2 / E[W^2]`.
pub fn squared_entropy(weight: &WeightModel) -> f64 {
    let m2 = weight.moment(2.0);
    2.0 * weight.moment_log(2.0) / m2 - m2.ln()
}

pub fn classify_squared_regime(spec: &ModelSpec) -> SquaredRegime {
    let gap = squared_entropy(&spec.weight) - spec.log_b();
    if gap.abs() < CRITICAL_TOL {
        SquaredRegime::SquaredCritical
    } else if gap < 0.0 {
        SquaredRegime::SquaredSub
    } else {
        SquaredRegime::SquaredSuper
    }
}

pub fn hausdorff_dimension(spec: &ModelSpec) -> Result<f64, RegimeError> {
    require_nondegenerate(spec)?;
    Ok(1.0 - spec.weight.mean_w_log_w() / spec.log_b())
}

/// `1 - log_b E[W^2]`: the correlation exponent of the second moments.
pub fn second_moment_exponent(spec: &ModelSpec) -> f64 {
    1.0 - spec.weight.moment(2.0).ln() / spec.log_b()
}

/// Objective `ln E[b^(1-t) W^(2t)] / (t ln b)` of the super-critical branch.
fn super_objective(spec: &ModelSpec, t: f64) -> f64 {
    let lb = spec.log_b();
    ((1.0 - t) * lb + spec.weight.moment(2.0 * t).ln()) / (t * lb)
}

/// Minimizer and minimum of the super-critical objective over `[1/2, 1]`.
pub fn super_branch_minimizer(spec: &ModelSpec) -> (f64, f64) {
    numeric::grid_then_golden(|t| super_objective(spec, t), 0.5, 1.0, 64, 1e-12)
}

pub fn fourier_dimension(spec: &ModelSpec) -> Result<f64, RegimeError> {
    require_nondegenerate(spec)?;
    Ok(match classify_squared_regime(spec) {
        SquaredRegime::SquaredSub | SquaredRegime::SquaredCritical => second_moment_exponent(spec),
        SquaredRegime::SquaredSuper => 1.0 - super_branch_minimizer(spec).1,
    })
}

/// Representation `W = exp(-beta xi) / E[exp(-beta xi)]` with
/// `E[xi e^-xi] = 0` and `E[e^-xi] = 1/b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTransform {
    pub beta: f64,
    /// `1 / beta`, the positive root of `t phi'(t) = phi(t)`.
    pub t_star: f64,
    /// `ln E[b W^t*]`.
    pub log_norm: f64,
    pub spec: ModelSpec,
}

impl BoundaryTransform {
    /// `xi = -t* ln w + ln E[b W^t*]`, with `+inf` at `w = 0`.
    pub fn xi(&self, w: f64) -> f64 {
        if w == 0.0 {
            f64::INFINITY
        } else {
            -self.t_star * w.ln() + self.log_norm
        }
    }

    /// `psi(t) = ln E[b e^(-t xi)]`.
    pub fn psi(&self, t: f64) -> f64 {
        self.spec.log_b() + self.spec.weight.moment(t * self.t_star).ln() - t * self.log_norm
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        let s = t * self.t_star;
        self.t_star * self.spec.weight.moment_log(s) / self.spec.weight.moment(s) - self.log_norm
    }

    /// `|phi'(t*) - phi(t*) / t*|`.
    pub fn residual(&self) -> f64 {
        match self.spec.structure_fn(self.t_star) {
            Ok((phi, dphi)) => (dphi - phi / self.t_star).abs(),
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn psi(tr: &BoundaryTransform, t: f64) -> f64 {
    tr.psi(t)
}

fn boundary_gap(spec: &ModelSpec, t: f64) -> f64 {
    match spec.structure_fn(t) {
        Ok((phi, dphi)) => t * dphi - phi,
        Err(_) => f64::NAN,
    }
}

/// Whether the law admits no boundary transform: bounded with
/// `b P(W = ess sup W) >= 1`, or a single positive atom.
pub fn excluded_from_boundary(spec: &ModelSpec) -> bool {
    match spec.weight.atoms() {
        None => false,
        Some(atoms) => {
            let positive = atoms.iter().filter(|a| a.0 > 0.0).count();
            let (_, p_max) = atoms[atoms.len() - 1];
            positive <= 1 || spec.b as f64 * p_max >= 1.0
        }
    }
}

/// Biggins-Kyprianou transform of `W`, or `None` when `W` is not in the
/// boundary case.
pub fn biggins_kyprianou(spec: &ModelSpec) -> Result<Option<BoundaryTransform>, RegimeError> {
    biggins_kyprianou_from(spec, 1.0 + 1e-6, 4.0)
}

/// As [`biggins_kyprianou`], starting the bracket search from `[lo, hi]`.
pub fn biggins_kyprianou_from(
    spec: &ModelSpec,
    lo: f64,
    hi: f64,
) -> Result<Option<BoundaryTransform>, RegimeError> {
    if excluded_from_boundary(spec) {
        return Ok(None);
    }
    let g = |t: f64| boundary_gap(spec, t);
    // g is nondecreasing (g' = t phi''), so expand away from the sign of g(lo).
    let (mut a, mut b) = (lo, hi);
    let ga = g(a);
    if ga > 0.0 {
        let mut found = false;
        b = a;
        for _ in 0..60 {
            a *= 0.5;
            if g(a) <= 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            return Err(RegimeError::ConvergenceFailure(format!(
                "g(t) > 0 down to t = {a:e}"
            )));
        }
    } else {
        let mut found = g(b) >= 0.0;
        let mut expansions = 0;
        while !found && expansions < 60 {
            a = b;
            b *= 2.0;
            expansions += 1;
            found = g(b) >= 0.0;
        }
        if !found {
            return Err(RegimeError::ConvergenceFailure(format!(
                "no sign change of t phi' - phi up to t = {b:e}"
            )));
        }
    }
    let t_star = numeric::bisect_secant(g, a, b, 1e-12, 500)?;
    let log_norm = spec.log_b() + spec.weight.moment(t_star).ln();
    Ok(Some(BoundaryTransform {
        beta: 1.0 / t_star,
        t_star,
        log_norm,
        spec: spec.clone(),
    }))
}

/// True iff the law of `W` is the two-point law `P(W = 1/x) = x`, `P(W = 0) = 1 - x`.
pub fn is_salem(spec: &ModelSpec) -> Result<bool, RegimeError> {
    require_nondegenerate(spec)?;
    Ok(match spec.weight.atoms() {
        None => false,
        // A validated two-atom law {0, v} with mean 1 has P(W = v) = 1/v.
        Some(atoms) => atoms.len() == 2 && atoms[0].0 == 0.0,
    })
}

/// Partial sum (`depth = Some(n)`) or full series (`None`) of
/// `E|mu_hat(s)|^2 = (E[Wc^2]/b) sum_m (E[W^2]/b)^(m-1) |(e^(2 pi i s b^-m) - 1)/(2 pi s b^-m)|^2`.
///
/// The partial sum up to `n` is exactly `E|mu_hat_n(s)|^2` at depth `n`. The
/// full series stops once the geometric tail bound drops below `tol` times the
/// running sum.
pub fn second_moment_series(
    spec: &ModelSpec,
    s: u64,
    depth: Option<u32>,
    tol: f64,
) -> Result<f64, RegimeError> {
    let b = spec.b;
    let coeff = spec.weight.centered_second_moment() / b as f64;
    let ratio = spec.weight.moment(2.0) / b as f64;
    match depth {
        Some(n) => {
            let mut sum = 0.0;
            let mut power = 1.0;
            for m in 1..=n {
                sum += coeff * power * numeric::sinc_sq_badic(s, b, m);
                power *= ratio;
            }
            Ok(sum)
        }
        None => {
            if ratio >= 1.0 {
                return Err(RegimeError::SeriesDiverges(ratio));
            }
            let mut sum = 0.0;
            let mut power = 1.0;
            for m in 1..=1_000_000u32 {
                sum += coeff * power * numeric::sinc_sq_badic(s, b, m);
                power *= ratio;
                let tail = coeff * power / (1.0 - ratio);
                if sum > 0.0 && tail < tol * sum {
                    break;
                }
            }
            Ok(sum)
        }
    }
}

/// `E[mu_hat_n(s)^2]` at depth `n`, which is real. Level `m` contributes only
/// when `2s / b^m` is an odd integer, so the value vanishes unless `b = 2`
/// or `b` divides `2s` with a half-integer quotient.
pub fn pseudo_second_moment(spec: &ModelSpec, s: u64, depth: u32) -> f64 {
    let b = spec.b as u64;
    let m2 = spec.weight.moment(2.0);
    let c2 = spec.weight.centered_second_moment();
    let mut sum = 0.0;
    for m in 1..=depth {
        let Some(bm) = b.checked_pow(m) else { break };
        if (2 * s) % bm == 0 && s % bm != 0 {
            // K_m(s)^2 = -(b^m / (pi s))^2
            let k2 = -(bm as f64 / (PI * s as f64)).powi(2);
            sum += m2.powi(m as i32 - 1) * (bm as f64).powi(-2) * c2 * k2 * bm as f64;
        }
    }
    sum
}

/// `varrho = E|mu_hat(1)|^2` and, for `b = 2`, `varpi = E[mu_hat(1)^2] = -2 E[Wc^2] / pi^2`.
pub fn varrho_varpi(spec: &ModelSpec, tol: f64) -> Result<(f64, Option<f64>), RegimeError> {
    let varrho = second_moment_series(spec, 1, None, tol)?;
    let varpi = (spec.b == 2).then(|| -2.0 * spec.weight.centered_second_moment() / (PI * PI));
    Ok((varrho, varpi))
}

/// Search grid for [`eta_lower_bound`].
#[derive(Debug, Clone)]
pub struct EtaGrid {
    pub alpha_step: f64,
    pub q_values: Vec<f64>,
    pub p_points: usize,
}

impl Default for EtaGrid {
    fn default() -> Self {
        EtaGrid {
            alpha_step: 1e-3,
            q_values: (2..=10).map(|k| 2f64.powi(k)).collect(),
            p_points: 64,
        }
    }
}

/// Lower bound `eta` for half the Fourier dimension of the cascade acting on
/// a base measure with lower `L^p` dimensions `lp_dim` and Fourier dimension
/// `kappa`. The supremum over the feasible set is approximated from inside,
/// so the value returned is always attained by a feasible `(alpha, p, q)`.
pub fn eta_lower_bound(
    spec: &ModelSpec,
    lp_dim: &dyn Fn(f64) -> f64,
    kappa: f64,
) -> Result<f64, RegimeError> {
    eta_lower_bound_with(spec, lp_dim, kappa, &EtaGrid::default())
}

pub fn eta_lower_bound_with(
    spec: &ModelSpec,
    lp_dim: &dyn Fn(f64) -> f64,
    kappa: f64,
    grid: &EtaGrid,
) -> Result<f64, RegimeError> {
    let entropy_dim = spec.weight.mean_w_log_w() / spec.log_b();
    let limit = lp_dim(1.0 + 1e-9);
    if !(entropy_dim < limit) {
        return Err(RegimeError::AssumptionViolated(format!(
            "E[W ln W]/ln b = {entropy_dim} is not below lim dim_p = {limit}"
        )));
    }
    if !(kappa > 0.0) {
        return Ok(0.0);
    }
    let lb = spec.log_b();
    let feasible = |alpha: f64, p: f64, q: f64| -> bool {
        let tau = p * ((kappa - alpha) * q - 1.0) / (q * kappa);
        tau > 1.0 && spec.weight.moment(p).ln() / lb < (tau - 1.0) * lp_dim(tau)
    };
    // All moments of the supported families are finite, so p ranges over (1, 2).
    let p_hi = 2.0 - 1e-9;
    let p_grid: Vec<f64> = (1..=grid.p_points)
        .map(|j| 1.0 + j as f64 / (grid.p_points + 1) as f64)
        .collect();
    let n_alpha = (kappa / grid.alpha_step).floor() as usize;
    let best_for = |p: f64, q: f64| -> Option<f64> {
        (0..=n_alpha)
            .rev()
            .map(|i| i as f64 * grid.alpha_step)
            .find(|&a| feasible(a, p, q))
    };

    let mut best: Option<(f64, f64, f64)> = None;
    for &q in &grid.q_values {
        for &p in &p_grid {
            if let Some(a) = best_for(p, q) {
                if best.map_or(true, |(ba, _, _)| a > ba) {
                    best = Some((a, p, q));
                }
            }
        }
    }
    let Some((mut alpha, p0, q0)) = best else {
        return Ok(0.0);
    };

    // Local refinement: finer p around the best cell, larger q, then bisection in alpha.
    let h = 1.0 / (grid.p_points + 1) as f64;
    let mut candidates = vec![(p0, q0)];
    for q in [q0, 2.0 * q0, 4.0 * q0] {
        for j in 0..=64 {
            let p = (p0 - h + 2.0 * h * j as f64 / 64.0).clamp(1.0 + 1e-9, p_hi);
            candidates.push((p, q));
        }
        candidates.push((p_hi, q));
    }
    for (p, q) in candidates {
        if let Some(a) = best_for(p, q) {
            let mut lo = a;
            let mut hi = a + grid.alpha_step;
            if feasible(lo, p, q) && !feasible(hi, p, q) {
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid, p, q) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            alpha = alpha.max(lo);
        }
    }
    Ok(alpha)
}

/// Every closed-form output for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub d_h: f64,
    pub d_f: f64,
    pub regime: SquaredRegime,
    pub nondegenerate: bool,
    pub salem: bool,
    pub boundary: Option<BoundaryTransform>,
    /// `None` when `E[W^2] >= b` and the series diverges.
    pub varrho: Option<f64>,
    pub varpi: Option<f64>,
    pub lattice: Option<bool>,
}

/// Flat key-value form of a [`DimensionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub d_h: Option<f64>,
    pub d_f: Option<f64>,
    pub regime: SquaredRegime,
    pub salem: bool,
    pub beta: Option<f64>,
    pub psi_beta: Option<f64>,
    pub varrho: Option<f64>,
    pub varpi: Option<f64>,
    pub nondegenerate: bool,
    pub lattice: Option<bool>,
}

impl DimensionReport {
    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            d_h: Some(self.d_h),
            d_f: Some(self.d_f),
            regime: self.regime,
            salem: self.salem,
            beta: self.boundary.as_ref().map(|t| t.beta),
            psi_beta: self.boundary.as_ref().map(|t| t.psi(t.beta)),
            varrho: self.varrho,
            varpi: self.varpi,
            nondegenerate: self.nondegenerate,
            lattice: self.lattice,
        }
    }
}

/// The report record of `spec`; degenerate models yield a record with
/// `nondegenerate = false` and no dimensions.
pub fn report_record(spec: &ModelSpec) -> Result<ReportRecord, RegimeError> {
    match dimension_report(spec) {
        Ok(r) => Ok(r.record()),
        Err(RegimeError::DegenerateModel { .. }) => Ok(ReportRecord {
            d_h: None,
            d_f: None,
            regime: classify_squared_regime(spec),
            salem: false,
            beta: None,
            psi_beta: None,
            varrho: None,
            varpi: None,
            nondegenerate: false,
            lattice: spec.weight.lattice(),
        }),
        Err(e) => Err(e),
    }
}

pub fn dimension_report(spec: &ModelSpec) -> Result<DimensionReport, RegimeError> {
    let d_h = hausdorff_dimension(spec)?;
    let d_f = fourier_dimension(spec)?;
    let (varrho, varpi) = match varrho_varpi(spec, 1e-14) {
        Ok((r, p)) => (Some(r), p),
        Err(RegimeError::SeriesDiverges(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(DimensionReport {
        d_h,
        d_f,
        regime: classify_squared_regime(spec),
        nondegenerate: true,
        salem: is_salem(spec)?,
        boundary: biggins_kyprianou(spec)?,
        varrho,
        varpi,
        lattice: spec.weight.lattice(),
    })
}
