//! Acceptance suite: criteria 1 to 15 with pinned tolerances.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade;
use crate::estimators::{self, FluctuationConfig, MomentMethod, Verdict};
use crate::regimes::{self, SquaredRegime};
use crate::weights::{ModelSpec, WeightModel, WeightSource};

type Error = Box<dyn std::error::Error + Send + Sync>;
type Checks = Result<Vec<Check>, Error>;

pub const DEFAULT_SEED: u64 = 7;
pub const CRITERIA: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Sample sizes and depths as stated in the criteria.
    Full,
    /// Reduced budgets for smoke runs; thresholds unchanged.
    Quick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub scale: Scale,
    pub seed: u64,
    /// Multiplies every tolerance; 1 is the pinned suite.
    pub tolerance_scale: f64,
    /// Criteria to run; empty means all.
    pub only: Vec<u32>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            scale: Scale::Full,
            seed: DEFAULT_SEED,
            tolerance_scale: 1.0,
            only: Vec::new(),
        }
    }
}

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub target: f64,
    /// Allowed `|value - target|`; `None` for one-sided bounds.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionOutcome {
    /// One-line pass/fail summary.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.worst()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => match c.tolerance {
                Some(t) => format!("{} = {:.6} vs {:.6} (tol {t:e})", c.label, c.value, c.target),
                None => format!("{} = {:.6} vs bound {:.6}", c.label, c.value, c.target),
            },
            (None, None) => "no checks".into(),
        };
        format!(
            "criterion {:>2} {:<24} {status}  {} checks, {detail} [{:.1}s]",
            self.id,
            self.name,
            self.checks.len(),
            self.seconds
        )
    }

    /// First failing check, or the one closest to its tolerance.
    fn worst(&self) -> Option<&Check> {
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            return Some(c);
        }
        self.checks.iter().max_by(|a, b| slack(a).total_cmp(&slack(b)))
    }
}

fn slack(c: &Check) -> f64 {
    match c.tolerance {
        Some(t) if t > 0.0 => (c.value - c.target).abs() / t,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub config: VerifyConfig,
    pub passed: bool,
    pub outcomes: Vec<CriterionOutcome>,
}

impl SuiteSummary {
    /// SHA-256 of the JSON summary; timings are not part of it.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("summary serializes");
        hex::encode(Sha256::digest(json))
    }
}

pub fn criterion_name(id: u32) -> &'static str {
    match id {
        1 => "log-normal dimensions",
        2 => "Salem characterization",
        3 => "boundary transform",
        4 => "exact second moment",
        5 => "b-adic scaling",
        6 => "conditional variance",
        7 => "correlation dimension",
        8 => "entropy dimension",
        9 => "H_V growth",
        10 => "norm criterion",
        11 => "super-critical tail",
        12 => "partition moments",
        13 => "moment scaling slope",
        14 => "Frostman proxy",
        15 => "reproducibility",
        _ => "unknown",
    }
}

struct Ctx {
    scale: Scale,
    seed: u64,
    tol: f64,
}

impl Ctx {
    fn full(&self) -> bool {
        self.scale == Scale::Full
    }

    fn pick<T>(&self, full: T, quick: T) -> T {
        if self.full() {
            full
        } else {
            quick
        }
    }

    fn within(&self, label: impl Into<String>, value: f64, target: f64, tol: f64) -> Check {
        let tol = tol * self.tol;
        Check {
            label: label.into(),
            value,
            target,
            tolerance: Some(tol),
            passed: (value - target).abs() <= tol,
        }
    }
}

fn bound(label: impl Into<String>, value: f64, target: f64, passed: bool) -> Check {
    Check {
        label: label.into(),
        value,
        target,
        tolerance: None,
        passed,
    }
}

fn lognormal(s: f64, b: u32) -> Result<ModelSpec, Error> {
    let sigma = (s * (b as f64).ln()).sqrt();
    Ok(ModelSpec::new(WeightModel::lognormal(sigma)?, b)?)
}

fn two_point(x: f64, b: u32) -> Result<ModelSpec, Error> {
    Ok(ModelSpec::new(WeightModel::two_point(x)?, b)?)
}

fn discrete(atoms: &[(f64, f64)], b: u32) -> Result<ModelSpec, Error> {
    Ok(ModelSpec::new(WeightModel::discrete(atoms.to_vec())?, b)?)
}

const SKEWED: [(f64, f64); 3] = [(0.2, 0.5), (1.4, 0.4), (3.4, 0.1)];
const SPIKE: [(f64, f64); 2] = [(0.4, 0.8), (3.4, 0.2)];
const HEAVY: [(f64, f64); 2] = [(0.25, 0.8), (4.0, 0.2)];
const SYMMETRIC: [(f64, f64); 2] = [(0.5, 0.5), (1.5, 0.5)];

/// Closed-form Fourier dimension of the log-normal cascade, `s = sigma^2 / ln b`.
fn lognormal_d_f(s: f64) -> f64 {
    if s <= 0.5 {
        1.0 - s
    } else {
        (SQRT_2 - s.sqrt()).powi(2)
    }
}

fn c1(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    for b in [2u32, 3, 10] {
        let lb = (b as f64).ln();
        let mut worst: f64 = 0.0;
        for j in 1..=25 {
            let sigma = (2.0 * lb).sqrt() * j as f64 / 26.0;
            let spec = ModelSpec::new(WeightModel::lognormal(sigma)?, b)?;
            let d_f = regimes::fourier_dimension(&spec)?;
            worst = worst.max((d_f - lognormal_d_f(sigma * sigma / lb)).abs());
        }
        checks.push(ctx.within(format!("b={b} max |d_f - closed form|"), worst, 0.0, 1e-12));
        let spec = lognormal(0.5, b)?;
        let sub = regimes::second_moment_exponent(&spec);
        let sup = 1.0 - regimes::super_branch_minimizer(&spec).1;
        checks.push(ctx.within(format!("b={b} branch gap at critical sigma"), sub - sup, 0.0, 1e-12));
        checks.push(ctx.within(format!("b={b} d_f at critical sigma"), sub, 0.5, 1e-12));
    }
    Ok(checks)
}

fn c2(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    let points = [
        (0.75, 2),
        (0.6, 2),
        (0.9, 2),
        (0.95, 2),
        (0.4, 3),
        (0.7, 3),
        (0.5, 4),
        (0.3, 5),
        (0.2, 10),
        (0.5, 10),
    ];
    for (x, b) in points {
        let spec = two_point(x, b)?;
        let d_h = regimes::hausdorff_dimension(&spec)?;
        let d_f = regimes::fourier_dimension(&spec)?;
        checks.push(ctx.within(format!("two-point x={x} b={b} d_h - d_f"), d_h - d_f, 0.0, 1e-12));
    }
    let others = [
        lognormal(0.2, 2)?,
        lognormal(0.3, 3)?,
        lognormal(0.5, 2)?,
        lognormal(0.5, 10)?,
        lognormal(1.0, 2)?,
        lognormal(1.5, 3)?,
        discrete(&SYMMETRIC, 2)?,
        discrete(&SKEWED, 10)?,
        discrete(&SKEWED, 2)?,
        discrete(&HEAVY, 3)?,
    ];
    let mut seen = [false; 3];
    for spec in &others {
        let d_h = regimes::hausdorff_dimension(spec)?;
        let d_f = regimes::fourier_dimension(spec)?;
        let regime = regimes::classify_squared_regime(spec);
        seen[regime as usize] = true;
        let gap = 1e-6 * ctx.tol;
        checks.push(bound(
            format!("{regime} {:?} b={} d_h - d_f", spec.weight, spec.b),
            d_h - d_f,
            gap,
            d_h - d_f > gap,
        ));
    }
    let regimes_seen = seen.iter().filter(|s| **s).count() as f64;
    checks.push(bound("regimes covered", regimes_seen, 3.0, regimes_seen == 3.0));
    Ok(checks)
}

fn c3(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    for b in [2u32, 3, 10] {
        let mut worst: f64 = 0.0;
        for s in [0.1, 0.3, 0.5, 0.8, 1.0, 1.5, 1.9] {
            let spec = lognormal(s, b)?;
            let tr = regimes::biggins_kyprianou(&spec)?.ok_or("log-normal has no transform")?;
            worst = worst.max((tr.beta - (s / 2.0).sqrt()).abs());
        }
        checks.push(ctx.within(format!("b={b} max |beta - sigma/sqrt(2 ln b)|"), worst, 0.0, 1e-10));
    }
    for (x, b) in [(0.75, 2), (0.5, 4)] {
        let none = regimes::biggins_kyprianou(&two_point(x, b)?)?.is_none();
        checks.push(bound(format!("two-point x={x} b={b} not boundary"), none as u8 as f64, 1.0, none));
    }
    let supers = [
        lognormal(1.0, 2)?,
        lognormal(1.5, 3)?,
        lognormal(0.8, 10)?,
        discrete(&SKEWED, 2)?,
        discrete(&SPIKE, 2)?,
        discrete(&HEAVY, 3)?,
    ];
    for spec in &supers {
        if regimes::classify_squared_regime(spec) != SquaredRegime::SquaredSuper {
            return Err(format!("{:?} b={} is not super-critical", spec.weight, spec.b).into());
        }
        let tr = regimes::biggins_kyprianou(spec)?.ok_or("no boundary transform")?;
        let d_f = regimes::fourier_dimension(spec)?;
        checks.push(ctx.within(
            format!("{:?} b={} d_f - 2 psi(beta)/ln b", spec.weight, spec.b),
            d_f - 2.0 * tr.psi(tr.beta) / spec.log_b(),
            0.0,
            1e-9,
        ));
    }
    Ok(checks)
}

/// `|mc - oracle| / se` for each frequency.
fn z_checks(ctx: &Ctx, tag: &str, k: &[u64], mc: &[f64], se: &[f64], oracle: &[f64]) -> Vec<Check> {
    (0..k.len())
        .map(|i| {
            let z = (mc[i] - oracle[i]).abs() / se[i];
            ctx.within(format!("{tag} s={} z-score", k[i]), z, 0.0, 3.0)
        })
        .collect()
}

fn c4(ctx: &Ctx) -> Checks {
    let depth = ctx.pick(12, 8);
    let reps = ctx.pick(10_000, 400);
    let k = [1u64, 3, 7, 16];
    let mut checks = Vec::new();
    for (tag, spec) in [("two-point b=2", two_point(0.75, 2)?), ("log-normal b=3", lognormal(0.3, 3)?)] {
        let mc = estimators::moment_scaling(&spec, 2.0, &k, Some(depth), MomentMethod::MonteCarlo { reps, seed: ctx.seed })?;
        let oracle = k
            .iter()
            .map(|&s| regimes::second_moment_series(&spec, s, Some(depth), 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        checks.extend(z_checks(ctx, tag, &k, &mc.values, &mc.std_errs, &oracle));
    }
    Ok(checks)
}

fn c5(ctx: &Ctx) -> Checks {
    let depth = ctx.pick(12, 8);
    let reps = ctx.pick(10_000, 400);
    let ns: Vec<u32> = ctx.pick(vec![2, 4, 6], vec![2, 4]);
    let mut checks = Vec::new();
    for (tag, spec) in [("two-point b=2", two_point(0.75, 2)?), ("log-normal b=2", lognormal(0.2, 2)?)] {
        let b = spec.b as u64;
        let k: Vec<u64> = ns.iter().map(|&n| b.pow(n)).collect();
        let mc = estimators::moment_scaling(&spec, 2.0, &k, Some(depth), MomentMethod::MonteCarlo { reps, seed: ctx.seed })?;
        let ratio = spec.weight.moment(2.0) / b as f64;
        let oracle = ns
            .iter()
            .map(|&n| Ok(ratio.powi(n as i32) * regimes::second_moment_series(&spec, 1, Some(depth - n), 0.0)?))
            .collect::<Result<Vec<_>, Error>>()?;
        checks.extend(z_checks(ctx, tag, &k, &mc.values, &mc.std_errs, &oracle));
    }
    Ok(checks)
}

fn c6(ctx: &Ctx) -> Checks {
    let spec = lognormal(0.3, 3)?;
    let mut cfg = FluctuationConfig::new(ctx.pick(5, 3), ctx.pick(12, 8), 100, ctx.seed);
    cfg.conditional_reps = ctx.pick(5000, 400);
    cfg.expect = Some(SquaredRegime::SquaredSub);
    let rep = estimators::fluctuation_suite(&spec, &cfg)?;
    let cond = rep.conditional.ok_or("conditional statistics missing")?;
    Ok(vec![
        ctx.within("E[|mu_hat|^2 | prefix] / prediction", cond.ratio_mean, 1.0, 0.05),
        ctx.within("Re/Im correlation", cond.re_im_corr, 0.0, 0.05),
    ])
}

/// Slope of a statistic of the depth-`n` cascade against `n ln b` over the top
/// levels, one realization refined level by level, averaged over surviving
/// realizations.
fn level_slope<F>(ctx: &Ctx, spec: &ModelSpec, stat: F) -> Result<f64, Error>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (lo, hi) = ctx.pick((16, 20), (10, 12));
    let count = ctx.pick(20, 4);
    let lb = spec.log_b();
    let one = |seed: u64| -> Result<Option<f64>, Error> {
        let mut f = cascade::sample_field(spec, lo, seed, None)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for level in lo..=hi {
            if level > lo {
                f = cascade::refine(&f, 1)?;
            }
            xs.push(level as f64 * lb);
            ys.push(stat(&f.masses));
        }
        if cascade::total_mass(&f) < estimators::SURVIVAL_MASS {
            return Ok(None);
        }
        Ok(Some(crate::numeric::linear_fit(&xs, &ys)?.slope))
    };
    let mut slopes = Vec::with_capacity(count);
    let mut start = 0u64;
    while slopes.len() < count {
        if start > 64 * count as u64 {
            return Err("too many extinct realizations".into());
        }
        for s in estimators::replicates(count, |r| one(estimators::replicate_seed(ctx.seed, start + r))) {
            if let Some(s) = s? {
                if slopes.len() < count {
                    slopes.push(s);
                }
            }
        }
        start += count as u64;
    }
    Ok(slopes.iter().sum::<f64>() / count as f64)
}

fn sub_pair() -> Result<[(&'static str, ModelSpec); 2], Error> {
    Ok([("two-point x=0.75 b=2", two_point(0.75, 2)?), ("log-normal 0.2 ln 2 b=2", lognormal(0.2, 2)?)])
}

fn c7(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    for (tag, spec) in sub_pair()? {
        let d2 = -level_slope(ctx, &spec, |m| m.iter().map(|x| x * x).sum::<f64>().ln())?;
        checks.push(ctx.within(format!("{tag} L2 dimension"), d2, regimes::fourier_dimension(&spec)?, 0.05));
    }
    Ok(checks)
}

fn c8(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    for (tag, spec) in sub_pair()? {
        let d1 = level_slope(ctx, &spec, |m| {
            let total: f64 = m.iter().sum();
            m.iter()
                .filter(|x| **x > 0.0)
                .map(|x| {
                    let p = x / total;
                    -p * p.ln()
                })
                .sum()
        })?;
        checks.push(ctx.within(format!("{tag} entropy dimension"), d1, regimes::hausdorff_dimension(&spec)?, 0.05));
    }
    Ok(checks)
}

fn c9(ctx: &Ctx) -> Checks {
    let mut checks = Vec::new();
    for (alpha, p, q) in [(0.1, 1.5, 4.0), (0.2, 2.0, 8.0), (0.05, 1.2, 3.0)] {
        let fit = estimators::hv_growth(alpha, p, q, 2, 12)?;
        checks.push(ctx.within(
            format!("alpha={alpha} p={p} q={q} growth"),
            fit.estimate,
            p * (alpha + 1.0 / q),
            0.02,
        ));
    }
    Ok(checks)
}

/// Verdict from the closed-form log-normal quantities.
fn lognormal_verdict(s: f64, alpha: f64, p: f64, q: f64) -> Verdict {
    let threshold = 1.0 - 2.0 * alpha - 2.0 / q;
    if s < 0.5 {
        if q <= 2.0 {
            Verdict::Borderline
        } else if s < threshold {
            Verdict::Finite
        } else {
            Verdict::Diverging
        }
    } else {
        let beta = (s / 2.0).sqrt();
        if !(beta > 0.5 && beta < 1.0) || !(alpha < 0.5 && q > 2.0 / (1.0 - 2.0 * alpha)) {
            return Verdict::Borderline;
        }
        let holds = alpha + 1.0 / q <= lognormal_d_f(s) / 2.0;
        if holds && p < 1.0 / beta {
            Verdict::Finite
        } else if !holds && p > 2.0 / (3.0 * beta) {
            Verdict::Diverging
        } else {
            Verdict::Borderline
        }
    }
}

fn c10(_ctx: &Ctx) -> Checks {
    let mut points = Vec::new();
    let alphas = [0.0, 0.05, 0.1, 0.2, 0.3];
    let qs = [3.0, 5.0, 9.0, 17.0, 40.0];
    let ps = [1.1, 1.3, 1.5, 1.7, 2.0];
    for i in 0..25 {
        let (alpha, q, p) = (alphas[i % 5], qs[i / 5], ps[(i * 3) % 5]);
        points.push((0.05 + 0.016 * i as f64, [2u32, 3, 10][i % 3], alpha, p, q));
    }
    for i in 0..25 {
        let (alpha, q, p) = ([0.0, 0.05, 0.1, 0.2, 0.45][(i * 2) % 5], f64::max(qs[i / 5], 6.0), ps[i % 5]);
        points.push((0.55 + 0.055 * i as f64, [2u32, 3, 10][i % 3], alpha, p, q));
    }
    let mut mismatches = 0;
    let mut counts = [0usize; 3];
    for &(s, b, alpha, p, q) in &points {
        let spec = lognormal(s, b)?;
        let rep = estimators::chi_and_norm(&spec, alpha, p, q, 2, 2, 0)?;
        let oracle = lognormal_verdict(s, alpha, p, q);
        counts[oracle as usize] += 1;
        if rep.verdict != oracle {
            mismatches += 1;
        }
    }
    Ok(vec![
        bound("verdict mismatches", mismatches as f64, 0.0, mismatches == 0),
        bound("finite verdicts", counts[0] as f64, 1.0, counts[0] > 0),
        bound("diverging verdicts", counts[1] as f64, 1.0, counts[1] > 0),
        bound("borderline verdicts", counts[2] as f64, 1.0, counts[2] > 0),
    ])
}

fn c11(ctx: &Ctx) -> Checks {
    let spec = lognormal(1.0, 2)?;
    let mut cfg = FluctuationConfig::new(ctx.pick(10, 8), ctx.pick(14, 11), ctx.pick(20_000, 2000), ctx.seed);
    cfg.expect = Some(SquaredRegime::SquaredSuper);
    let rep = estimators::fluctuation_suite(&spec, &cfg)?;
    let tail = rep.tail_index.ok_or("no tail index")?;
    let target = rep.tail_index_target.ok_or("no tail target")?;
    Ok(vec![
        ctx.within("1/beta", target, SQRT_2, 1e-9),
        ctx.within("fitted tail index", tail, SQRT_2, 0.25),
    ])
}

fn c12(ctx: &Ctx) -> Checks {
    let spec = lognormal(1.0, 2)?;
    let tr = regimes::biggins_kyprianou(&spec)?.ok_or("no boundary transform")?;
    let (gamma, r) = (1.5, 0.4);
    let depth = ctx.pick(12, 10);
    let reps = ctx.pick(4000, 400);
    let profiles = estimators::replicates(reps, |i| {
        cascade::partition_profile(&tr, &WeightSource::new(estimators::replicate_seed(ctx.seed, i)), depth, gamma)
    });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in 4..=depth {
        let m = profiles.iter().map(|z| z[n as usize].powf(r)).sum::<f64>() / reps as f64;
        xs.push((n as f64).ln());
        ys.push(m.ln());
    }
    let fit = crate::numeric::linear_fit(&xs, &ys)?;
    Ok(vec![ctx.within("slope of ln E[Z^r] vs ln n", fit.slope, -1.5 * r * gamma, 0.35)])
}

fn c13(ctx: &Ctx) -> Checks {
    let k: Vec<u64> = (0..=32).map(|j| (16.0 * 256f64.powf(j as f64 / 32.0)).round() as u64).collect();
    let mut checks = Vec::new();
    for (tag, spec) in [("log-normal b=2", lognormal(0.2, 2)?), ("log-normal b=3", lognormal(0.3, 3)?)] {
        let fit = estimators::moment_scaling(&spec, 2.0, &k, None, MomentMethod::Series { tol: 1e-14 })?;
        let target = -(1.0 - spec.weight.moment(2.0).ln() / spec.log_b());
        checks.push(ctx.within(format!("{tag} slope"), fit.fit.estimate, target, 0.05));
    }
    Ok(checks)
}

fn c14(ctx: &Ctx) -> Checks {
    let spec = lognormal(0.2, 2)?;
    let gamma = 0.8 * regimes::fourier_dimension(&spec)? / 2.0;
    let (shallow, deep) = ctx.pick((10, 16), (8, 12));
    let reps = ctx.pick(100, 20);
    let ratios = estimators::replicates(reps, |i| -> Result<f64, crate::cascade::CascadeError> {
        let f = cascade::sample_field(&spec, deep, estimators::replicate_seed(ctx.seed, i), None)?;
        let coarse = cascade::block_sums(&f.masses, spec.b, deep - shallow);
        Ok(estimators::frostman_stat(&f, gamma) / estimators::frostman_stat_of(spec.b, shallow, &coarse, gamma))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let frac = ratios.iter().filter(|r| **r < 2.0).count() as f64 / reps as f64;
    Ok(vec![bound("fraction with growth ratio < 2", frac, 0.95, frac >= 0.95)])
}

fn c15(ctx: &Ctx) -> Checks {
    let cfg = VerifyConfig {
        scale: Scale::Quick,
        seed: ctx.seed,
        tolerance_scale: ctx.tol,
        only: (1..CRITERIA).collect(),
    };
    let mut digests = Vec::new();
    for threads in [1usize, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        for _ in 0..2 {
            digests.push(pool.install(|| run_suite(&cfg)).digest());
        }
    }
    let distinct = {
        let mut d = digests.clone();
        d.sort();
        d.dedup();
        d.len()
    };
    Ok(vec![bound("distinct digests over 6 runs", distinct as f64, 1.0, distinct == 1)])
}

/// Runs criterion `id` with its own derived seed.
pub fn run_criterion(id: u32, cfg: &VerifyConfig) -> CriterionOutcome {
    let ctx = Ctx {
        scale: cfg.scale,
        seed: cfg.seed ^ ((id as u64) << 48),
        tol: cfg.tolerance_scale,
    };
    let start = Instant::now();
    let result = match id {
        1 => c1(&ctx),
        2 => c2(&ctx),
        3 => c3(&ctx),
        4 => c4(&ctx),
        5 => c5(&ctx),
        6 => c6(&ctx),
        7 => c7(&ctx),
        8 => c8(&ctx),
        9 => c9(&ctx),
        10 => c10(&ctx),
        11 => c11(&ctx),
        12 => c12(&ctx),
        13 => c13(&ctx),
        14 => c14(&ctx),
        15 => c15(&ctx),
        _ => Err(format!("no criterion {id}").into()),
    };
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionOutcome {
        id,
        name: criterion_name(id).into(),
        passed: error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.passed),
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(cfg: &VerifyConfig) -> SuiteSummary {
    run_suite_with(cfg, |_| {})
}

/// Runs the suite, handing each outcome to `report` as it completes.
pub fn run_suite_with<F: FnMut(&CriterionOutcome)>(cfg: &VerifyConfig, mut report: F) -> SuiteSummary {
    let ids: Vec<u32> = if cfg.only.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        cfg.only.clone()
    };
    let outcomes: Vec<CriterionOutcome> = ids
        .into_iter()
        .map(|id| {
            let o = run_criterion(id, cfg);
            report(&o);
            o
        })
        .collect();
    SuiteSummary {
        config: cfg.clone(),
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_criteria_pass() {
        let cfg = VerifyConfig {
            only: vec![1, 2, 3, 9, 10, 13],
            ..Default::default()
        };
        let s = run_suite(&cfg);
        for o in &s.outcomes {
            assert!(o.passed, "{}", o.line());
        }
    }

    #[test]
    fn zero_tolerance_fails() {
        let cfg = VerifyConfig {
            only: vec![9, 13],
            tolerance_scale: 0.0,
            ..Default::default()
        };
        assert!(!run_suite(&cfg).passed);
    }

    #[test]
    fn unknown_criterion_errors() {
        let o = run_criterion(99, &VerifyConfig::default());
        assert!(!o.passed && o.error.is_some());
    }
}
