//! Realizations of the level-`n` cascade measure: leaf masses, the total and
//! squared martingales, branching random walk values and partition functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regimes::BoundaryTransform;
use crate::weights::{ModelSpec, WeightModel, WeightSampler, WeightSource};

/// Default bound on `b^depth`.
pub const DEFAULT_MAX_LEAVES: u64 = 1 << 25;

const PAR_THRESHOLD: usize = 1 << 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("b^depth = {b}^{depth} exceeds the cap of {cap} leaves")]
    DepthTooLarge { b: u32, depth: u32, cap: u64 },
    #[error("boundary transform belongs to a different model")]
    TransformMismatch,
    #[error("operation requires the Lebesgue base measure")]
    NotLebesgue,
    #[error("invalid base measure: {0}")]
    BadBase(String),
}

/// A finite b-adic base measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseMeasure {
    Lebesgue,
    /// Self-similar product measure: digit `j` carries mass fraction `probs[j]`.
    Bernoulli { probs: Vec<f64> },
    /// Convex combination of base measures.
    Mixture { parts: Vec<(f64, BaseMeasure)> },
}

impl Default for BaseMeasure {
    fn default() -> Self {
        BaseMeasure::Lebesgue
    }
}

impl BaseMeasure {
    pub fn bernoulli(probs: Vec<f64>) -> Result<Self, CascadeError> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(CascadeError::BadBase("negative or non-finite digit mass".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CascadeError::BadBase(format!("digit masses sum to {total}")));
        }
        Ok(BaseMeasure::Bernoulli { probs })
    }

    pub fn mixture(parts: Vec<(f64, BaseMeasure)>) -> Result<Self, CascadeError> {
        if parts.is_empty() || parts.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(CascadeError::BadBase("mixture weights must be non-negative".into()));
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CascadeError::BadBase(format!("mixture weights sum to {total}")));
        }
        Ok(BaseMeasure::Mixture { parts })
    }

    pub fn check_base(&self, b: u32) -> Result<(), CascadeError> {
        match self {
            BaseMeasure::Lebesgue => Ok(()),
            BaseMeasure::Bernoulli { probs } if probs.len() == b as usize => Ok(()),
            BaseMeasure::Bernoulli { probs } => Err(CascadeError::BadBase(format!(
                "{} digit masses for base {b}",
                probs.len()
            ))),
            BaseMeasure::Mixture { parts } => parts.iter().try_for_each(|(_, m)| m.check_base(b)),
        }
    }

    pub fn tag(&self) -> u32 {
        match self {
            BaseMeasure::Lebesgue => 0,
            BaseMeasure::Bernoulli { .. } => 1,
            BaseMeasure::Mixture { .. } => 2,
        }
    }

    pub fn description(&self) -> String {
        match self {
            BaseMeasure::Lebesgue => "lebesgue".into(),
            BaseMeasure::Bernoulli { probs } => format!("bernoulli{probs:?}"),
            BaseMeasure::Mixture { parts } => {
                let inner: Vec<String> = parts.iter().map(|(w, m)| format!("{w}*{}", m.description())).collect();
                format!("mixture[{}]", inner.join(" + "))
            }
        }
    }

    /// Mass of the `index`-th b-adic interval of generation `level`.
    pub fn cylinder_mass(&self, b: u32, level: u32, index: u64) -> f64 {
        match self {
            BaseMeasure::Lebesgue => (b as f64).powi(-(level as i32)),
            BaseMeasure::Bernoulli { probs } => {
                let mut idx = index;
                let mut mass = 1.0;
                for _ in 0..level {
                    mass *= probs[(idx % b as u64) as usize];
                    idx /= b as u64;
                }
                mass
            }
            BaseMeasure::Mixture { parts } => parts.iter().map(|(w, m)| w * m.cylinder_mass(b, level, index)).sum(),
        }
    }

    /// Lower `L^p` dimension `liminf -log sum nu(I)^p / (n (p-1) log b)`.
    pub fn lp_dimension(&self, b: u32, p: f64) -> f64 {
        match self {
            BaseMeasure::Lebesgue => 1.0,
            BaseMeasure::Bernoulli { probs } => {
                let s: f64 = probs.iter().filter(|q| **q > 0.0).map(|q| q.powf(p)).sum();
                -s.ln() / ((p - 1.0) * (b as f64).ln())
            }
            BaseMeasure::Mixture { parts } => parts
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, m)| m.lp_dimension(b, p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    #[inline]
    fn child(&self, b: u32, level: u32, index: u64, parent_mass: f64, w: f64) -> f64 {
        match self {
            BaseMeasure::Lebesgue => parent_mass * w / b as f64,
            BaseMeasure::Bernoulli { probs } => parent_mass * w * probs[(index % b as u64) as usize],
            BaseMeasure::Mixture { .. } => {
                let up = self.cylinder_mass(b, level - 1, index / b as u64);
                if up == 0.0 {
                    0.0
                } else {
                    parent_mass * w * (self.cylinder_mass(b, level, index) / up)
                }
            }
        }
    }
}

/// One realization of the level-`depth` cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeField {
    pub spec: ModelSpec,
    pub depth: u32,
    pub source: WeightSource,
    pub base: BaseMeasure,
    /// `masses[k]` is the mass of the `k`-th b-adic interval, left to right.
    pub masses: Vec<f64>,
}

impl CascadeField {
    pub fn seed(&self) -> u64 {
        self.source.seed()
    }

    pub fn b(&self) -> u32 {
        self.spec.b
    }
}

fn check_cap(b: u32, depth: u32, cap: u64) -> Result<usize, CascadeError> {
    match (b as u64).checked_pow(depth) {
        Some(n) if n <= cap => Ok(n as usize),
        _ => Err(CascadeError::DepthTooLarge { b, depth, cap }),
    }
}

/// Visits levels `from + 1 ..= to`, mapping each parent value and child
/// weight to the child value. Zero parents are not expanded when `prune` is set.
fn grow<F>(
    b: u32,
    source: &WeightSource,
    sampler: &WeightSampler,
    mut values: Vec<f64>,
    from: u32,
    to: u32,
    prune: bool,
    step: F,
) -> Vec<f64>
where
    F: Fn(u32, u64, f64, f64) -> f64 + Sync,
{
    let bu = b as usize;
    for level in from + 1..=to {
        let offset = (b as u64).pow(level);
        let mut next = vec![0.0; values.len() * bu];
        let fill = |(p, chunk): (usize, &mut [f64])| {
            let parent = values[p];
            if prune && parent == 0.0 {
                return;
            }
            for (j, slot) in chunk.iter_mut().enumerate() {
                let index = (p * bu + j) as u64;
                let w = sampler.weight(source, level, offset + index);
                *slot = step(level, index, parent, w);
            }
        };
        if next.len() >= PAR_THRESHOLD {
            next.par_chunks_mut(bu).enumerate().for_each(fill);
        } else {
            next.chunks_mut(bu).enumerate().for_each(fill);
        }
        values = next;
    }
    values
}

pub fn sample_field(
    spec: &ModelSpec,
    depth: u32,
    seed: u64,
    base: Option<BaseMeasure>,
) -> Result<CascadeField, CascadeError> {
    sample_field_with(spec, depth, WeightSource::new(seed), base.unwrap_or_default(), DEFAULT_MAX_LEAVES)
}

pub fn sample_field_with(
    spec: &ModelSpec,
    depth: u32,
    source: WeightSource,
    base: BaseMeasure,
    max_leaves: u64,
) -> Result<CascadeField, CascadeError> {
    check_cap(spec.b, depth, max_leaves)?;
    base.check_base(spec.b)?;
    let root = vec![base.cylinder_mass(spec.b, 0, 0)];
    let masses = build(spec, &source, &base, root, 0, depth);
    Ok(CascadeField {
        spec: spec.clone(),
        depth,
        source,
        base,
        masses,
    })
}

fn build(spec: &ModelSpec, source: &WeightSource, base: &BaseMeasure, masses: Vec<f64>, from: u32, to: u32) -> Vec<f64> {
    let sampler = WeightSampler::new(&spec.weight);
    let b = spec.b;
    grow(b, source, &sampler, masses, from, to, true, |level, index, parent, w| {
        base.child(b, level, index, parent, w)
    })
}

/// The field of the same realization at depth `depth + extra`.
pub fn refine(field: &CascadeField, extra: u32) -> Result<CascadeField, CascadeError> {
    refine_with(field, extra, DEFAULT_MAX_LEAVES)
}

pub fn refine_with(field: &CascadeField, extra: u32, max_leaves: u64) -> Result<CascadeField, CascadeError> {
    let depth = field.depth + extra;
    check_cap(field.spec.b, depth, max_leaves)?;
    let masses = build(&field.spec, &field.source, &field.base, field.masses.clone(), field.depth, depth);
    Ok(CascadeField {
        masses,
        depth,
        ..field.clone()
    })
}

/// The Lebesgue field, as produced by the constant weight `W = 1`.
pub fn lebesgue_fixture(b: u32, depth: u32) -> Result<CascadeField, CascadeError> {
    let spec = ModelSpec {
        weight: WeightModel::Discrete { atoms: vec![(1.0, 1.0)] },
        b,
    };
    sample_field(&spec, depth, 0, None)
}

/// Sums of consecutive blocks of `b^levels_up` masses.
pub fn block_sums(masses: &[f64], b: u32, levels_up: u32) -> Vec<f64> {
    let block = (b as usize).pow(levels_up);
    masses.chunks(block).map(|c| c.iter().sum()).collect()
}

pub fn total_mass(field: &CascadeField) -> f64 {
    field.masses.iter().sum()
}

/// `M_n(W2) = b^-n sum_u prod_j W(u|j)^2 / E[W^2]`, recomputed from the
/// weight draws of the field.
pub fn squared_mass(field: &CascadeField) -> Result<f64, CascadeError> {
    if field.base != BaseMeasure::Lebesgue {
        return Err(CascadeError::NotLebesgue);
    }
    let b = field.spec.b;
    let m2 = field.spec.weight.moment(2.0);
    let sampler = WeightSampler::new(&field.spec.weight);
    let leaves = grow(b, &field.source, &sampler, vec![1.0], 0, field.depth, true, |_, _, parent, w| {
        parent * (w * w / m2) / b as f64
    });
    Ok(leaves.iter().sum())
}

/// `M_n(W2) = b^n sum masses^2 / E[W^2]^n`.
pub fn squared_mass_from_masses(field: &CascadeField) -> Result<f64, CascadeError> {
    if field.base != BaseMeasure::Lebesgue {
        return Err(CascadeError::NotLebesgue);
    }
    let ratio = field.spec.b as f64 / field.spec.weight.moment(2.0);
    let s: f64 = field.masses.iter().map(|m| m * m).sum();
    Ok(s * ratio.powi(field.depth as i32))
}

fn check_transform(spec: &ModelSpec, tr: &BoundaryTransform) -> Result<(), CascadeError> {
    if &tr.spec == spec {
        Ok(())
    } else {
        Err(CascadeError::TransformMismatch)
    }
}

/// Leaf values `V(u) = sum_j xi(u|j)` of the branching random walk, `+inf`
/// below a zero weight.
pub fn brw_values(field: &CascadeField, tr: &BoundaryTransform) -> Result<Vec<f64>, CascadeError> {
    check_transform(&field.spec, tr)?;
    let sampler = WeightSampler::new(&field.spec.weight);
    Ok(grow(field.spec.b, &field.source, &sampler, vec![0.0], 0, field.depth, false, |_, _, parent, w| {
        parent + tr.xi(w)
    }))
}

#[inline]
fn boltzmann(v: f64, gamma: f64) -> f64 {
    if v == f64::INFINITY {
        0.0
    } else {
        (-gamma * v).exp()
    }
}

/// `D_n = sum_u V(u) e^-V(u)`.
pub fn derivative_martingale(field: &CascadeField, tr: &BoundaryTransform) -> Result<f64, CascadeError> {
    Ok(brw_values(field, tr)?
        .iter()
        .map(|&v| if v == f64::INFINITY { 0.0 } else { v * (-v).exp() })
        .sum())
}

/// `Z_{n, gamma} = sum_u e^(-gamma V(u))`.
pub fn partition_function(field: &CascadeField, tr: &BoundaryTransform, gamma: f64) -> Result<f64, CascadeError> {
    Ok(brw_values(field, tr)?.iter().map(|&v| boltzmann(v, gamma)).sum())
}

/// `Z_{n, gamma}` for every `n` in `0..=depth` along one realization.
pub fn partition_profile(
    tr: &BoundaryTransform,
    source: &WeightSource,
    depth: u32,
    gamma: f64,
) -> Vec<f64> {
    let spec = &tr.spec;
    let sampler = WeightSampler::new(&spec.weight);
    let mut values = vec![0.0];
    let mut out = vec![1.0];
    for level in 1..=depth {
        values = grow(spec.b, source, &sampler, values, level - 1, level, false, |_, _, parent, w| {
            parent + tr.xi(w)
        });
        out.push(values.iter().map(|&v| boltzmann(v, gamma)).sum());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regimes::biggins_kyprianou;
    use approx::assert_relative_eq;

    fn lognormal(r: f64, b: u32) -> ModelSpec {
        let sigma = (r * (b as f64).ln()).sqrt();
        ModelSpec::new(WeightModel::lognormal(sigma).unwrap(), b).unwrap()
    }

    #[test]
    fn depth_zero_and_fixture() {
        let s = lognormal(0.3, 3);
        assert_eq!(sample_field(&s, 0, 5, None).unwrap().masses, vec![1.0]);
        let f = lebesgue_fixture(3, 5).unwrap();
        assert_eq!(f.masses.len(), 243);
        assert!(f.masses.iter().all(|&m| (m - 3f64.powi(-5)).abs() < 1e-18));
        assert_relative_eq!(total_mass(&f), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn depth_cap() {
        let s = lognormal(0.3, 3);
        assert!(matches!(
            sample_field(&s, 40, 1, None),
            Err(CascadeError::DepthTooLarge { .. })
        ));
        let f = sample_field(&s, 3, 1, None).unwrap();
        assert!(refine_with(&f, 2, 200).is_err());
    }

    #[test]
    fn refine_matches_direct_sampling() {
        let s = lognormal(0.4, 2);
        let f = sample_field(&s, 4, 11, None).unwrap();
        assert_eq!(refine(&f, 0).unwrap(), f);
        let g = refine(&f, 13).unwrap();
        let h = sample_field(&s, 17, 11, None).unwrap();
        assert_eq!(g.masses, h.masses);
    }

    #[test]
    fn block_sums_carry_subtree_mass() {
        // Coarsening a refined field gives the coarse masses times the
        // normalized subtree totals, which are 1 only for constant weights.
        let s = lognormal(0.4, 3);
        let f = sample_field(&s, 3, 2, None).unwrap();
        let g = refine(&f, 2).unwrap();
        let coarse = block_sums(&g.masses, 3, 2);
        let sampler = WeightSampler::new(&s.weight);
        for (k, (&c, &m)) in coarse.iter().zip(&f.masses).enumerate() {
            let mut sub = 0.0;
            for j1 in 0..3u64 {
                let i1 = 3 * k as u64 + j1;
                let w1 = sampler.weight(&f.source, 4, 81 + i1);
                for j2 in 0..3u64 {
                    let i2 = 3 * i1 + j2;
                    sub += w1 * sampler.weight(&f.source, 5, 243 + i2);
                }
            }
            assert_relative_eq!(c, m * sub / 9.0, max_relative = 1e-12);
        }
        let l = lebesgue_fixture(2, 3).unwrap();
        let lr = refine(&l, 3).unwrap();
        assert_eq!(block_sums(&lr.masses, 2, 3), l.masses);
    }

    #[test]
    fn zeros_are_absorbing() {
        let s = ModelSpec::new(WeightModel::two_point(0.5).unwrap(), 2).unwrap();
        let f = sample_field(&s, 6, 3, None).unwrap();
        let g = refine(&f, 3).unwrap();
        for (k, &m) in f.masses.iter().enumerate() {
            if m == 0.0 {
                assert!(g.masses[k * 8..(k + 1) * 8].iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn squared_mass_identity() {
        for (s, depth) in [(lognormal(0.3, 3), 7), (lognormal(0.9, 2), 12)] {
            let f = sample_field(&s, depth, 9, None).unwrap();
            let a = squared_mass(&f).unwrap();
            let b = squared_mass_from_masses(&f).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn tail_salt_keeps_prefix() {
        let s = lognormal(0.3, 3);
        let base = WeightSource::new(4);
        let f = sample_field_with(&s, 3, base, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES).unwrap();
        let salted = base.with_tail_salt(3, 17);
        let g = sample_field_with(&s, 6, salted, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES).unwrap();
        let h = sample_field_with(&s, 6, base, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES).unwrap();
        let g3 = sample_field_with(&s, 3, salted, BaseMeasure::Lebesgue, DEFAULT_MAX_LEAVES).unwrap();
        assert_eq!(g3.masses, f.masses);
        assert_ne!(g.masses, h.masses);
    }

    #[test]
    fn brw_two_ways() {
        let s = lognormal(0.8, 3);
        let tr = biggins_kyprianou(&s).unwrap().unwrap();
        let f = sample_field(&s, 6, 21, None).unwrap();
        let v = brw_values(&f, &tr).unwrap();
        let n = 6.0;
        for (k, &m) in f.masses.iter().enumerate() {
            let prod = m * 3f64.powi(6);
            let direct = -tr.t_star * prod.ln() + n * tr.log_norm;
            assert!((v[k] - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
        let z = partition_function(&f, &tr, 1.0).unwrap();
        let profile = partition_profile(&tr, &f.source, 6, 1.0);
        assert_relative_eq!(profile[6], z, max_relative = 1e-12);
        assert_eq!(derivative_martingale(&sample_field(&s, 0, 1, None).unwrap(), &tr).unwrap(), 0.0);
        let other = lognormal(0.7, 3);
        assert_eq!(
            brw_values(&sample_field(&other, 2, 1, None).unwrap(), &tr),
            Err(CascadeError::TransformMismatch)
        );
    }

    #[test]
    fn squared_mass_partition_identity() {
        // M_n(W2) = e^(-n psi(2 beta)) Z_{n, 2 beta}
        let s = lognormal(0.8, 2);
        let tr = biggins_kyprianou(&s).unwrap().unwrap();
        let f = sample_field(&s, 10, 5, None).unwrap();
        let z = partition_function(&f, &tr, 2.0 * tr.beta).unwrap();
        let lhs = squared_mass(&f).unwrap();
        let rhs = (-10.0 * tr.psi(2.0 * tr.beta)).exp() * z;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
    }

    #[test]
    fn base_measures() {
        let bern = BaseMeasure::bernoulli(vec![0.25, 0.75]).unwrap();
        let mix = BaseMeasure::mixture(vec![(0.5, BaseMeasure::Lebesgue), (0.5, bern.clone())]).unwrap();
        for m in [&bern, &mix] {
            assert_relative_eq!(m.cylinder_mass(2, 0, 0), 1.0);
            for level in 1..6u32 {
                for idx in 0..(1u64 << (level - 1)) {
                    let parent = m.cylinder_mass(2, level - 1, idx);
                    let kids = m.cylinder_mass(2, level, 2 * idx) + m.cylinder_mass(2, level, 2 * idx + 1);
                    assert!((parent - kids).abs() < 1e-12);
                }
            }
        }
        assert!(BaseMeasure::bernoulli(vec![0.5, 0.6]).is_err());
        let s = lognormal(0.3, 3);
        assert!(sample_field(&s, 2, 1, Some(bern.clone())).is_err());
        let s2 = lognormal(0.3, 2);
        let unit = ModelSpec {
            weight: WeightModel::Discrete { atoms: vec![(1.0, 1.0)] },
            b: 2,
        };
        let f = sample_field(&unit, 5, 0, Some(bern.clone())).unwrap();
        for (k, &m) in f.masses.iter().enumerate() {
            assert_relative_eq!(m, bern.cylinder_mass(2, 5, k as u64), max_relative = 1e-14);
        }
        let g = sample_field(&s2, 5, 0, Some(mix)).unwrap();
        assert_eq!(squared_mass(&g), Err(CascadeError::NotLebesgue));
        assert_relative_eq!(bern.lp_dimension(2, 2.0), -(0.625f64).log2(), epsilon = 1e-14);
    }
}
