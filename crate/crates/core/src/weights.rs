//! Weight distributions for the cascade and their exact analytic functionals.
//!
//! A [`WeightModel`] is the law of the i.i.d. random weight `W` attached to every
//! node of the `b`-ary tree. Every functional here is evaluated in closed form;
//! nothing is estimated. Logarithms are natural throughout, with the conventions
//! `0^t = 0` for `t > 0`, `0^0 = 1` and `0 ln 0 = 0`.

use rand::RngCore;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `E[W] = 1` and on the probability total of discrete models.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("E[W] = {0} but the weight must have mean 1")]
    MeanNotOne(f64),
    #[error("weight is almost surely constant")]
    ConstantWeight,
    #[error("atom value {0} is negative")]
    NegativeAtom(f64),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("branching base must be an integer >= 2, got {0}")]
    InvalidBase(u32),
    #[error("E[W^t] vanishes at t = {0}")]
    ZeroMoment(f64),
}

/// Law of the cascade weight `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightModel {
    /// `W = exp(sigma N - sigma^2 / 2)` with `N` standard normal.
    LogNormal { sigma: f64 },
    /// `P(W = 1/x) = x`, `P(W = 0) = 1 - x`.
    TwoPoint { x: f64 },
    /// Finitely many atoms `(value, probability)`.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl WeightModel {
    pub fn lognormal(sigma: f64) -> Result<Self, WeightError> {
        validate(WeightModel::LogNormal { sigma })
    }

    pub fn two_point(x: f64) -> Result<Self, WeightError> {
        validate(WeightModel::TwoPoint { x })
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self, WeightError> {
        validate(WeightModel::Discrete { atoms })
    }

    /// Atoms of a finitely supported law, merged and sorted by value.
    /// `None` for the log-normal family.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            WeightModel::LogNormal { .. } => None,
            WeightModel::TwoPoint { x } => {
                let mut atoms = Vec::with_capacity(2);
                if *x < 1.0 {
                    atoms.push((0.0, 1.0 - x));
                }
                atoms.push((1.0 / x, *x));
                Some(atoms)
            }
            WeightModel::Discrete { atoms } => Some(canonical_atoms(atoms)),
        }
    }

    /// `E[W^t]` for `t >= 0`.
    pub fn moment(&self, t: f64) -> f64 {
        match self {
            WeightModel::LogNormal { sigma } => (0.5 * sigma * sigma * t * (t - 1.0)).exp(),
            WeightModel::TwoPoint { x } => {
                if t == 0.0 {
                    1.0
                } else {
                    x.powf(1.0 - t)
                }
            }
            WeightModel::Discrete { atoms } => atoms.iter().map(|&(v, p)| p * pow0(v, t)).sum(),
        }
    }

    /// `E[W^t ln W]`.
    pub fn moment_log(&self, t: f64) -> f64 {
        match self {
            WeightModel::LogNormal { sigma } => {
                let s2 = sigma * sigma;
                self.moment(t) * s2 * (2.0 * t - 1.0) / 2.0
            }
            WeightModel::TwoPoint { x } => x.powf(1.0 - t) * (1.0 / x).ln(),
            WeightModel::Discrete { atoms } => atoms
                .iter()
                .filter(|&&(v, _)| v > 0.0)
                .map(|&(v, p)| p * v.powf(t) * v.ln())
                .sum(),
        }
    }

    /// `E[W^t (ln W)^2]`.
    pub fn moment_log2(&self, t: f64) -> f64 {
        match self {
            WeightModel::LogNormal { sigma } => {
                // Differentiate exp(s2 t(t-1)/2) twice in t.
                let s2 = sigma * sigma;
                let d = s2 * (2.0 * t - 1.0) / 2.0;
                self.moment(t) * (d * d + s2)
            }
            WeightModel::TwoPoint { x } => {
                let l = (1.0 / x).ln();
                x.powf(1.0 - t) * l * l
            }
            WeightModel::Discrete { atoms } => atoms
                .iter()
                .filter(|&&(v, _)| v > 0.0)
                .map(|&(v, p)| {
                    let l = v.ln();
                    p * v.powf(t) * l * l
                })
                .sum(),
        }
    }

    /// `E[W ln W]`, the entropy functional of the non-degeneracy condition.
    pub fn mean_w_log_w(&self) -> f64 {
        match self {
            WeightModel::LogNormal { sigma } => 0.5 * sigma * sigma,
            _ => self.moment_log(1.0),
        }
    }

    pub fn second_moment(&self) -> f64 {
        self.moment(2.0)
    }

    /// `E[(W - 1)^2]`.
    pub fn centered_second_moment(&self) -> f64 {
        match self {
            WeightModel::LogNormal { sigma } => (sigma * sigma).exp_m1(),
            WeightModel::TwoPoint { x } => (1.0 - x) / x,
            WeightModel::Discrete { atoms } => {
                atoms.iter().map(|&(v, p)| p * (v - 1.0) * (v - 1.0)).sum()
            }
        }
    }

    /// Essential supremum and its probability, for bounded laws.
    pub fn max_atom(&self) -> Option<(f64, f64)> {
        self.atoms().and_then(|a| a.last().copied())
    }

    /// Whether `ln W` restricted to `W > 0` lives on an arithmetic progression.
    /// Only decided for finitely supported laws.
    pub fn lattice(&self) -> Option<bool> {
        let atoms = self.atoms()?;
        let logs: Vec<f64> = atoms.iter().filter(|a| a.0 > 0.0).map(|a| a.0.ln()).collect();
        if logs.len() <= 2 {
            return Some(true);
        }
        let diffs: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
        let span = logs[logs.len() - 1] - logs[0];
        let smallest = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        for divisor in 1..=64u32 {
            let step = smallest / divisor as f64;
            let on_grid = logs.iter().all(|l| {
                let k = (l - logs[0]) / step;
                (k - k.round()).abs() < 1e-9 * (span / step).max(1.0)
            });
            if on_grid {
                return Some(true);
            }
        }
        Some(false)
    }
}

fn pow0(v: f64, t: f64) -> f64 {
    if v == 0.0 {
        if t == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        v.powf(t)
    }
}

fn canonical_atoms(atoms: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (v, p) in sorted {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    merged
}

/// Checks the standing assumptions `W >= 0`, `E[W] = 1`, `W` non-constant.
///
/// Discrete models are checked, never renormalized. Duplicate atoms are merged
/// and atoms sorted by value; this does not change the law.
pub fn validate(model: WeightModel) -> Result<WeightModel, WeightError> {
    match model {
        WeightModel::LogNormal { sigma } => {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(WeightError::InvalidParameter(format!("sigma = {sigma}")));
            }
            if sigma == 0.0 {
                return Err(WeightError::ConstantWeight);
            }
            Ok(WeightModel::LogNormal { sigma })
        }
        WeightModel::TwoPoint { x } => {
            if !(x > 0.0 && x <= 1.0) {
                return Err(WeightError::InvalidParameter(format!(
                    "two-point parameter x = {x} must lie in (0, 1]"
                )));
            }
            if x == 1.0 {
                return Err(WeightError::ConstantWeight);
            }
            Ok(WeightModel::TwoPoint { x })
        }
        WeightModel::Discrete { atoms } => {
            if let Some(&(v, _)) = atoms.iter().find(|a| a.0 < 0.0 || !a.0.is_finite()) {
                return Err(WeightError::NegativeAtom(v));
            }
            if let Some(&(_, p)) = atoms.iter().find(|a| !(a.1 > 0.0) || !a.1.is_finite()) {
                return Err(WeightError::InvalidProbability(format!(
                    "atom probability {p} must be positive"
                )));
            }
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > MEAN_TOL {
                return Err(WeightError::InvalidProbability(format!(
                    "probabilities sum to {total}"
                )));
            }
            let atoms = canonical_atoms(&atoms);
            if atoms.len() < 2 {
                return Err(WeightError::ConstantWeight);
            }
            let mean: f64 = atoms.iter().map(|&(v, p)| v * p).sum();
            if (mean - 1.0).abs() > MEAN_TOL {
                return Err(WeightError::MeanNotOne(mean));
            }
            Ok(WeightModel::Discrete { atoms })
        }
    }
}

/// A weight law together with the branching base `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub weight: WeightModel,
    pub b: u32,
}

impl ModelSpec {
    pub fn new(weight: WeightModel, b: u32) -> Result<Self, WeightError> {
        if b < 2 {
            return Err(WeightError::InvalidBase(b));
        }
        Ok(ModelSpec {
            weight: validate(weight)?,
            b,
        })
    }

    pub fn log_b(&self) -> f64 {
        (self.b as f64).ln()
    }

    /// Structure function `phi(t) = ln E[W^t] - (t - 1) ln b` and its derivative.
    pub fn structure_fn(&self, t: f64) -> Result<(f64, f64), WeightError> {
        let m = self.weight.moment(t);
        if !(m > 0.0) {
            return Err(WeightError::ZeroMoment(t));
        }
        let phi = m.ln() - (t - 1.0) * self.log_b();
        let phi_prime = self.weight.moment_log(t) / m - self.log_b();
        Ok((phi, phi_prime))
    }

    /// `phi''(t)`, nonnegative by Cauchy-Schwarz.
    pub fn structure_fn_second(&self, t: f64) -> f64 {
        let m = self.weight.moment(t);
        let m1 = self.weight.moment_log(t);
        let m2 = self.weight.moment_log2(t);
        (m2 * m - m1 * m1) / (m * m)
    }

    pub fn check_conditions(&self, p: f64) -> Result<Conditions, WeightError> {
        if !(p > 1.0) {
            return Err(WeightError::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        Ok(Conditions {
            nondegenerate: self.weight.mean_w_log_w() < self.log_b(),
            lp_bounded: self.weight.moment(p) < (self.b as f64).powf(p - 1.0),
        })
    }
}

/// Mandelbrot-Kahane non-degeneracy and Kahane's `L^p` boundedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub nondegenerate: bool,
    pub lp_bounded: bool,
}

/// Position of a node in the `b`-ary tree: `index` counts the level-`level`
/// intervals from the left, so the node is `[index b^-level, (index+1) b^-level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub level: u32,
    pub index: u64,
}

impl NodeId {
    pub fn root() -> Self {
        NodeId { level: 0, index: 0 }
    }

    /// Builds a node from its digit path `d_1 .. d_m`.
    pub fn from_digits(b: u32, digits: &[u32]) -> Self {
        let index = digits.iter().fold(0u64, |acc, &d| acc * b as u64 + d as u64);
        NodeId {
            level: digits.len() as u32,
            index,
        }
    }

    /// `b^m + sum d_j b^(m-j)`; unique across levels.
    pub fn heap_index(&self, b: u32) -> u64 {
        (b as u64).pow(self.level) + self.index
    }

    pub fn child(&self, b: u32, digit: u32) -> Self {
        NodeId {
            level: self.level + 1,
            index: self.index * b as u64 + digit as u64,
        }
    }
}

#[inline]
fn splitmix(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}

/// Counter-based source of tree weights.
///
/// Every weight is a pure function of the seed and the node's heap index, so
/// fields can be refined, sampled out of order or in parallel and always see
/// the same weights. A tail salt re-keys every node strictly deeper than a
/// given level while leaving the prefix untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightSource {
    seed: u64,
    key: u64,
    tail: Option<(u32, u64, u64)>,
}

impl WeightSource {
    pub fn new(seed: u64) -> Self {
        WeightSource {
            seed,
            key: splitmix(seed),
            tail: None,
        }
    }

    /// Resamples all nodes deeper than `prefix_level` with an independent key.
    pub fn with_tail_salt(self, prefix_level: u32, salt: u64) -> Self {
        let tail_key = splitmix(self.key ^ splitmix(salt.wrapping_add(0x5bd1_e995)));
        WeightSource {
            tail: Some((prefix_level, salt, tail_key)),
            ..self
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tail_salt(&self) -> Option<(u32, u64)> {
        self.tail.map(|(l, s, _)| (l, s))
    }

    #[inline]
    pub fn node_rng(&self, level: u32, heap: u64) -> SplitMix64 {
        let key = match self.tail {
            Some((prefix, _, tail_key)) if level > prefix => tail_key,
            _ => self.key,
        };
        SplitMix64::seed_from_u64(key ^ heap)
    }
}

/// Prepared sampler for one weight law.
#[derive(Debug, Clone)]
pub struct WeightSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    LogNormal { sigma: f64, shift: f64 },
    TwoPoint { x: f64, value: f64 },
    Table { values: Vec<f64>, cumulative: Vec<f64> },
}

impl WeightSampler {
    pub fn new(model: &WeightModel) -> Self {
        let kind = match model {
            WeightModel::LogNormal { sigma } => SamplerKind::LogNormal {
                sigma: *sigma,
                shift: -0.5 * sigma * sigma,
            },
            WeightModel::TwoPoint { x } => SamplerKind::TwoPoint { x: *x, value: 1.0 / x },
            WeightModel::Discrete { atoms } => {
                let mut acc = 0.0;
                let mut cumulative = Vec::with_capacity(atoms.len());
                for a in atoms {
                    acc += a.1;
                    cumulative.push(acc);
                }
                SamplerKind::Table {
                    values: atoms.iter().map(|a| a.0).collect(),
                    cumulative,
                }
            }
        };
        WeightSampler { kind }
    }

    #[inline]
    pub fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::LogNormal { sigma, shift } => {
                let z: f64 = StandardNormal.sample(rng);
                (sigma * z + shift).exp()
            }
            SamplerKind::TwoPoint { x, value } => {
                if unit_f64(rng.next_u64()) < *x {
                    *value
                } else {
                    0.0
                }
            }
            SamplerKind::Table { values, cumulative } => {
                let u = unit_f64(rng.next_u64()) * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
                values[i]
            }
        }
    }

    /// Weight at a node, as a pure function of `(source, node)`.
    #[inline]
    pub fn weight(&self, source: &WeightSource, level: u32, heap: u64) -> f64 {
        let mut rng = source.node_rng(level, heap);
        self.draw(&mut rng)
    }
}

#[inline]
fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The weight attached to `node` under `seed`.
pub fn sample(model: &WeightModel, b: u32, node: NodeId, seed: u64) -> f64 {
    WeightSampler::new(model).weight(&WeightSource::new(seed), node.level, node.heap_index(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validate_examples() {
        let w = WeightModel::two_point(0.5).unwrap();
        assert_eq!(w.atoms().unwrap(), vec![(0.0, 0.5), (2.0, 0.5)]);
        assert_eq!(
            WeightModel::discrete(vec![(1.0, 1.0)]),
            Err(WeightError::ConstantWeight)
        );
        match WeightModel::discrete(vec![(2.0, 0.6), (0.0, 0.4)]) {
            Err(WeightError::MeanNotOne(m)) => assert_relative_eq!(m, 1.2, epsilon = 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            WeightModel::discrete(vec![(-1.0, 0.5), (3.0, 0.5)]),
            Err(WeightError::NegativeAtom(_))
        ));
        assert_eq!(WeightModel::lognormal(0.0), Err(WeightError::ConstantWeight));
        assert_eq!(WeightModel::two_point(1.0), Err(WeightError::ConstantWeight));
    }

    #[test]
    fn discrete_is_not_renormalized() {
        let off = 1.0 + 1e-9;
        assert!(matches!(
            WeightModel::discrete(vec![(2.0 * off, 0.5), (0.0, 0.5)]),
            Err(WeightError::MeanNotOne(_))
        ));
    }

    #[test]
    fn duplicate_atoms_merge() {
        let w = WeightModel::discrete(vec![(2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]).unwrap();
        assert_eq!(w.atoms().unwrap(), vec![(0.0, 0.5), (2.0, 0.5)]);
    }

    #[test]
    fn moment_examples() {
        let ln = WeightModel::lognormal(0.6).unwrap();
        assert_relative_eq!(ln.moment(2.0), 0.36f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(ln.moment(2.0), 1.433329, epsilon = 1e-6);
        let tp = WeightModel::two_point(0.5).unwrap();
        assert_relative_eq!(tp.moment(2.0), 2.0, max_relative = 1e-15);
        for w in [ln, tp, WeightModel::discrete(vec![(0.5, 0.5), (1.5, 0.5)]).unwrap()] {
            assert_relative_eq!(w.moment(1.0), 1.0, epsilon = 1e-15);
            assert_eq!(w.moment(0.0), 1.0);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_relative_eq!(WeightModel::lognormal(1.0).unwrap().mean_w_log_w(), 0.5);
        assert_relative_eq!(
            WeightModel::two_point(0.5).unwrap().mean_w_log_w(),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        let eps = 1e-3;
        let v = WeightModel::discrete(vec![(1.0 + eps, 0.5), (1.0 - eps, 0.5)])
            .unwrap()
            .mean_w_log_w();
        assert!(v > 0.0 && v < 2.0 * eps * eps);
    }

    #[test]
    fn structure_fn_examples() {
        let b = 3u32;
        let l = (b as f64).ln();
        let sigma = l.sqrt();
        let spec = ModelSpec::new(WeightModel::lognormal(sigma).unwrap(), b).unwrap();
        let (phi1, _) = spec.structure_fn(1.0).unwrap();
        assert!(phi1.abs() < 1e-15);
        for t in [0.3, 1.7, 2.0, 3.5] {
            let (phi, _) = spec.structure_fn(t).unwrap();
            assert_relative_eq!(phi, (t - 1.0) * (sigma * sigma * t / 2.0 - l), epsilon = 1e-13);
        }
        assert!(spec.structure_fn(2.0).unwrap().0.abs() < 1e-14);
        let tp = ModelSpec::new(WeightModel::two_point(0.4).unwrap(), 4).unwrap();
        let (phi, _) = tp.structure_fn(2.0).unwrap();
        assert_relative_eq!(phi, (1.0f64 / 0.4).ln() - 4f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn condition_examples() {
        let tp = ModelSpec::new(WeightModel::two_point(0.5).unwrap(), 4).unwrap();
        assert_eq!(
            tp.check_conditions(2.0).unwrap(),
            Conditions {
                nondegenerate: true,
                lp_bounded: true
            }
        );
        let b = 3u32;
        let sigma = (2.0 * (b as f64).ln()).sqrt();
        let ln = ModelSpec::new(WeightModel::lognormal(sigma).unwrap(), b).unwrap();
        assert!(!ln.check_conditions(2.0).unwrap().nondegenerate);
        let hair = ModelSpec::new(WeightModel::two_point(0.25 + 1e-12).unwrap(), 4).unwrap();
        assert!(hair.check_conditions(2.0).unwrap().nondegenerate);
        assert!(tp.check_conditions(1.0).is_err());
    }

    #[test]
    fn heap_index_is_unique_per_level() {
        let b = 3;
        assert_eq!(NodeId::root().heap_index(b), 1);
        let n = NodeId::from_digits(b, &[2, 0, 1]);
        assert_eq!(n.index, 2 * 9 + 1);
        assert_eq!(n.heap_index(b), 27 + 19);
        assert_eq!(NodeId::from_digits(b, &[2, 0]).child(b, 1), n);
    }

    #[test]
    fn sample_is_deterministic_and_tail_salt_spares_prefix() {
        let w = WeightModel::lognormal(0.7).unwrap();
        let node = NodeId::from_digits(2, &[1, 0, 1, 1]);
        assert_eq!(sample(&w, 2, node, 42), sample(&w, 2, node, 42));
        assert_ne!(sample(&w, 2, node, 42), sample(&w, 2, node, 43));
        let sampler = WeightSampler::new(&w);
        let plain = WeightSource::new(9);
        let salted = plain.with_tail_salt(3, 1);
        let shallow = NodeId::from_digits(2, &[1, 1, 0]);
        assert_eq!(
            sampler.weight(&plain, 3, shallow.heap_index(2)),
            sampler.weight(&salted, 3, shallow.heap_index(2))
        );
        assert_ne!(
            sampler.weight(&plain, 4, node.heap_index(2)),
            sampler.weight(&salted, 4, node.heap_index(2))
        );
    }

    #[test]
    fn two_point_frequency() {
        let w = WeightModel::two_point(0.5).unwrap();
        let sampler = WeightSampler::new(&w);
        let src = WeightSource::new(2024);
        let n = 1_000_000u64;
        let hits = (0..n).filter(|&h| sampler.weight(&src, 20, h + (1 << 20)) == 2.0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "frequency {freq}");
    }

    #[test]
    fn lognormal_mean_and_second_moment() {
        let sigma = 0.6;
        let w = WeightModel::lognormal(sigma).unwrap();
        let sampler = WeightSampler::new(&w);
        let src = WeightSource::new(7);
        let n = 1_000_000u64;
        let draws: Vec<f64> = (0..n).map(|h| sampler.weight(&src, 20, h + (1 << 20))).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
        let m2 = draws.iter().map(|d| d * d).sum::<f64>() / n as f64;
        let m2_var = draws.iter().map(|d| (d * d - m2).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m2 - w.moment(2.0)).abs() < 4.0 * (m2_var / n as f64).sqrt());
    }

    #[test]
    fn discrete_sampler_frequencies() {
        let w = WeightModel::discrete(vec![(0.0, 0.2), (1.0, 0.3), (1.4, 0.5)]).unwrap();
        let sampler = WeightSampler::new(&w);
        let src = WeightSource::new(1);
        let n = 200_000u64;
        let mut counts = [0usize; 3];
        for h in 0..n {
            let v = sampler.weight(&src, 18, h + (1 << 18));
            let i = [0.0, 1.0, 1.4].iter().position(|&a| a == v).unwrap();
            counts[i] += 1;
        }
        for (c, p) in counts.iter().zip([0.2, 0.3, 0.5]) {
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }

    #[test]
    fn lattice_diagnostic() {
        assert_eq!(WeightModel::two_point(0.3).unwrap().lattice(), Some(true));
        let geometric = WeightModel::discrete(vec![(0.5, 0.4), (1.0, 0.2), (2.0, 0.1), (4.0 / 3.0, 0.3)]);
        // mean = 0.2 + 0.2 + 0.2 + 0.4 = 1.0
        assert_eq!(geometric.unwrap().lattice(), Some(false));
        let on_grid = WeightModel::discrete(vec![(0.5, 0.5), (1.0, 0.25), (2.0, 0.25)]).unwrap();
        assert_eq!(on_grid.lattice(), Some(true));
        assert_eq!(WeightModel::lognormal(0.5).unwrap().lattice(), None);
    }

    #[test]
    fn parses_config_descriptors() {
        let w: WeightModel = serde_json::from_str(r#"{"kind":"lognormal","sigma":0.8}"#).unwrap();
        assert_eq!(w, WeightModel::LogNormal { sigma: 0.8 });
        let w: WeightModel = serde_json::from_str(r#"{"kind":"twopoint","x":0.5}"#).unwrap();
        assert_eq!(w, WeightModel::TwoPoint { x: 0.5 });
        let w: WeightModel =
            serde_json::from_str(r#"{"kind":"discrete","atoms":[[2.0,0.5],[0.0,0.5]]}"#).unwrap();
        assert_eq!(validate(w).unwrap().atoms().unwrap(), vec![(0.0, 0.5), (2.0, 0.5)]);
    }
}
