//! Finite-support distributions with exact losses and seeded Monte-Carlo
//! checks of learning guarantees.
//!
//! Trial `i` of a suite with base seed `s` draws from its own ChaCha8 stream
//! seeded with `mix_seed(s, i)`, a SplitMix64 finalizer applied to
//! `s + (i + 1)·0x9E3779B97F4A7C15`. Suites only count successes, so their
//! reports do not depend on the order or parallelism of the trials.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{ClassError, ClassSpec, EnumeratedClass, HypothesisClass};
use crate::hypothesis::{Hypothesis, LabeledSample};
use crate::learners::{epsilon_squared, m_nu, nonuniform_learner, Learner, LearnerSpec};
use crate::point::Point;

/// Largest number of distinct support points whose labelings are enumerated.
pub const MAX_SUPPORT_POINTS: usize = 20;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Finitely many labeled atoms with exact positive probabilities summing
/// to 1, kept in `(x, y)` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDistribution {
    atoms: Vec<((Point, bool), BigRational)>,
    /// Integer weights over a common denominator, for sampling.
    weights: Vec<u64>,
    denominator: u64,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<((Point, bool), BigRational)>) -> Result<Self, HarnessError> {
        let bad = |m: &str| HarnessError::InvalidDistribution(m.to_string());
        if atoms.is_empty() {
            return Err(bad("no atoms"));
        }
        let mut merged: BTreeMap<(Point, bool), BigRational> = BTreeMap::new();
        for (atom, p) in atoms {
            if !p.is_positive() {
                return Err(bad("probabilities must be positive"));
            }
            if merged.insert(atom.clone(), p).is_some() {
                return Err(bad(&format!("atom ({}, {}) listed twice", atom.0, atom.1 as u8)));
            }
        }
        let total: BigRational = merged.values().sum();
        if !total.is_one() {
            return Err(bad(&format!("probabilities sum to {total}, not 1")));
        }
        let lcm = merged.values().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let denominator = lcm.to_u64().ok_or_else(|| bad("common denominator exceeds 64 bits"))?;
        let weights = merged
            .values()
            .map(|p| (p * BigRational::from_integer(lcm.clone())).to_integer().to_u64().expect("weight ≤ denominator"))
            .collect();
        Ok(FiniteDistribution { atoms: merged.into_iter().collect(), weights, denominator })
    }

    /// Convenience constructor from `(x, y, numerator, denominator)`.
    pub fn from_fractions(atoms: &[(u64, bool, u64, u64)]) -> Result<Self, HarnessError> {
        Self::new(
            atoms.iter().map(|&(x, y, p, q)| ((Point::Small(x), y), BigRational::new(p.into(), q.into()))).collect(),
        )
    }

    pub fn atoms(&self) -> &[((Point, bool), BigRational)] {
        &self.atoms
    }

    /// Distinct support points.
    pub fn points(&self) -> Vec<Point> {
        self.atoms.iter().map(|((x, _), _)| x.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (Point, bool) {
        let mut u = rng.random_range(0..self.denominator);
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            if u < w {
                return atom.0.clone();
            }
            u -= w;
        }
        unreachable!("weights sum to the denominator")
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    atoms: Vec<((Point, u8), String)>,
}

impl Serialize for FiniteDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DistributionJson {
            atoms: self.atoms.iter().map(|((x, y), p)| ((x.clone(), *y as u8), p.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = DistributionJson::deserialize(d)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|((x, y), p)| {
                let y = match y {
                    0 => false,
                    1 => true,
                    other => return Err(D::Error::custom(format!("label must be 0 or 1, got {other}"))),
                };
                let p: BigRational =
                    p.trim().parse().map_err(|_| D::Error::custom(format!("bad probability {p:?}")))?;
                Ok(((x, y), p))
            })
            .collect::<Result<Vec<_>, _>>()?;
        FiniteDistribution::new(atoms).map_err(D::Error::custom)
    }
}

/// `L_D(h)`: the mass of atoms `h` mislabels.
pub fn true_loss(dist: &FiniteDistribution, h: &Hypothesis) -> BigRational {
    dist.atoms.iter().filter(|((x, y), _)| h.eval(x) != *y).map(|(_, p)| p).sum()
}

/// The empirical distribution of a sample: each pair weighted by its
/// multiplicity over `|S|`.
pub fn uniform_on_sample(sample: &LabeledSample) -> FiniteDistribution {
    let m = BigInt::from(sample.len());
    let mut counts: BTreeMap<(Point, bool), u64> = BTreeMap::new();
    for pair in sample.pairs() {
        *counts.entry(pair.clone()).or_default() += 1;
    }
    let atoms = counts.into_iter().map(|(a, c)| (a, BigRational::new(c.into(), m.clone()))).collect();
    FiniteDistribution::new(atoms).expect("sample weights form a distribution")
}

pub fn realizes_sample(class: &dyn HypothesisClass, sample: &LabeledSample) -> Result<bool, ClassError> {
    class.realizes(sample.pairs())
}

/// Some member has zero loss under `dist`.
pub fn is_realizable(dist: &FiniteDistribution, class: &dyn HypothesisClass) -> Result<bool, ClassError> {
    let pairs: Vec<(Point, bool)> = dist.atoms.iter().map(|(a, _)| a.clone()).collect();
    class.realizes(&pairs)
}

/// `inf_{h ∈ H} L_D(h)`: the least loss over labelings of the support points
/// that the class realizes.
pub fn inf_loss(dist: &FiniteDistribution, class: &dyn HypothesisClass) -> Result<BigRational, HarnessError> {
    let points = dist.points();
    if points.len() > MAX_SUPPORT_POINTS {
        return Err(HarnessError::InvalidDistribution(format!("more than {MAX_SUPPORT_POINTS} support points")));
    }
    let mut best: Option<BigRational> = None;
    for mask in 0u64..1 << points.len() {
        let labels: Vec<(Point, bool)> =
            points.iter().enumerate().map(|(i, x)| (x.clone(), mask >> i & 1 == 1)).collect();
        if !class.realizes(&labels)? {
            continue;
        }
        let h = Hypothesis::from_support(labels.iter().filter(|(_, y)| *y).map(|(x, _)| x.clone()));
        let loss = true_loss(dist, &h);
        if best.as_ref().is_none_or(|b| loss < *b) {
            best = Some(loss);
        }
    }
    best.ok_or_else(|| HarnessError::Config("the class realizes no labeling of the support".into()))
}

/// Closed form of the infimum over all finitely supported hypotheses: the
/// minority mass at each point.
pub fn hfin_inf_loss(dist: &FiniteDistribution) -> BigRational {
    let mut mass: BTreeMap<&Point, (BigRational, BigRational)> = BTreeMap::new();
    for ((x, y), p) in &dist.atoms {
        let e = mass.entry(x).or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        if *y {
            e.1 += p;
        } else {
            e.0 += p;
        }
    }
    mass.into_values().map(|(n, p)| n.min(p)).sum()
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i` under base seed `base`.
pub fn mix_seed(base: u64, i: u64) -> u64 {
    splitmix64(base.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// `m` independent draws, determined by `(dist, m, seed)`.
pub fn sample_iid(dist: &FiniteDistribution, m: usize, seed: u64) -> LabeledSample {
    assert!(m >= 1, "a sample needs at least one draw");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LabeledSample::new((0..m).map(|_| dist.draw(&mut rng)).collect()).expect("m ≥ 1")
}

fn serialize_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub m: u64,
    pub trials: u64,
    pub successes: u64,
    #[serde(serialize_with = "serialize_ratio")]
    pub frequency: Ratio<u64>,
    #[serde(serialize_with = "serialize_ratio")]
    pub threshold: Ratio<u64>,
    /// Three binomial standard deviations at the threshold.
    pub margin: f64,
    pub pass: bool,
}

impl TrialReport {
    /// Pass iff `frequency ≥ threshold − 3·√(t(1−t)/trials)`.
    pub fn new(m: u64, trials: u64, successes: u64, threshold: Ratio<u64>) -> Self {
        assert!(trials >= 1 && successes <= trials);
        let frequency = Ratio::new(successes, trials);
        let t = ratio_f64(&threshold);
        let margin = 3.0 * (t * (1.0 - t) / trials as f64).sqrt();
        let pass = ratio_f64(&frequency) >= t - margin;
        TrialReport { m, trials, successes, frequency, threshold, margin, pass }
    }

    pub fn frequency_f64(&self) -> f64 {
        ratio_f64(&self.frequency)
    }
}

fn ratio_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `1 − 1/b`.
pub fn confidence_threshold(b: u64) -> Ratio<u64> {
    Ratio::new(b - 1, b)
}

fn count_successes<F>(trials: u64, seed: u64, trial: F) -> u64
where
    F: Fn(u64) -> bool + Sync + Send,
{
    crate::par::count_range(trials, |i| trial(mix_seed(seed, i)))
}

fn learned_loss<L: Learner + ?Sized>(learner: &L, dist: &FiniteDistribution, sample: &LabeledSample) -> BigRational {
    // an undefined output counts as loss 1
    learner.learn(sample).map_or_else(BigRational::one, |h| true_loss(dist, &h))
}

fn inverse(a: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(a))
}

/// Frequency of `L_D(A(S)) ≤ inf_H L_D + 1/a` over samples `S ∼ D^m`.
#[allow(clippy::too_many_arguments)]
pub fn pac_trial_suite<L: Learner + ?Sized>(
    learner: &L,
    class: &dyn HypothesisClass,
    dist: &FiniteDistribution,
    a: u64,
    b: u64,
    m: u64,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, HarnessError> {
    check_params(a, b, m, trials)?;
    let target = inf_loss(dist, class)? + inverse(a);
    let successes = count_successes(trials, seed, |s| {
        let sample = sample_iid(dist, m as usize, s);
        learned_loss(learner, dist, &sample) <= target
    });
    Ok(TrialReport::new(m, trials, successes, confidence_threshold(b)))
}

/// At `m = m_nu(a, b, n_h)`, the frequency of
/// `L_D(A(S)) ≤ L_D(h_{n_h}) + 1/a` for the induced nonuniform learner.
pub fn nonuniform_trial_suite(
    class: &dyn HypothesisClass,
    dist: &FiniteDistribution,
    a: u64,
    b: u64,
    target_index: u64,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, HarnessError> {
    let m = m_nu(a, b, target_index);
    check_params(a, b, m, trials)?;
    let target = true_loss(dist, &class.enumerate(target_index)) + inverse(a);
    let successes = count_successes(trials, seed, |s| {
        let sample = sample_iid(dist, m as usize, s);
        true_loss(dist, &nonuniform_learner(class, &sample)) <= target
    });
    Ok(TrialReport::new(m, trials, successes, confidence_threshold(b)))
}

/// Frequency of `|L_D(h) − L_S(h)| ≤ ε(m, b)`, decided on squares.
pub fn hoeffding_check(
    h: &Hypothesis,
    dist: &FiniteDistribution,
    m: u64,
    b: u64,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, HarnessError> {
    check_params(1, b, m, trials)?;
    let truth = true_loss(dist, h);
    let eps_sq = epsilon_squared(m, b);
    let successes = count_successes(trials, seed, |s| {
        let sample = sample_iid(dist, m as usize, s);
        let emp = BigRational::new(sample.error_count(h).into(), BigInt::from(m));
        let dev = &truth - emp;
        &dev * &dev <= eps_sq
    });
    Ok(TrialReport::new(m, trials, successes, confidence_threshold(b)))
}

fn check_params(a: u64, b: u64, m: u64, trials: u64) -> Result<(), HarnessError> {
    for (name, v) in [("a", a), ("b", b), ("m", m), ("trials", trials)] {
        if v == 0 {
            return Err(HarnessError::Config(format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

/// A PAC sweep over sample sizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveConfig {
    pub learner: LearnerSpec,
    pub class: ClassSpec,
    pub distribution: FiniteDistribution,
    pub a: u64,
    pub b: u64,
    pub grid: Vec<u64>,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub m: u64,
    pub freq: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// One `pac_trial_suite` per grid point, all with the configured seed.
pub fn experiment_curve(config: &CurveConfig) -> Result<Vec<CurveRow>, HarnessError> {
    if config.grid.is_empty() {
        return Err(HarnessError::Config("the grid of sample sizes is empty".into()));
    }
    let class: EnumeratedClass = config.class.build()?;
    let learner = config.learner.build(&class);
    config
        .grid
        .iter()
        .map(|&m| {
            let r = pac_trial_suite(
                &*learner,
                &*class,
                &config.distribution,
                config.a,
                config.b,
                m,
                config.trials,
                config.seed,
            )?;
            Ok(CurveRow { m, freq: r.frequency_f64(), threshold: ratio_f64(&r.threshold), pass: r.pass })
        })
        .collect()
}

/// CSV with header `m,freq,threshold,pass`.
pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("m,freq,threshold,pass\n");
    for r in rows {
        out.push_str(&format!("{},{:.6},{:.6},{}\n", r.m, r.freq, r.threshold, r.pass));
    }
    out
}
