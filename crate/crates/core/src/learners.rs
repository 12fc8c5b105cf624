//! Empirical and structural risk minimizers, sample-size functions, and the
//! agreement and teaching-set searches.
//!
//! Structural risk is `F(n) = E_S(h_n) + n·√(mb)`, the sample size `m` times
//! `L_S(h_n) + ε(m, 2bn²)` with `ε(m, b) = √(b/2m)`. Every comparison of such
//! values is done exactly on integers of the form `p + q·√r`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::classes::{ClassError, EnumeratedClass, HypothesisClass};
use crate::hypothesis::{Hypothesis, LabeledSample};
use crate::point::Point;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LearnError {
    #[error("class {0} provides no ERM search bound for this sample")]
    NoSearchBound(String),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// A learner maps samples to hypotheses; `None` marks an undefined output.
pub trait Learner: Send + Sync {
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis>;
}

impl<F> Learner for F
where
    F: Fn(&LabeledSample) -> Option<Hypothesis> + Send + Sync,
{
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis> {
        self(sample)
    }
}

/// Majority vote per sample point; ties go to 0.
pub fn erm_hfin(sample: &LabeledSample) -> Hypothesis {
    let mut votes: std::collections::BTreeMap<&Point, i64> = Default::default();
    for (x, y) in sample.pairs() {
        *votes.entry(x).or_default() += if *y { 1 } else { -1 };
    }
    Hypothesis::from_support(votes.into_iter().filter(|(_, v)| *v > 0).map(|(x, _)| x.clone()))
}

/// The least-index hypothesis of minimal empirical loss among indices up to
/// the class's search bound for `sample`.
pub fn erm_enumerated(class: &dyn HypothesisClass, sample: &LabeledSample) -> Result<Hypothesis, LearnError> {
    let bound = class.erm_search_bound(sample.pairs()).ok_or_else(|| LearnError::NoSearchBound(class.name()))?;
    let errors = crate::par::map_range(bound.saturating_add(1), |n| sample.error_count(&class.enumerate(n)));
    let best = errors.iter().enumerate().min_by_key(|&(n, e)| (*e, n)).map(|(n, _)| n as u64).unwrap_or(0);
    Ok(class.enumerate(best))
}

/// Sign of `a + b·√r` for `r ≥ 0`.
fn surd_sign(a: i128, b: i128, r: u128) -> Ordering {
    match (a.cmp(&0), b.cmp(&0)) {
        (o, Ordering::Equal) => o,
        (Ordering::Equal, o) => {
            if r == 0 {
                Ordering::Equal
            } else {
                o
            }
        }
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (sa, _) => {
            let lhs = (a.unsigned_abs()).checked_pow(2).expect("surd comparison overflow");
            let rhs =
                (b.unsigned_abs()).checked_pow(2).and_then(|v| v.checked_mul(r)).expect("surd comparison overflow");
            // |a| against |b|√r, oriented by the sign of a
            match lhs.cmp(&rhs) {
                Ordering::Equal => Ordering::Equal,
                o if sa == Ordering::Greater => o,
                o => o.reverse(),
            }
        }
    }
}

/// The value `errors + n·√(m·b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub errors: u64,
    pub n: u64,
}

impl Objective {
    /// Exact comparison under the radicand `m·b`.
    pub fn cmp_under(&self, other: &Objective, radicand: u128) -> Ordering {
        surd_sign(self.errors as i128 - other.errors as i128, self.n as i128 - other.n as i128, radicand)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrmCertificate {
    pub b: u64,
    pub m: u64,
    pub chosen_n: u64,
    pub chosen_errors: u64,
    #[serde(rename = "F_values_examined")]
    pub f_values_examined: u64,
    #[serde(rename = "N_bound")]
    pub n_bound: u64,
}

impl SrmCertificate {
    pub fn objective(&self) -> Objective {
        Objective { errors: self.chosen_errors, n: self.chosen_n }
    }

    /// `N·√(mb) ≥ m + √(mb)`, checked exactly.
    pub fn bound_holds(&self) -> bool {
        let r = self.m as u128 * self.b as u128;
        surd_sign(-(self.m as i128), self.n_bound as i128 - 1, r) != Ordering::Less
    }
}

/// `ε(m, b)² = b / 2m`.
pub fn epsilon_squared(m: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(b), BigInt::from(2 * m as u128))
}

/// `ε(m, b) ≤ q`, decided on squares.
pub fn epsilon_at_most(m: u64, b: u64, q: &BigRational) -> bool {
    !q.is_negative() && epsilon_squared(m, b) <= q * q
}

/// Float value for display only.
pub fn epsilon_f64(m: u64, b: u64) -> f64 {
    (b as f64 / (2.0 * m as f64)).sqrt()
}

/// Stratum weight `2n²`.
pub fn omega(n: u64) -> u64 {
    2 * n * n
}

/// Sample size `4b⁵`, saturating.
pub fn s_of(b: u64) -> u64 {
    (b as u128).pow(5).saturating_mul(4).min(u64::MAX as u128) as u64
}

/// Largest `b` with `s_of(b) ≤ m`, or 1 when there is none.
pub fn t_of(m: u64) -> u64 {
    let mut b = 1;
    while s_of(b + 1) <= m {
        b += 1;
    }
    b
}

/// Sample size `s(max{a, b, n_h})` of the induced nonuniform learner.
pub fn m_nu(a: u64, b: u64, n_h: u64) -> u64 {
    s_of(a.max(b).max(n_h))
}

/// Least `N ≥ 1` with `N·√(mb) ≥ m + √(mb)`, i.e. `(N−1)²·b ≥ m`.
pub fn srm_index_bound(m: u64, b: u64) -> u64 {
    let (m, b) = (m as u128, b as u128);
    let mut root = ((m.div_ceil(b)) as f64).sqrt() as u128;
    while root > 0 && (root - 1) * (root - 1) * b >= m {
        root -= 1;
    }
    while root * root * b < m {
        root += 1;
    }
    (root + 1) as u64
}

/// Minimizes `F(n) = E_S(h_n) + n·√(mb)` over `n ≤ N`; ties go to the least `n`.
pub fn srm(class: &dyn HypothesisClass, b: u64, sample: &LabeledSample) -> (Hypothesis, SrmCertificate) {
    assert!(b >= 1, "srm needs b ≥ 1");
    let m = sample.len() as u64;
    let n_bound = srm_index_bound(m, b);
    let radicand = m as u128 * b as u128;
    let values =
        crate::par::map_range(n_bound + 1, |n| Objective { errors: sample.error_count(&class.enumerate(n)), n });
    let best = values
        .iter()
        .copied()
        .reduce(|best, v| if v.cmp_under(&best, radicand) == Ordering::Less { v } else { best })
        .expect("N ≥ 1");
    let cert =
        SrmCertificate { b, m, chosen_n: best.n, chosen_errors: best.errors, f_values_examined: n_bound + 1, n_bound };
    (class.enumerate(best.n), cert)
}

/// `srm` at `b = t(|S|)`.
pub fn nonuniform_learner(class: &dyn HypothesisClass, sample: &LabeledSample) -> Hypothesis {
    srm(class, t_of(sample.len() as u64), sample).0
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ErmHfin;

impl Learner for ErmHfin {
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis> {
        Some(erm_hfin(sample))
    }
}

#[derive(Clone, Debug)]
pub struct Erm(pub EnumeratedClass);

impl Learner for Erm {
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis> {
        erm_enumerated(&*self.0, sample).ok()
    }
}

#[derive(Clone, Debug)]
pub struct Srm {
    pub class: EnumeratedClass,
    pub b: u64,
}

impl Learner for Srm {
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis> {
        Some(srm(&*self.class, self.b, sample).0)
    }
}

#[derive(Clone, Debug)]
pub struct Nonuniform(pub EnumeratedClass);

impl Learner for Nonuniform {
    fn learn(&self, sample: &LabeledSample) -> Option<Hypothesis> {
        Some(nonuniform_learner(&*self.0, sample))
    }
}

#[derive(Clone, Debug)]
pub struct Constant(pub Hypothesis);

impl Learner for Constant {
    fn learn(&self, _sample: &LabeledSample) -> Option<Hypothesis> {
        Some(self.0.clone())
    }
}

/// JSON description of a learner, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    ErmHfin,
    Erm,
    Srm { b: u64 },
    Nonuniform,
    Constant { support: Vec<Point> },
}

impl LearnerSpec {
    /// The learner, reading `class` where the variant needs one.
    pub fn build(&self, class: &EnumeratedClass) -> Box<dyn Learner> {
        match self {
            LearnerSpec::ErmHfin => Box::new(ErmHfin),
            LearnerSpec::Erm => Box::new(Erm(class.clone())),
            LearnerSpec::Srm { b } => Box::new(Srm { class: class.clone(), b: *b }),
            LearnerSpec::Nonuniform => Box::new(Nonuniform(class.clone())),
            LearnerSpec::Constant { support } => Box::new(Constant(Hypothesis::from_support(support.iter().cloned()))),
        }
    }
}

/// All samples of exactly `len` pairs drawn from `alphabet`, in
/// lexicographic order of alphabet positions.
pub fn samples_of_length(alphabet: &[(Point, bool)], len: usize) -> impl Iterator<Item = LabeledSample> + '_ {
    let k = alphabet.len();
    let total = if k == 0 || len == 0 { 0 } else { k.checked_pow(len as u32).expect("sample enumeration too large") };
    (0..total).map(move |mut idx| {
        let mut digits = vec![0usize; len];
        for d in digits.iter_mut().rev() {
            *d = idx % k;
            idx /= k;
        }
        LabeledSample::new(digits.into_iter().map(|d| alphabet[d].clone()).collect()).expect("len ≥ 1")
    })
}

/// All samples of length `1..=max_len` over points `xs` with both labels.
pub fn all_samples(xs: &[u64], max_len: usize) -> Vec<LabeledSample> {
    let alphabet: Vec<(Point, bool)> =
        xs.iter().flat_map(|&x| [(Point::Small(x), false), (Point::Small(x), true)]).collect();
    (1..=max_len).flat_map(|len| samples_of_length(&alphabet, len).collect::<Vec<_>>()).collect()
}

/// First learner output agreeing with `h` on `points`, over samples labeled
/// by `h` of length `1..=length_cap` in deterministic order.
pub fn find_agreeing_output<L: Learner + ?Sized>(
    learner: &L,
    h: &Hypothesis,
    points: &[Point],
    length_cap: usize,
) -> Option<(Hypothesis, LabeledSample)> {
    let alphabet: Vec<(Point, bool)> = points.iter().map(|x| (x.clone(), h.eval(x))).collect();
    (1..=length_cap).find_map(|len| {
        samples_of_length(&alphabet, len).find_map(|s| {
            let g = learner.learn(&s)?;
            points.iter().all(|x| g.eval(x) == h.eval(x)).then_some((g, s))
        })
    })
}

/// Size-`k` subsets of `0..=d` in lexicographic order.
pub(crate) fn combinations(d: u64, k: usize) -> impl Iterator<Item = Vec<u64>> {
    let n = d + 1;
    let mut next = (k as u64 <= n).then(|| (0..k as u64).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut c = current.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if c[i] < n - (k - i) as u64 {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                next = Some(c);
                break;
            }
        }
        Some(current)
    })
}

/// Smallest, then lexicographically least, `T ⊆ [0, d]` with `|T| ≤ max_size`
/// on which `h` differs from every other member of `members`.
pub fn teaching_set(members: &[Hypothesis], h: &Hypothesis, d: u64, max_size: usize) -> Option<Vec<u64>> {
    let rivals: Vec<&Hypothesis> = members.iter().filter(|g| *g != h).collect();
    (0..=max_size.min(d as usize + 1)).find_map(|size| {
        combinations(d, size).find(|t| rivals.iter().all(|g| t.iter().any(|&x| g.eval_at(x) != h.eval_at(x))))
    })
}

/// Members of a class with support inside `[0, d]`, found with the
/// membership decider. `d ≤ 20`.
pub fn members_within(class: &dyn HypothesisClass, d: u64) -> Result<Vec<Hypothesis>, ClassError> {
    assert!(d <= 20, "members_within scans 2^(d+1) supports");
    let found = crate::par::map_range(1u64 << (d + 1), |mask| {
        let h = Hypothesis::from_support((0..=d).filter(|b| mask >> b & 1 == 1));
        class.member(&h).map(|yes| yes.then_some(h))
    });
    found
        .into_iter()
        .map(|r| r.ok_or_else(|| ClassError::NoOracle { class: class.name(), oracle: "membership" }))
        .filter_map(|r| r.transpose())
        .collect()
}
