//! Recursively enumerable hypothesis classes.
//!
//! A class is a total enumeration `n ↦ h_n` together with whatever exact
//! oracles are available for it: a membership decider, a realizer for labeled
//! samples and the least enumeration index of a member. Realizers work on
//! slices of labeled pairs so that empty sub-samples (which every class
//! containing the zero hypothesis realizes) need no special casing.

mod hkl;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::codec::{checked_pair, unpair};
use crate::hypothesis::{hfin_index, hfin_list, Hypothesis};
use crate::point::Point;

pub use hkl::{hkl_build, hkl_class, ERecord, HklClass, IndexStatus, DEFAULT_STEP_BUDGET};

pub type Pairs = [(Point, bool)];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ClassError {
    #[error("class {class} has no {oracle} oracle")]
    NoOracle { class: String, oracle: &'static str },
    #[error("machine {e} did not halt within {budget} steps; the sample oracle is only semi-decidable here")]
    Undecided { e: BigUint, budget: u64 },
    #[error("invalid class construction: {0}")]
    Construction(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// An RER class with optional exact oracles.
pub trait HypothesisClass: Send + Sync {
    fn name(&self) -> String;

    /// Total enumeration; repetitions allowed.
    fn enumerate(&self, n: u64) -> Hypothesis;

    /// Exact membership, when decidable for this class.
    fn member(&self, _h: &Hypothesis) -> Option<bool> {
        None
    }

    /// Some member with zero empirical loss on `pairs`, or `None` if there is
    /// none. Errors when the class has no realizer or cannot decide.
    fn find_realizer(&self, _pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        Err(ClassError::NoOracle { class: self.name(), oracle: "sample" })
    }

    /// Least `n` with `enumerate(n) = h`.
    fn index_of(&self, _h: &Hypothesis) -> Option<u64> {
        None
    }

    /// An index bound `B` such that some empirical risk minimizer on `pairs`
    /// sits at an index `≤ B`.
    fn erm_search_bound(&self, _pairs: &Pairs) -> Option<u64> {
        None
    }

    /// Number of members, when finite and the enumeration cycles through them.
    fn finite_size(&self) -> Option<u64> {
        None
    }

    /// Closed under shrinking supports; then `1_{positives}` realizes every
    /// realizable sample.
    fn downward_closed(&self) -> bool {
        false
    }

    fn realizes(&self, pairs: &Pairs) -> Result<bool, ClassError> {
        self.find_realizer(pairs).map(|h| h.is_some())
    }
}

/// Shared handle to a class.
#[derive(Clone)]
pub struct EnumeratedClass(Arc<dyn HypothesisClass>);

impl EnumeratedClass {
    pub fn new<C: HypothesisClass + 'static>(class: C) -> Self {
        EnumeratedClass(Arc::new(class))
    }
}

impl Deref for EnumeratedClass {
    type Target = dyn HypothesisClass;
    fn deref(&self) -> &Self::Target {
        self.0.as_ref()
    }
}

impl fmt::Debug for EnumeratedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnumeratedClass({})", self.name())
    }
}

fn split_labels(pairs: &Pairs) -> Option<(BTreeSet<Point>, BTreeSet<Point>)> {
    let pos: BTreeSet<Point> = pairs.iter().filter(|(_, y)| *y).map(|(x, _)| x.clone()).collect();
    let neg: BTreeSet<Point> = pairs.iter().filter(|(_, y)| !*y).map(|(x, _)| x.clone()).collect();
    pos.is_disjoint(&neg).then_some((pos, neg))
}

/// Realizer for downward-closed classes: `1_{positives}` or nothing.
fn minimal_realizer(class: &dyn HypothesisClass, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
    let Some((pos, _)) = split_labels(pairs) else { return Ok(None) };
    let h = Hypothesis::from_support(pos);
    match class.member(&h) {
        Some(true) => Ok(Some(h)),
        Some(false) => Ok(None),
        None => Err(ClassError::NoOracle { class: class.name(), oracle: "membership" }),
    }
}

fn small_support(h: &Hypothesis) -> Option<Vec<u64>> {
    h.support().iter().map(Point::as_u64).collect()
}

/// Distinct machine-word sample points, if every point is one.
fn small_points(pairs: &Pairs) -> Option<BTreeSet<u64>> {
    pairs.iter().map(|(x, _)| x.as_u64()).collect()
}

// ---------------------------------------------------------------------------

/// All finitely supported hypotheses, listed by binary expansion.
#[derive(Debug, Clone, Copy)]
pub struct Hfin;

impl HypothesisClass for Hfin {
    fn name(&self) -> String {
        "hfin".into()
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        hfin_list(n)
    }
    fn member(&self, _h: &Hypothesis) -> Option<bool> {
        Some(true)
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        minimal_realizer(self, pairs)
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        hfin_index(h)
    }
    fn erm_search_bound(&self, pairs: &Pairs) -> Option<u64> {
        let xs = small_points(pairs)?;
        hfin_index(&Hypothesis::from_support(xs))
    }
    fn downward_closed(&self) -> bool {
        true
    }
}

fn binom_sat(b: u64, i: u64) -> u128 {
    let mut c: u128 = 1;
    for j in 1..=i as u128 {
        match c.checked_mul(b as u128 - j + 1) {
            Some(v) => c = v / j,
            None => return u128::MAX,
        }
    }
    c
}

/// Number of subsets of `0..b` with at most `k` elements, saturating.
fn count_upto(b: u64, k: u64) -> u128 {
    if k >= b {
        return if b < 128 { 1u128 << b } else { u128::MAX };
    }
    if k >= 128 {
        return u128::MAX;
    }
    (0..=k).fold(0u128, |acc, i| acc.saturating_add(binom_sat(b, i)))
}

/// The `n`-th set of at most `k` naturals in colexicographic order, which is
/// the order of [`hfin_list`] restricted to such sets.
fn nth_bounded_set(mut n: u64, mut k: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while n > 0 && k > 0 {
        // largest b with count_upto(b, k) ≤ n; count_upto(n, k) > n
        let (mut lo, mut hi) = (0u64, n);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if count_upto(mid, k) <= n as u128 {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        out.push(lo);
        n -= count_upto(lo, k) as u64;
        k -= 1;
    }
    out
}

fn bounded_set_index(set: &[u64], k: u64) -> Option<u64> {
    if set.len() as u64 > k {
        return None;
    }
    let mut desc = set.to_vec();
    desc.sort_unstable_by(|a, b| b.cmp(a));
    let total = desc.iter().enumerate().fold(0u128, |acc, (t, &x)| acc.saturating_add(count_upto(x, k - t as u64)));
    u64::try_from(total).ok()
}

/// Hypotheses with at most `k` support points.
#[derive(Debug, Clone, Copy)]
pub struct SupportAtMost {
    pub k: u64,
}

impl HypothesisClass for SupportAtMost {
    fn name(&self) -> String {
        format!("support_at_most({})", self.k)
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        Hypothesis::from_support(nth_bounded_set(n, self.k))
    }
    fn member(&self, h: &Hypothesis) -> Option<bool> {
        Some(h.support_size() as u64 <= self.k)
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        minimal_realizer(self, pairs)
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        bounded_set_index(&small_support(h)?, self.k)
    }
    fn erm_search_bound(&self, pairs: &Pairs) -> Option<u64> {
        // the top-k sample points dominate every ≤k subset of them
        let xs = small_points(pairs)?;
        let top: Vec<u64> = xs.iter().rev().take(self.k as usize).copied().collect();
        bounded_set_index(&top, self.k)
    }
    fn finite_size(&self) -> Option<u64> {
        (self.k == 0).then_some(1)
    }
    fn downward_closed(&self) -> bool {
        true
    }
}

/// All hypotheses with support inside `{1, …, k−1}`.
#[derive(Debug, Clone, Copy)]
pub struct Cube {
    pub k: u64,
}

impl Cube {
    fn size(&self) -> u64 {
        1u64 << (self.k - 1)
    }
}

impl HypothesisClass for Cube {
    fn name(&self) -> String {
        format!("cube({})", self.k)
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        let n = n % self.size();
        Hypothesis::from_support((0..self.k - 1).filter(|b| n >> b & 1 == 1).map(|b| b + 1))
    }
    fn member(&self, h: &Hypothesis) -> Option<bool> {
        Some(h.support().iter().all(|p| p.within(1, self.k - 1)))
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        minimal_realizer(self, pairs)
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        if self.member(h) != Some(true) {
            return None;
        }
        small_support(h).map(|s| s.iter().fold(0, |acc, x| acc | 1 << (x - 1)))
    }
    fn erm_search_bound(&self, _pairs: &Pairs) -> Option<u64> {
        Some(self.size() - 1)
    }
    fn finite_size(&self) -> Option<u64> {
        Some(self.size())
    }
    fn downward_closed(&self) -> bool {
        true
    }
}

/// An explicit finite list; the enumeration cycles through it.
#[derive(Debug, Clone)]
pub struct ListClass {
    label: String,
    members: Vec<Hypothesis>,
}

impl ListClass {
    /// Deduplicates in first-seen order. Fails on an empty list.
    pub fn new(label: impl Into<String>, members: impl IntoIterator<Item = Hypothesis>) -> Result<Self, ClassError> {
        let mut seen = BTreeSet::new();
        let members: Vec<Hypothesis> = members.into_iter().filter(|h| seen.insert(h.clone())).collect();
        if members.is_empty() {
            return Err(ClassError::Construction("a class needs at least one hypothesis".into()));
        }
        Ok(ListClass { label: label.into(), members })
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }
}

impl HypothesisClass for ListClass {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        self.members[(n % self.members.len() as u64) as usize].clone()
    }
    fn member(&self, h: &Hypothesis) -> Option<bool> {
        Some(self.members.contains(h))
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        Ok(self.members.iter().find(|h| pairs.iter().all(|(x, y)| h.eval(x) == *y)).cloned())
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        self.members.iter().position(|m| m == h).map(|i| i as u64)
    }
    fn erm_search_bound(&self, _pairs: &Pairs) -> Option<u64> {
        Some(self.members.len() as u64 - 1)
    }
    fn finite_size(&self) -> Option<u64> {
        Some(self.members.len() as u64)
    }
}

/// A set of naturals given by a membership rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    All,
    Below(u64),
    AtLeast(u64),
    Even,
    Odd,
    Points(BTreeSet<u64>),
    And(Vec<Region>),
    Not(Box<Region>),
}

impl Region {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::All => true,
            Region::Below(n) => !x.greater_than(n.saturating_sub(1)) && *n > 0,
            Region::AtLeast(n) => *n == 0 || x.greater_than(n - 1),
            Region::Even => x.is_even(),
            Region::Odd => x.is_odd(),
            Region::Points(ps) => x.as_u64().is_some_and(|v| ps.contains(&v)),
            Region::And(rs) => rs.iter().all(|r| r.contains(x)),
            Region::Not(r) => !r.contains(x),
        }
    }
}

/// Members of an inner class whose support lies in a region. Out-of-region
/// members enumerate as the zero hypothesis, so the inner class must contain
/// it.
#[derive(Debug, Clone)]
pub struct Restricted {
    inner: EnumeratedClass,
    region: Region,
}

impl Restricted {
    pub fn new(inner: EnumeratedClass, region: Region) -> Result<Self, ClassError> {
        if inner.member(&Hypothesis::zero()) == Some(false) {
            return Err(ClassError::Construction(format!("{} lacks the zero hypothesis", inner.name())));
        }
        Ok(Restricted { inner, region })
    }

    fn inside(&self, h: &Hypothesis) -> bool {
        h.support().iter().all(|p| self.region.contains(p))
    }
}

impl HypothesisClass for Restricted {
    fn name(&self) -> String {
        format!("restrict({}, {:?})", self.inner.name(), self.region)
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        let h = self.inner.enumerate(n);
        if self.inside(&h) {
            h
        } else {
            Hypothesis::zero()
        }
    }
    fn member(&self, h: &Hypothesis) -> Option<bool> {
        if !self.inside(h) {
            return Some(false);
        }
        self.inner.member(h)
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        if !self.inner.downward_closed() {
            return Err(ClassError::NoOracle { class: self.name(), oracle: "sample" });
        }
        minimal_realizer(self, pairs)
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        if h.is_zero() {
            return (0..).find(|&n| self.enumerate(n).is_zero());
        }
        self.inside(h).then(|| self.inner.index_of(h)).flatten()
    }
    fn downward_closed(&self) -> bool {
        self.inner.downward_closed()
    }
}

/// `{g + h : g ∈ left, h ∈ right}` for classes separated by a region: left
/// supports lie inside it, right supports outside.
#[derive(Debug, Clone)]
pub struct DirectSum {
    left: EnumeratedClass,
    right: EnumeratedClass,
    separator: Region,
}

type PairVec = Vec<(Point, bool)>;

/// Enumerated members checked for separation when a direct sum is built.
pub const DIRECT_SUM_CHECK_PREFIX: u64 = 256;

impl DirectSum {
    pub fn new(left: EnumeratedClass, right: EnumeratedClass, separator: Region) -> Result<Self, ClassError> {
        for (class, inside) in [(&left, true), (&right, false)] {
            if class.member(&Hypothesis::zero()) == Some(false) {
                return Err(ClassError::Construction(format!("{} lacks the zero hypothesis", class.name())));
            }
            for n in 0..DIRECT_SUM_CHECK_PREFIX {
                let h = class.enumerate(n);
                if let Some(p) = h.support().iter().find(|p| separator.contains(p) != inside) {
                    return Err(ClassError::Construction(format!(
                        "member {h} of {} has support point {p} on the wrong side of the separator",
                        class.name()
                    )));
                }
            }
        }
        Ok(DirectSum { left, right, separator })
    }

    fn split(&self, h: &Hypothesis) -> (Hypothesis, Hypothesis) {
        h.split_by(|p| self.separator.contains(p))
    }

    fn split_pairs(&self, pairs: &Pairs) -> (PairVec, PairVec) {
        pairs.iter().cloned().partition(|(x, _)| self.separator.contains(x))
    }
}

impl HypothesisClass for DirectSum {
    fn name(&self) -> String {
        format!("direct_sum({}, {})", self.left.name(), self.right.name())
    }
    fn enumerate(&self, n: u64) -> Hypothesis {
        let (a, b) = unpair(n);
        self.left.enumerate(a).union(&self.right.enumerate(b))
    }
    fn member(&self, h: &Hypothesis) -> Option<bool> {
        let (g, r) = self.split(h);
        Some(self.left.member(&g)? && self.right.member(&r)?)
    }
    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        let (inside, outside) = self.split_pairs(pairs);
        let Some(g) = self.left.find_realizer(&inside)? else { return Ok(None) };
        let Some(r) = self.right.find_realizer(&outside)? else { return Ok(None) };
        // realizers may pick members with support off the sample; keep sides
        let (g, _) = self.split(&g);
        let (_, r) = self.split(&r);
        Ok(Some(g.union(&r)))
    }
    fn index_of(&self, h: &Hypothesis) -> Option<u64> {
        let (g, r) = self.split(h);
        let (a, b) = (self.left.index_of(&g)?, self.right.index_of(&r)?);
        checked_pair(a, b)
    }
    fn erm_search_bound(&self, pairs: &Pairs) -> Option<u64> {
        // losses add over the two halves; pair(a, b) ≤ pair(A, B) for a ≤ A, b ≤ B
        let (inside, outside) = self.split_pairs(pairs);
        let (a, b) = (self.left.erm_search_bound(&inside)?, self.right.erm_search_bound(&outside)?);
        checked_pair(a, b)
    }
    fn finite_size(&self) -> Option<u64> {
        None
    }
    fn downward_closed(&self) -> bool {
        self.left.downward_closed() && self.right.downward_closed()
    }
}

// ---------------------------------------------------------------------------

pub fn class_hfin() -> EnumeratedClass {
    EnumeratedClass::new(Hfin)
}

pub fn class_support_at_most(k: u64) -> EnumeratedClass {
    EnumeratedClass::new(SupportAtMost { k })
}

/// Panics for `k = 0`; `{1, …, k−1}` needs `k ≥ 1`.
pub fn class_cube(k: u64) -> EnumeratedClass {
    assert!((1..=63).contains(&k), "cube needs 1 ≤ k ≤ 63");
    EnumeratedClass::new(Cube { k })
}

pub fn class_singleton(h: Hypothesis) -> EnumeratedClass {
    EnumeratedClass::new(ListClass { label: format!("singleton({h})"), members: vec![h] })
}

pub fn class_list(members: impl IntoIterator<Item = Hypothesis>) -> Result<EnumeratedClass, ClassError> {
    ListClass::new("list", members).map(EnumeratedClass::new)
}

pub fn direct_sum(
    left: EnumeratedClass,
    right: EnumeratedClass,
    separator: Region,
) -> Result<EnumeratedClass, ClassError> {
    DirectSum::new(left, right, separator).map(EnumeratedClass::new)
}

pub fn restrict(inner: EnumeratedClass, region: Region) -> Result<EnumeratedClass, ClassError> {
    Restricted::new(inner, region).map(EnumeratedClass::new)
}

/// Outputs of a learner on the first `budget` samples of an enumeration,
/// deduplicated in first-seen order. Samples where the learner is undefined
/// are skipped.
pub fn image_class<L, I>(learner: &L, samples: I, budget: usize) -> Result<EnumeratedClass, ClassError>
where
    L: crate::learners::Learner + ?Sized,
    I: IntoIterator<Item = crate::hypothesis::LabeledSample>,
{
    let outputs = samples.into_iter().take(budget).filter_map(|s| {
        let out = learner.learn(&s);
        if out.is_none() {
            log::info!("learner undefined on a sample of length {}; skipped", s.len());
        }
        out
    });
    ListClass::new("image", outputs).map(EnumeratedClass::new)
}

/// JSON description of a class, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    Hfin,
    SupportAtMost {
        k: u64,
    },
    Cube {
        k: u64,
    },
    Singleton {
        support: Vec<Point>,
    },
    List {
        members: Vec<Hypothesis>,
    },
    /// `l` absent or null means unbounded.
    Hkl {
        k: u64,
        #[serde(default)]
        l: Option<u64>,
        #[serde(default)]
        step_budget: Option<u64>,
    },
    DirectSum {
        left: Box<ClassSpec>,
        right: Box<ClassSpec>,
        separator: Region,
    },
    Restrict {
        class: Box<ClassSpec>,
        region: Region,
    },
}

impl ClassSpec {
    pub fn build(&self) -> Result<EnumeratedClass, ClassError> {
        Ok(match self {
            ClassSpec::Hfin => class_hfin(),
            ClassSpec::SupportAtMost { k } => class_support_at_most(*k),
            ClassSpec::Cube { k } => {
                if !(1..=63).contains(k) {
                    return Err(ClassError::Domain(format!("cube needs 1 ≤ k ≤ 63, got {k}")));
                }
                class_cube(*k)
            }
            ClassSpec::Singleton { support } => class_singleton(Hypothesis::from_support(support.iter().cloned())),
            ClassSpec::List { members } => class_list(members.iter().cloned())?,
            ClassSpec::Hkl { k, l, step_budget } => hkl_class(*k, *l, step_budget.unwrap_or(DEFAULT_STEP_BUDGET))?,
            ClassSpec::DirectSum { left, right, separator } => {
                direct_sum(left.build()?, right.build()?, separator.clone())?
            }
            ClassSpec::Restrict { class, region } => restrict(class.build()?, region.clone())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::LabeledSample;
    use proptest::prelude::*;

    fn hyp(s: &[u64]) -> Hypothesis {
        Hypothesis::from_support(s.iter().copied())
    }

    fn pairs(s: &[(u64, bool)]) -> Vec<(Point, bool)> {
        s.iter().map(|&(x, y)| (Point::Small(x), y)).collect()
    }

    #[test]
    fn membership_examples() {
        assert_eq!(class_support_at_most(1).member(&hyp(&[3, 7])), Some(false));
        assert_eq!(class_cube(3).member(&hyp(&[1, 2])), Some(true));
        assert_eq!(class_cube(3).member(&hyp(&[3])), Some(false));
        assert_eq!(class_cube(3).member(&hyp(&[0])), Some(false));
    }

    #[test]
    fn bounded_sets_follow_binary_order() {
        // oracle: filter hfin_list by popcount
        for k in 0..=3u64 {
            let class = SupportAtMost { k };
            let expected: Vec<Hypothesis> =
                (0..4096u64).filter(|n| n.count_ones() as u64 <= k).map(hfin_list).take(200).collect();
            for (n, h) in expected.iter().enumerate() {
                if k == 0 && n > 0 {
                    break;
                }
                assert_eq!(&class.enumerate(n as u64), h, "k={k} n={n}");
                assert_eq!(class.index_of(h), Some(n as u64));
            }
        }
        assert_eq!(SupportAtMost { k: 1 }.enumerate(1000), hyp(&[999]));
    }

    #[test]
    fn hfin_realizes_consistent_samples() {
        let xs = [0u64, 1, 2, 3];
        let mut all = vec![vec![]];
        for _ in 0..3 {
            all = all
                .into_iter()
                .flat_map(|s: Vec<(u64, bool)>| {
                    xs.iter().flat_map(move |&x| {
                        let s = s.clone();
                        [false, true].into_iter().map(move |y| {
                            let mut t = s.clone();
                            t.push((x, y));
                            t
                        })
                    })
                })
                .collect();
            for s in &all {
                let consistent = s.iter().all(|(x, y)| s.iter().all(|(x2, y2)| x != x2 || y == y2));
                assert_eq!(class_hfin().realizes(&pairs(s)).unwrap(), consistent);
            }
        }
    }

    #[test]
    fn direct_sum_examples() {
        let g = class_cube(3);
        let zero = class_singleton(Hypothesis::zero());
        let sum = direct_sum(g.clone(), zero, Region::Below(3)).unwrap();
        let members: BTreeSet<Hypothesis> = (0..100).map(|n| sum.enumerate(n)).collect();
        let cube: BTreeSet<Hypothesis> = (0..4).map(|n| g.enumerate(n)).collect();
        assert_eq!(members, cube);

        let evens = restrict(class_support_at_most(1), Region::And(vec![Region::Even, Region::AtLeast(2)])).unwrap();
        let sum = direct_sum(class_cube(2), evens, Region::Below(2)).unwrap();
        assert_eq!(sum.member(&hyp(&[1, 4])), Some(true));
        assert_eq!(sum.member(&hyp(&[1, 3])), Some(false));
        assert_eq!(sum.member(&hyp(&[4, 6])), Some(false));
        assert!(direct_sum(class_cube(3), class_support_at_most(1), Region::Below(3)).is_err());
    }

    #[test]
    fn direct_sum_member_matches_enumeration() {
        let evens = restrict(class_support_at_most(1), Region::And(vec![Region::Even, Region::AtLeast(3)])).unwrap();
        let sum = direct_sum(class_cube(3), evens, Region::Below(3)).unwrap();
        let listed: BTreeSet<Hypothesis> =
            (0..5000).map(|n| sum.enumerate(n)).filter(|h| h.max_small().flatten().is_none_or(|m| m <= 8)).collect();
        for n in 0..512u64 {
            let h = hfin_list(n);
            assert_eq!(sum.member(&h), Some(listed.contains(&h)), "{h}");
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec: ClassSpec = serde_json::from_str(
            r#"{"kind":"direct_sum","left":{"kind":"cube","k":2},"right":{"kind":"restrict","class":{"kind":"support_at_most","k":1},"region":{"and":["even",{"at_least":2}]}},"separator":{"below":2}}"#,
        )
        .unwrap();
        let class = spec.build().unwrap();
        assert_eq!(class.member(&hyp(&[1, 4])), Some(true));
        let back: ClassSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let hkl: ClassSpec = serde_json::from_str(r#"{"kind":"hkl","k":2,"l":3}"#).unwrap();
        assert!(hkl.build().is_ok());
    }

    #[test]
    fn image_of_constant_learner() {
        let h0 = hyp(&[5]);
        let constant = |_: &LabeledSample| Some(hyp(&[5]));
        let samples = (0..10u64).map(|x| LabeledSample::from_pairs(&[(x, true)]));
        let image = image_class(&constant, samples, 10).unwrap();
        assert_eq!(image.finite_size(), Some(1));
        assert_eq!(image.enumerate(7), h0);
    }

    proptest! {
        #[test]
        fn erm_bound_covers_realizer(s in proptest::collection::vec((0u64..12, any::<bool>()), 1..6), k in 1u64..4) {
            let class = class_support_at_most(k);
            let p = pairs(&s);
            if let Some(h) = class.find_realizer(&p).unwrap() {
                let idx = class.index_of(&h).unwrap();
                prop_assert!(idx <= class.erm_search_bound(&p).unwrap());
                prop_assert_eq!(class.enumerate(idx), h);
            }
        }

        #[test]
        fn enumeration_lies_in_class(n in 0u64..100_000, k in 0u64..5) {
            let class = class_support_at_most(k);
            let h = class.enumerate(n);
            prop_assert_eq!(class.member(&h), Some(true));
            if k > 0 {
                prop_assert_eq!(class.index_of(&h), Some(n));
            }
        }
    }
}
