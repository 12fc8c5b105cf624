//! Finitely supported hypotheses, labeled samples and empirical loss.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::machine::{Instruction, Program, ProgramCode};
use crate::point::Point;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("a sample needs at least one labeled point")]
    Empty,
    #[error("label must be 0 or 1, got {0}")]
    BadLabel(u64),
}

/// `h(x) = 1` iff `x` is in the support.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hypothesis {
    support: BTreeSet<Point>,
}

impl Hypothesis {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_support<I, P>(points: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<Point>,
    {
        Hypothesis { support: points.into_iter().map(Into::into).collect() }
    }

    pub fn indicator(x: u64) -> Self {
        Self::from_support([x])
    }

    pub fn support(&self) -> &BTreeSet<Point> {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn eval(&self, x: &Point) -> bool {
        self.support.contains(x)
    }

    pub fn eval_at(&self, x: u64) -> bool {
        self.support.contains(&Point::Small(x))
    }

    /// Pointwise sum of hypotheses with disjoint supports.
    pub fn union(&self, other: &Hypothesis) -> Hypothesis {
        Hypothesis { support: self.support.union(&other.support).cloned().collect() }
    }

    pub fn split_by<F: Fn(&Point) -> bool>(&self, pred: F) -> (Hypothesis, Hypothesis) {
        let (a, b): (BTreeSet<Point>, BTreeSet<Point>) = self.support.iter().cloned().partition(|p| pred(p));
        (Hypothesis { support: a }, Hypothesis { support: b })
    }

    /// Largest support point if every point is a machine word.
    pub fn max_small(&self) -> Option<Option<u64>> {
        self.support.iter().map(Point::as_u64).collect::<Option<Vec<_>>>().map(|v| v.into_iter().max())
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// A nonempty tuple of labeled points; repeats allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledSample {
    pairs: Vec<(Point, bool)>,
}

impl LabeledSample {
    pub fn new(pairs: Vec<(Point, bool)>) -> Result<Self, SampleError> {
        if pairs.is_empty() {
            return Err(SampleError::Empty);
        }
        Ok(LabeledSample { pairs })
    }

    /// Panics on an empty slice.
    pub fn from_pairs(pairs: &[(u64, bool)]) -> Self {
        Self::new(pairs.iter().map(|&(x, y)| (Point::Small(x), y)).collect()).expect("nonempty sample")
    }

    /// The sample `((x_i, h(x_i)))_i`.
    pub fn labeled_by(points: &[Point], h: &Hypothesis) -> Result<Self, SampleError> {
        Self::new(points.iter().map(|x| (x.clone(), h.eval(x))).collect())
    }

    pub fn pairs(&self) -> &[(Point, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct points in order of first appearance.
    pub fn points(&self) -> Vec<Point> {
        let mut seen = BTreeSet::new();
        self.pairs.iter().filter(|(x, _)| seen.insert(x.clone())).map(|(x, _)| x.clone()).collect()
    }

    /// Positively labeled points.
    pub fn positives(&self) -> BTreeSet<Point> {
        self.pairs.iter().filter(|(_, y)| *y).map(|(x, _)| x.clone()).collect()
    }

    pub fn negatives(&self) -> BTreeSet<Point> {
        self.pairs.iter().filter(|(_, y)| !*y).map(|(x, _)| x.clone()).collect()
    }

    /// No point carries both labels.
    pub fn is_consistent(&self) -> bool {
        self.positives().is_disjoint(&self.negatives())
    }

    /// Sub-sample of the pairs whose point satisfies `pred`, if any do.
    pub fn filter<F: Fn(&Point) -> bool>(&self, pred: F) -> Option<LabeledSample> {
        let pairs: Vec<_> = self.pairs.iter().filter(|(x, _)| pred(x)).cloned().collect();
        LabeledSample::new(pairs).ok()
    }

    pub fn error_count(&self, h: &Hypothesis) -> u64 {
        self.pairs.iter().filter(|(x, y)| h.eval(x) != *y).count() as u64
    }

    pub fn empirical_loss(&self, h: &Hypothesis) -> Ratio<u64> {
        Ratio::new(self.error_count(h), self.len() as u64)
    }
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    pairs: Vec<(Point, u64)>,
}

impl Serialize for LabeledSample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SampleJson { pairs: self.pairs.iter().map(|(x, y)| (x.clone(), *y as u64)).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledSample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SampleJson::deserialize(d)?;
        let pairs = raw
            .pairs
            .into_iter()
            .map(|(x, y)| match y {
                0 => Ok((x, false)),
                1 => Ok((x, true)),
                other => Err(SampleError::BadLabel(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        LabeledSample::new(pairs).map_err(serde::de::Error::custom)
    }
}

pub fn eval(h: &Hypothesis, x: &Point) -> bool {
    h.eval(x)
}

pub fn error_count(sample: &LabeledSample, h: &Hypothesis) -> u64 {
    sample.error_count(h)
}

pub fn empirical_loss(sample: &LabeledSample, h: &Hypothesis) -> Ratio<u64> {
    sample.empirical_loss(h)
}

/// The `n`-th finitely supported hypothesis: support = set bits of `n`.
pub fn hfin_list(n: u64) -> Hypothesis {
    Hypothesis::from_support((0..64u64).filter(|b| n >> b & 1 == 1))
}

/// Inverse of [`hfin_list`]; `None` when the index does not fit 64 bits.
pub fn hfin_index(h: &Hypothesis) -> Option<u64> {
    h.support().iter().try_fold(0u64, |acc, p| {
        let b = p.as_u64().filter(|&b| b < 64)?;
        Some(acc | 1 << b)
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("support point {0} is too large to compile into a program")]
pub struct CompileError(pub String);

/// Support points above this are not compiled.
pub const MAX_COMPILED_POINT: u64 = 1 << 16;

/// Code of a program computing `h` on one input: it counts the input down
/// through `0, 1, …, max(supp h)` and answers 1 on support points.
pub fn hypothesis_to_code(h: &Hypothesis) -> Result<ProgramCode, CompileError> {
    let points = h
        .support()
        .iter()
        .map(|p| p.as_u64().filter(|&v| v <= MAX_COMPILED_POINT).ok_or_else(|| CompileError(p.to_string())))
        .collect::<Result<BTreeSet<u64>, _>>()?;
    let (counter, zero) = (2u64, 3u64);
    let mut ins = vec![Instruction::Mov { src: 1, dst: counter }, Instruction::Clr { r: 1 }];
    let top = points.iter().next_back().copied();
    // layout: per value v two instructions (test, decrement), then a final
    // jump to DONE, then SET_ONE, then DONE
    let values = top.map_or(0, |t| t + 1);
    let set_one = 2 + 2 * values + 1;
    let done = set_one + 1;
    for v in 0..values {
        let target = if points.contains(&v) { set_one } else { done };
        ins.push(Instruction::Jz { r: counter, target });
        ins.push(Instruction::Dec { r: counter });
    }
    ins.push(Instruction::Jz { r: zero, target: done });
    ins.push(Instruction::Inc { r: 1 });
    ins.push(Instruction::Clr { r: 0 });
    ins.push(Instruction::Inc { r: 0 });
    ins.push(Instruction::Halt);
    Ok(Program::new(ins).encode())
}

/// A step budget under which the compiled program of `h` halts on every input.
pub fn evaluation_budget(h: &Hypothesis) -> u64 {
    let top = h.max_small().flatten().map_or(0, |t| t + 1);
    2 * top + 8
}

/// Runs a compiled hypothesis on `x`.
pub fn run_compiled(code: &ProgramCode, x: u64, budget: u64) -> Option<bool> {
    match crate::machine::run(code, &[BigUint::from(x)], budget) {
        crate::machine::RunOutcome::Halted { output, .. } => {
            crate::machine::as_bits(&output).and_then(|bits| bits.first().copied())
        }
        crate::machine::RunOutcome::OutOfBudget => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let h = Hypothesis::indicator(3);
        assert!(h.eval_at(3));
        assert!(!h.eval_at(4));
        assert!((0..50).all(|x| !Hypothesis::zero().eval_at(x)));
    }

    #[test]
    fn loss_examples() {
        let h = Hypothesis::indicator(3);
        let s = LabeledSample::from_pairs(&[(3, true), (5, false)]);
        assert_eq!(error_count(&s, &h), 0);
        assert_eq!(empirical_loss(&s, &h), Ratio::new(0, 1));
        let s = LabeledSample::from_pairs(&[(3, true), (3, false)]);
        assert_eq!(error_count(&s, &h), 1);
        assert_eq!(empirical_loss(&s, &h), Ratio::new(1, 2));
        assert_eq!(LabeledSample::new(vec![]), Err(SampleError::Empty));
    }

    #[test]
    fn hfin_examples() {
        assert!(hfin_list(0).is_zero());
        assert_eq!(hfin_list(5), Hypothesis::from_support([0u64, 2]));
        for n in 0..=1000 {
            assert_eq!(hfin_index(&hfin_list(n)), Some(n));
        }
        let all: BTreeSet<Hypothesis> = (0..=2000).map(hfin_list).collect();
        assert_eq!(all.len(), 2001);
        assert_eq!(hfin_index(&Hypothesis::indicator(64)), None);
    }

    #[test]
    fn compiled_hypotheses() {
        let zero = hypothesis_to_code(&Hypothesis::zero()).unwrap();
        for x in 0..=20 {
            assert_eq!(run_compiled(&zero, x, 100), Some(false));
        }
        let h = Hypothesis::indicator(2);
        let code = hypothesis_to_code(&h).unwrap();
        let budget = evaluation_budget(&h);
        assert_eq!(run_compiled(&code, 2, budget), Some(true));
        for x in [0, 1, 3, 4] {
            assert_eq!(run_compiled(&code, x, budget), Some(false));
        }
    }

    #[test]
    fn sample_json() {
        let s: LabeledSample = serde_json::from_str(r#"{"pairs":[[3,1],[5,0]]}"#).unwrap();
        assert_eq!(s, LabeledSample::from_pairs(&[(3, true), (5, false)]));
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"pairs":[[3,1],[5,0]]}"#);
        assert!(serde_json::from_str::<LabeledSample>(r#"{"pairs":[[3,2]]}"#).is_err());
        assert!(serde_json::from_str::<LabeledSample>(r#"{"pairs":[]}"#).is_err());
        let h: Hypothesis = serde_json::from_str(r#"{"support":[4,1]}"#).unwrap();
        assert_eq!(h, Hypothesis::from_support([1u64, 4]));
    }

    proptest! {
        #[test]
        fn compiled_agrees_with_eval(support in proptest::collection::btree_set(0u64..=10, 0..6)) {
            let h = Hypothesis::from_support(support);
            let code = hypothesis_to_code(&h).unwrap();
            let budget = evaluation_budget(&h);
            for x in 0..=50u64 {
                prop_assert_eq!(run_compiled(&code, x, budget), Some(h.eval_at(x)));
            }
        }

        #[test]
        fn loss_times_length_is_error_count(
            pairs in proptest::collection::vec((0u64..6, any::<bool>()), 1..12),
            support in proptest::collection::btree_set(0u64..6, 0..6),
        ) {
            let s = LabeledSample::from_pairs(&pairs);
            let h = Hypothesis::from_support(support);
            let loss = s.empirical_loss(&h);
            prop_assert_eq!(loss * s.len() as u64, Ratio::from_integer(s.error_count(&h)));
            prop_assert!(loss <= Ratio::from_integer(1));
        }
    }
}
