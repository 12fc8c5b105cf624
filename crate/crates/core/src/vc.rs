//! Shattering on finite domains, witness verification, and the constructive
//! witness algorithms.
//!
//! A `k`-witness maps each `(k+1)`-tuple of distinct points to a labeling that
//! no member of the class produces on it. Tuples over `[0, D]` are checked in
//! lexicographic order and the least failing tuple is reported, whatever the
//! degree of parallelism.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::Serialize;

use crate::classes::{ClassError, ERecord, HklClass, HypothesisClass, IndexStatus};
use crate::hypothesis::{Hypothesis, LabeledSample};
use crate::learners::{combinations, members_within, Learner};
use crate::machine::{as_bits, index_of_program, prefix_adapter, MachineError, Program, ProgramCode, RunOutcome};
use crate::par;
use crate::point::Point;

/// Largest point set whose labelings are enumerated.
pub const MAX_SHATTER_POINTS: usize = 20;
/// Largest number of tuples `verify_witness` scans.
pub const MAX_VERIFIED_TUPLES: u64 = 1_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("point {0} has no binary representation to feed a program")]
    SymbolicInput(String),
    #[error("witness program ran out of its {0}-step budget")]
    OutOfBudget(u64),
    #[error("witness program output is not a bit tuple")]
    NotBinary,
    #[error("witness returned {got} labels, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("every labeling of this tuple is realized; the class has VC dimension above {0}")]
    NoUnrealizedLabeling(u64),
    #[error("witness arity is {expected}, got a tuple of {got}")]
    WrongArity { got: usize, expected: usize },
}

type NativeMap = dyn Fn(&[Point]) -> Result<Vec<bool>, WitnessError> + Send + Sync;

/// A map from `(k+1)`-tuples to `(k+1)`-bit labelings.
#[derive(Clone)]
pub enum Witness {
    Native { k: u64, map: Arc<NativeMap> },
    Program { k: u64, code: ProgramCode, budget: u64 },
}

impl fmt::Debug for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Native { k, .. } => write!(f, "Witness::Native {{ k: {k} }}"),
            Witness::Program { k, code, budget } => {
                write!(f, "Witness::Program {{ k: {k}, code: {code}, budget: {budget} }}")
            }
        }
    }
}

impl Witness {
    pub fn native<F>(k: u64, map: F) -> Self
    where
        F: Fn(&[Point]) -> Result<Vec<bool>, WitnessError> + Send + Sync + 'static,
    {
        Witness::Native { k, map: Arc::new(map) }
    }

    /// The witness mapping every tuple to a constant labeling.
    pub fn constant(k: u64, value: bool) -> Self {
        Witness::native(k, move |_| Ok(vec![value; k as usize + 1]))
    }

    pub fn k(&self) -> u64 {
        match self {
            Witness::Native { k, .. } | Witness::Program { k, .. } => *k,
        }
    }

    pub fn arity(&self) -> usize {
        self.k() as usize + 1
    }

    pub fn eval(&self, tuple: &[Point]) -> Result<Vec<bool>, WitnessError> {
        if tuple.len() != self.arity() {
            return Err(WitnessError::WrongArity { got: tuple.len(), expected: self.arity() });
        }
        let out = match self {
            Witness::Native { map, .. } => map(tuple)?,
            Witness::Program { code, budget, .. } => run_witness_program(code, tuple, *budget, self.arity())?,
        };
        if out.len() != self.arity() {
            return Err(WitnessError::WrongLength { got: out.len(), expected: self.arity() });
        }
        Ok(out)
    }
}

fn run_witness_program(
    code: &ProgramCode,
    tuple: &[Point],
    budget: u64,
    arity: usize,
) -> Result<Vec<bool>, WitnessError> {
    let input = tuple
        .iter()
        .map(|p| p.to_biguint().ok_or_else(|| WitnessError::SymbolicInput(p.to_string())))
        .collect::<Result<Vec<BigUint>, _>>()?;
    match Program::decode(code).run_with_arity(&input, budget, arity) {
        RunOutcome::Halted { output, .. } => as_bits(&output).ok_or(WitnessError::NotBinary),
        RunOutcome::OutOfBudget => Err(WitnessError::OutOfBudget(budget)),
    }
}

fn distinct(tuple: &[Point]) -> bool {
    let set: HashSet<&Point> = tuple.iter().collect();
    set.len() == tuple.len()
}

fn labeled(points: &[Point], labels: &[bool]) -> Vec<(Point, bool)> {
    points.iter().cloned().zip(labels.iter().copied()).collect()
}

/// Whether every labeling of `points` is realized by the class.
pub fn shatters(class: &dyn HypothesisClass, points: &[Point]) -> Result<bool, ClassError> {
    assert!(points.len() <= MAX_SHATTER_POINTS, "too many points to shatter");
    let n = points.len();
    for mask in 0u64..1 << n {
        let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if !class.realizes(&labeled(points, &labels))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Size of the largest subset of `[0, d]` the class shatters, via its sample
/// oracle.
pub fn vc_restricted(class: &dyn HypothesisClass, d: u64) -> Result<u64, ClassError> {
    let mut best = 0;
    for size in 1..=(d as usize + 1).min(MAX_SHATTER_POINTS) {
        let subsets: Vec<Vec<Point>> =
            combinations(d, size).map(|c| c.into_iter().map(Point::Small).collect()).collect();
        let hit = par::find_map_first_slice(&subsets, |pts| match shatters(class, pts) {
            Ok(true) => Some(Ok(())),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        });
        match hit {
            Some(Ok(())) => best = size as u64,
            Some(Err(e)) => return Err(e),
            // shattering is closed under subsets
            None => break,
        }
    }
    Ok(best)
}

/// VC dimension on `[0, d]` of an explicit list of hypotheses.
pub fn vc_of_members(members: &[Hypothesis], d: u64) -> u64 {
    assert!(d < 20, "vc_of_members scans 2^(d+1) subsets");
    let traces: Vec<u64> =
        members.iter().map(|h| (0..=d).filter(|&x| h.eval_at(x)).fold(0u64, |acc, x| acc | 1 << x)).collect();
    let sizes = par::map_range(1u64 << (d + 1), |mask| {
        let seen: HashSet<u64> = traces.iter().map(|t| t & mask).collect();
        let size = mask.count_ones();
        (seen.len() as u64 == 1u64 << size).then_some(size as u64)
    });
    sizes.into_iter().flatten().max().unwrap_or(0)
}

/// VC dimension on `[0, d]` of the members with support in `[0, d]`, found
/// with the membership decider.
pub fn vc_restricted_by_members(class: &dyn HypothesisClass, d: u64) -> Result<u64, ClassError> {
    Ok(vc_of_members(&members_within(class, d)?, d))
}

/// Result of checking a witness on every distinct tuple over `[0, D]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Ok { tuples_checked: u64 },
    Counterexample { tuple: Vec<Point>, labels: Vec<u8>, hypothesis: Hypothesis },
    WitnessFailed { tuple: Vec<Point>, error: String },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }
}

fn tuple_at(mut idx: u64, d: u64, len: usize) -> Vec<Point> {
    let base = d + 1;
    let mut digits = vec![0u64; len];
    for slot in digits.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    digits.into_iter().map(Point::Small).collect()
}

fn bits(labels: &[bool]) -> Vec<u8> {
    labels.iter().map(|&b| b as u8).collect()
}

/// Checks `w` against the class on all distinct tuples over `[0, d]`.
pub fn verify_witness(w: &Witness, class: &dyn HypothesisClass, d: u64) -> Result<Verdict, ClassError> {
    let len = w.arity();
    let total = (d + 1)
        .checked_pow(len as u32)
        .filter(|&t| t <= MAX_VERIFIED_TUPLES)
        .ok_or_else(|| ClassError::Domain(format!("more than {MAX_VERIFIED_TUPLES} tuples over [0, {d}]")))?;
    let found = par::find_map_first(total, |idx| {
        let tuple = tuple_at(idx, d, len);
        if !distinct(&tuple) {
            return None;
        }
        let labels = match w.eval(&tuple) {
            Ok(l) => l,
            Err(e) => return Some(Ok(Verdict::WitnessFailed { tuple, error: e.to_string() })),
        };
        match class.find_realizer(&labeled(&tuple, &labels)) {
            Ok(Some(h)) => Some(Ok(Verdict::Counterexample { tuple, labels: bits(&labels), hypothesis: h })),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    });
    match found {
        Some(r) => r,
        None => {
            let checked = par::count_range(total, |idx| distinct(&tuple_at(idx, d, len)));
            Ok(Verdict::Ok { tuples_checked: checked })
        }
    }
}

/// The witness that labels distinct tuples by the first labeling, in
/// lexicographic order with the first entry most significant, on which the
/// empirical risk minimizer errs.
pub fn witness_from_erm(erm: Arc<dyn Learner>, k: u64) -> Witness {
    Witness::native(k, move |tuple| {
        let len = tuple.len();
        if !distinct(tuple) {
            return Ok(vec![false; len]);
        }
        for y in 0u64..1 << len {
            let labels: Vec<bool> = (0..len).map(|i| y >> (len - 1 - i) & 1 == 1).collect();
            let sample = LabeledSample::new(labeled(tuple, &labels)).expect("nonempty tuple");
            let errs = erm.learn(&sample).map_or(1, |h| sample.error_count(&h));
            if errs > 0 {
                return Ok(labels);
            }
        }
        Err(WitnessError::NoUnrealizedLabeling(k))
    })
}

/// The computable `ℓ`-witness for the class with finite `ℓ`.
pub fn hkl_witness(class: Arc<HklClass>) -> Result<Witness, ClassError> {
    let l = class.l().ok_or_else(|| ClassError::Domain("the witness needs a finite l".into()))?;
    Ok(Witness::native(l, move |tuple| {
        let len = tuple.len();
        if !distinct(tuple) {
            return Ok(vec![false; len]);
        }
        let f = Hypothesis::from_support(tuple.iter().cloned());
        let mut out = vec![true; len];
        if let Some((_, Some(rec))) = class.decompose(&f) {
            if let Some(i) = tuple.iter().position(|x| *x == rec.u) {
                out[i] = false;
            }
        }
        Ok(out)
    }))
}

/// A member on whose tuple a candidate witness outputs the member's labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagonalization {
    pub adapter_code: String,
    pub record: ERecord,
    pub tuple: Vec<Point>,
    pub labels: Vec<u8>,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DiagonalizeError {
    #[error("the candidate did not halt within {0} steps on the constructed tuple")]
    BudgetExceeded(u64),
    #[error("the candidate's output on the constructed tuple is not a bit tuple, so it is no witness")]
    NotAWitness,
    #[error("total_out = {total_out} must be at least k and equal l when l is finite (l = {finite_l:?})")]
    BadArity { total_out: u64, finite_l: Option<u64> },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("internal check failed: {0}")]
    Inconsistent(String),
}

/// Refutes a candidate `(total_out − 1)`-witness program: finds a member whose
/// labels on some tuple equal the candidate's output there. `total_out` is
/// `ℓ` when `ℓ` is finite and any number `≥ k` otherwise.
pub fn hkl_diagonalize(
    class: &HklClass,
    candidate: &ProgramCode,
    total_out: u64,
    step_budget: u64,
) -> Result<Diagonalization, DiagonalizeError> {
    let k = class.k();
    let arity_ok = total_out >= k && class.l().is_none_or(|l| l == total_out);
    if !arity_ok {
        return Err(DiagonalizeError::BadArity { total_out, finite_l: class.l() });
    }
    let take_last = total_out - k + 1;
    let prefix: Vec<u64> = (1..k).collect();
    let adapter = prefix_adapter(candidate, &prefix, take_last as usize, total_out as usize)?;
    let e = index_of_program(&adapter, take_last, class.range())?;
    let record = match class.run_index(&e, step_budget) {
        IndexStatus::InE(r) => r,
        IndexStatus::NotInE { .. } => return Err(DiagonalizeError::NotAWitness),
        IndexStatus::Unknown => return Err(DiagonalizeError::BudgetExceeded(step_budget)),
    };
    let tuple: Vec<Point> = prefix.iter().map(|&v| Point::Small(v)).chain(record.inputs.iter().cloned()).collect();
    let labels = run_witness_program(candidate, &tuple, step_budget, total_out as usize).map_err(|err| match err {
        WitnessError::OutOfBudget(b) => DiagonalizeError::BudgetExceeded(b),
        WitnessError::NotBinary => DiagonalizeError::NotAWitness,
        other => DiagonalizeError::Inconsistent(other.to_string()),
    })?;
    let g = Hypothesis::from_support(prefix.iter().zip(&labels).filter(|(_, &b)| b).map(|(&x, _)| x));
    let h = g.union(&record.h_e);
    if !class.is_member(&h) {
        return Err(DiagonalizeError::Inconsistent(format!("{h} is not a member")));
    }
    let on_tuple: Vec<bool> = tuple.iter().map(|x| h.eval(x)).collect();
    if on_tuple != labels {
        return Err(DiagonalizeError::Inconsistent("labels disagree with the candidate".into()));
    }
    Ok(Diagonalization { adapter_code: adapter.to_string(), record, tuple, labels: bits(&labels), hypothesis: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{class_cube, class_singleton, class_support_at_most, hkl_build};
    use crate::learners::Erm;
    use crate::machine::programs;

    fn pts(v: &[u64]) -> Vec<Point> {
        v.iter().map(|&x| Point::Small(x)).collect()
    }

    #[test]
    fn shattering_examples() {
        let c = class_support_at_most(1);
        assert!(shatters(&*c, &pts(&[3])).unwrap());
        assert!(!shatters(&*c, &pts(&[3, 5])).unwrap());
    }

    #[test]
    fn restricted_dimensions() {
        for k in 0..=2 {
            assert_eq!(vc_restricted(&*class_support_at_most(k), 6).unwrap(), k);
        }
        assert_eq!(vc_restricted(&*class_cube(3), 6).unwrap(), 2);
        assert_eq!(vc_restricted(&*class_singleton(Hypothesis::from_support([2u64])), 6).unwrap(), 0);
        let members = members_within(&*class_support_at_most(2), 6).unwrap();
        assert_eq!(vc_of_members(&members, 6), 2);
    }

    #[test]
    fn hkl_traces_exceed_small_supports() {
        // every marker is at least 13, so members inside [0, 10] are cube members only
        let c = hkl_build(2, Some(3)).unwrap();
        assert_eq!(vc_restricted_by_members(&c, 10).unwrap(), 1);
        assert_eq!(vc_restricted(&c, 10).unwrap(), 2);
    }

    #[test]
    fn constant_witnesses() {
        for k in 1..=2 {
            let c = class_support_at_most(k);
            assert!(verify_witness(&Witness::constant(k, true), &*c, 5).unwrap().is_ok());
            match verify_witness(&Witness::constant(k, false), &*c, 5).unwrap() {
                Verdict::Counterexample { hypothesis, .. } => assert!(hypothesis.is_zero()),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn erm_witness_examples() {
        let w = witness_from_erm(Arc::new(Erm(class_support_at_most(1))), 1);
        assert_eq!(w.eval(&pts(&[3, 5])).unwrap(), vec![true, true]);
        assert_eq!(w.eval(&pts(&[3, 3])).unwrap(), vec![false, false]);
        assert!(verify_witness(&w, &*class_support_at_most(1), 8).unwrap().is_ok());
    }

    #[test]
    fn program_witness_matches_native() {
        let w = Witness::Program { k: 1, code: programs::constant(&[1, 1]).encode(), budget: 100 };
        assert_eq!(w.eval(&pts(&[4, 9])).unwrap(), vec![true, true]);
        assert!(verify_witness(&w, &*class_support_at_most(1), 4).unwrap().is_ok());
    }

    #[test]
    fn hkl_witness_degenerate_and_rejected() {
        let c = Arc::new(hkl_build(2, Some(3)).unwrap());
        let w = hkl_witness(c).unwrap();
        assert_eq!(w.eval(&pts(&[1, 1, 2, 4])).unwrap(), vec![false; 4]);
        assert_eq!(w.eval(&pts(&[0, 1, 2, 4])).unwrap(), vec![true; 4]);
    }

    #[test]
    fn diagonalize_non_halting() {
        let c = hkl_build(2, Some(3)).unwrap();
        let err = hkl_diagonalize(&c, &programs::diverging().encode(), 3, 10_000).unwrap_err();
        assert_eq!(err, DiagonalizeError::BudgetExceeded(10_000));
        assert!(matches!(
            hkl_diagonalize(&c, &programs::diverging().encode(), 4, 10),
            Err(DiagonalizeError::BadArity { .. })
        ));
    }

    #[test]
    fn diagonalize_constants() {
        let c = hkl_build(2, Some(3)).unwrap();
        for bit in [0, 1] {
            let cand = programs::constant(&[bit; 3]).encode();
            let d = hkl_diagonalize(&c, &cand, 3, 10_000).unwrap();
            assert!(c.is_member(&d.hypothesis));
            assert_eq!(d.labels, vec![bit as u8; 3]);
            let on_tuple: Vec<u8> = d.tuple.iter().map(|x| d.hypothesis.eval(x) as u8).collect();
            assert_eq!(on_tuple, d.labels);
        }
    }
}
