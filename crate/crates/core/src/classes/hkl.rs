//! A class whose VC dimension is `k` while no computable witness of arity
//! below `ℓ + 1` exists.
//!
//! Machines are paired with output arities `k_j` through [`pair_enum`]. Each
//! index `j` owns the tuple `I^j` of the next `k_j` unused even numbers
//! `≥ k'`, where `k' = 2⌈k/2⌉`. An index belongs to `E` when machine `j`
//! halts on `I^j` with a binary output `o^j` of length `k_j`, after exactly
//! `s_j` steps. Its hypothesis `h_j` labels `I^j` by `o^j` and the odd marker
//! `u_j = 2·3^j·5^{s_j} + k' + 1` by 1. The class is the direct sum of the
//! cube on `{1, …, k−1}` with `{h_j : j ∈ E} ∪ {0}`.
//!
//! Membership is decidable: the marker of a member encodes both the machine
//! and its exact halting time. The sample oracle is only semi-decidable,
//! since a positive even point names an index whose halting is unknown.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{class_support_at_most, ClassError, Cube, EnumeratedClass, HypothesisClass, Pairs};
use crate::codec::{diagonal_of, unpair};
use crate::hypothesis::Hypothesis;
use crate::machine::{as_bits, binary_output_at_exact_step, pair_enum, ArityRange, Program, ProgramCode, RunOutcome};
use crate::point::Point;

/// Steps granted to a machine when the sample oracle must decide halting.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn serialize_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    match v.to_u64() {
        Some(x) => s.serialize_u64(x),
        None => s.serialize_str(&v.to_string()),
    }
}

fn serialize_bits<S: serde::Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(bits.iter().map(|&b| b as u8))
}

/// A confirmed element of `E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ERecord {
    #[serde(serialize_with = "serialize_big")]
    pub e: BigUint,
    pub k_e: u64,
    pub s_e: u64,
    #[serde(serialize_with = "serialize_bits")]
    pub o: Vec<bool>,
    pub u: Point,
    pub inputs: Vec<Point>,
    pub h_e: Hypothesis,
}

/// What a bounded run of machine `e` on its tuple revealed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexStatus {
    InE(ERecord),
    /// Halted with a non-binary output: `e ∉ E`.
    NotInE {
        steps: u64,
    },
    /// Still running at the budget.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct HklClass {
    k: u64,
    l: Option<u64>,
    even_base: u64,
    step_budget: u64,
    cube: Cube,
}

/// Builds the class for `1 ≤ k < ℓ`; `l = None` is unbounded.
pub fn hkl_build(k: u64, l: Option<u64>) -> Result<HklClass, ClassError> {
    if k == 0 || k > 63 {
        return Err(ClassError::Domain(format!("k must lie in 1..=63, got {k}")));
    }
    match l {
        Some(l) if l < k => return Err(ClassError::Domain(format!("k = {k} exceeds l = {l}"))),
        Some(l) if l == k => return Err(ClassError::Domain(format!("k = l = {k}: use support_at_most({k})"))),
        _ => {}
    }
    Ok(HklClass { k, l, even_base: k.div_ceil(2) * 2, step_budget: DEFAULT_STEP_BUDGET, cube: Cube { k } })
}

/// The class as an enumeration, delegating `k = ℓ` to bounded supports.
pub fn hkl_class(k: u64, l: Option<u64>, step_budget: u64) -> Result<EnumeratedClass, ClassError> {
    if l == Some(k) && k >= 1 {
        return Ok(class_support_at_most(k));
    }
    Ok(EnumeratedClass::new(hkl_build(k, l)?.with_step_budget(step_budget)))
}

impl HklClass {
    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn l(&self) -> Option<u64> {
        self.l
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    /// Smallest allocated even number, `2⌈k/2⌉`.
    pub fn even_base(&self) -> u64 {
        self.even_base
    }

    pub fn marker_offset(&self) -> u64 {
        self.even_base + 1
    }

    /// Number of arities the machine enumeration cycles through.
    pub fn range(&self) -> ArityRange {
        match self.l {
            Some(l) => ArityRange::Finite(l - self.k + 1),
            None => ArityRange::Unbounded,
        }
    }

    /// Program code and arity of index `j`.
    pub fn machine(&self, j: &BigUint) -> (ProgramCode, u64) {
        pair_enum(j, self.range())
    }

    /// Sum of the first `n` arities along one diagonal.
    fn diagonal_prefix(&self, n: &BigUint) -> BigUint {
        match self.range() {
            ArityRange::Finite(r) => {
                let (q, rem) = n.div_rem(&big(r));
                n + q * big(r * (r - 1) / 2) + ((&rem * (rem.clone().max(big(1)) - 1u32)) >> 1u32)
            }
            ArityRange::Unbounded => (n * (n + 1u32)) >> 1u32,
        }
    }

    /// Sum of the arities on diagonals `0..d`.
    fn diagonals_total(&self, d: &BigUint) -> BigUint {
        match self.range() {
            ArityRange::Finite(r) => {
                let rb = big(r);
                let (q, rr) = d.div_rem(&rb);
                let tri = (d * (d + 1u32)) >> 1u32;
                let pairs_per_cycle = big(r * (r - 1) / 2);
                let floors = ((&rb * &q * (q.clone().max(big(1)) - 1u32)) >> 1u32) + &q * (&rr + 1u32);
                let choose3 = |n: &BigUint| -> BigUint {
                    if n < &big(3) {
                        BigUint::zero()
                    } else {
                        n * (n - 1u32) * (n - 2u32) / 6u32
                    }
                };
                tri + pairs_per_cycle * floors + &q * choose3(&rb) + choose3(&(&rr + 1u32))
            }
            ArityRange::Unbounded => d * (d + 1u32) * (d + 2u32) / 6u32,
        }
    }

    /// Number of even numbers allocated to indices before `j`.
    pub fn allocated_before(&self, j: &BigUint) -> BigUint {
        let d = diagonal_of(j);
        let offset = j - ((&d * (&d + 1u32)) >> 1u32);
        self.diagonals_total(&d) + self.diagonal_prefix(&offset)
    }

    /// The input tuple `I^j`.
    pub fn input_tuple(&self, j: &BigUint) -> Vec<BigUint> {
        let (_, kj) = self.machine(j);
        let start = big(self.even_base) + (self.allocated_before(j) << 1u32);
        (0..kj).map(|i| &start + big(2 * i)).collect()
    }

    pub fn input_points(&self, j: &BigUint) -> Vec<Point> {
        self.input_tuple(j).into_iter().map(Point::from_big).collect()
    }

    /// Index and position of the tuple containing an allocated even number.
    pub fn owner_of_even(&self, p: &BigUint) -> Option<(BigUint, u64)> {
        let base = big(self.even_base);
        if p < &base || p.is_odd() {
            return None;
        }
        let slot = (p - base) >> 1u32;
        // K(j) ≥ j, so the owner lies in 0..=slot
        let (mut lo, mut hi) = (BigUint::zero(), slot.clone());
        while lo < hi {
            let mid = &lo + ((&hi - &lo + 1u32) >> 1u32);
            if self.allocated_before(&mid) <= slot {
                lo = mid;
            } else {
                hi = mid - 1u32;
            }
        }
        let pos = (&slot - self.allocated_before(&lo)).to_u64()?;
        Some((lo, pos))
    }

    pub fn marker(&self, e: &BigUint, s: u64) -> Point {
        Point::marker(e.clone(), s, self.marker_offset())
    }

    /// Output of machine `e` on `I^e` if it halts after exactly `s` steps with
    /// a binary output.
    pub fn confirm(&self, e: &BigUint, s: u64) -> Option<Vec<bool>> {
        let (code, ke) = self.machine(e);
        let program = Program::decode(&code);
        binary_output_at_exact_step(&program, &self.input_tuple(e), s, ke as usize)
    }

    pub fn record(&self, e: &BigUint, s: u64, o: Vec<bool>) -> ERecord {
        let inputs = self.input_points(e);
        let u = self.marker(e, s);
        let h_e = Hypothesis::from_support(
            inputs.iter().zip(&o).filter(|(_, &b)| b).map(|(p, _)| p.clone()).chain([u.clone()]),
        );
        ERecord { e: e.clone(), k_e: o.len() as u64, s_e: s, o, u, inputs, h_e }
    }

    /// Runs machine `e` on `I^e` for at most `budget` steps.
    pub fn run_index(&self, e: &BigUint, budget: u64) -> IndexStatus {
        let (code, ke) = self.machine(e);
        let program = Program::decode(&code);
        match program.run_with_arity(&self.input_tuple(e), budget, ke as usize) {
            RunOutcome::Halted { output, steps } => match as_bits(&output) {
                Some(o) => IndexStatus::InE(self.record(e, steps, o)),
                None => IndexStatus::NotInE { steps },
            },
            RunOutcome::OutOfBudget => IndexStatus::Unknown,
        }
    }

    /// Confirmed elements of `E` among indices `0..=index_budget`, by index.
    pub fn explore_e(&self, index_budget: u64, step_budget: u64) -> Vec<ERecord> {
        crate::par::map_range(index_budget.saturating_add(1), |e| self.run_index(&big(e), step_budget))
            .into_iter()
            .filter_map(|status| match status {
                IndexStatus::InE(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    fn in_cube(&self, p: &Point) -> bool {
        p.within(1, self.k - 1)
    }

    fn is_large_odd(&self, p: &Point) -> bool {
        p.is_odd() && p.greater_than(self.even_base)
    }

    /// Splits a member into its cube part and its `h_e` part; `None` for
    /// non-members.
    pub fn decompose(&self, h: &Hypothesis) -> Option<(Hypothesis, Option<ERecord>)> {
        let odd: Vec<&Point> = h.support().iter().filter(|p| self.is_large_odd(p)).collect();
        match odd.as_slice() {
            [] => h.support().iter().all(|p| self.in_cube(p)).then(|| (h.clone(), None)),
            [x] => {
                let (e, s) = x.marker_exponents(self.marker_offset())?;
                let o = self.confirm(&e, s)?;
                let rec = self.record(&e, s, o);
                let labels_match = rec.inputs.iter().zip(&rec.o).all(|(p, &b)| h.eval(p) == b);
                let inputs: BTreeSet<&Point> = rec.inputs.iter().collect();
                let rest = h.support().iter().filter(|p| *p != *x && !inputs.contains(p));
                let rest: Vec<Point> = rest.cloned().collect();
                (labels_match && rest.iter().all(|p| self.in_cube(p)))
                    .then(|| (Hypothesis::from_support(rest), Some(rec)))
            }
            _ => None,
        }
    }

    pub fn is_member(&self, h: &Hypothesis) -> bool {
        self.decompose(h).is_some()
    }

    /// Index named by a positive point outside the cube, with what it
    /// already tells about that index.
    fn claim(&self, p: &Point) -> Result<Option<Claim>, ClassError> {
        if self.is_large_odd(p) {
            return Ok(p
                .marker_exponents(self.marker_offset())
                .and_then(|(e, s)| self.confirm(&e, s).map(|o| Claim::Confirmed(self.record(&e, s, o)))));
        }
        if p.is_even() && p.greater_than(self.even_base.saturating_sub(1)) {
            let Some(v) = p.to_biguint() else {
                return Err(ClassError::Domain(format!("cannot locate symbolic even point {p}")));
            };
            return Ok(self.owner_of_even(&v).map(|(e, _)| Claim::Index(e)));
        }
        Ok(None)
    }
}

enum Claim {
    Confirmed(ERecord),
    Index(BigUint),
}

impl Claim {
    fn index(&self) -> &BigUint {
        match self {
            Claim::Confirmed(r) => &r.e,
            Claim::Index(e) => e,
        }
    }
}

impl HypothesisClass for HklClass {
    fn name(&self) -> String {
        match self.l {
            Some(l) => format!("hkl({}, {l})", self.k),
            None => format!("hkl({}, inf)", self.k),
        }
    }

    fn enumerate(&self, n: u64) -> Hypothesis {
        let (g, t) = unpair(n);
        let (e, s) = unpair(t);
        let g = self.cube.enumerate(g);
        match self.confirm(&big(e), s) {
            Some(o) => g.union(&self.record(&big(e), s, o).h_e),
            None => g,
        }
    }

    fn member(&self, h: &Hypothesis) -> Option<bool> {
        Some(self.is_member(h))
    }

    fn find_realizer(&self, pairs: &Pairs) -> Result<Option<Hypothesis>, ClassError> {
        let Some((pos, neg)) = super::split_labels(pairs) else { return Ok(None) };
        let (g, outside): (BTreeSet<Point>, BTreeSet<Point>) = pos.into_iter().partition(|p| self.in_cube(p));
        let g = Hypothesis::from_support(g);
        if outside.is_empty() {
            return Ok(Some(g));
        }
        let mut claims = Vec::new();
        for p in &outside {
            match self.claim(p)? {
                Some(c) => claims.push(c),
                None => return Ok(None),
            }
        }
        let e = claims[0].index().clone();
        if claims.iter().any(|c| c.index() != &e) {
            return Ok(None);
        }
        let rec = match claims.into_iter().find_map(|c| match c {
            Claim::Confirmed(r) => Some(r),
            Claim::Index(_) => None,
        }) {
            Some(r) => r,
            None => match self.run_index(&e, self.step_budget) {
                IndexStatus::InE(r) => r,
                IndexStatus::NotInE { .. } => return Ok(None),
                IndexStatus::Unknown => return Err(ClassError::Undecided { e, budget: self.step_budget }),
            },
        };
        let fits = outside.iter().all(|p| rec.h_e.eval(p)) && neg.iter().all(|p| !rec.h_e.eval(p));
        Ok(fits.then(|| g.union(&rec.h_e)))
    }
}
