//! An enumerable, step-bounded register machine.
//!
//! Programs are lists of [`Instruction`]s over unboundedly many registers
//! holding naturals. On input `(x_1, …, x_m)` register 0 holds `m` and
//! registers `1..=m` hold the inputs; every other register starts at 0. A run
//! stops at `HALT` or when the program counter leaves the program. The output
//! is read from registers `1..=k` with `k` the final value of register 0,
//! unless the caller fixes the arity. Each executed instruction, `HALT`
//! included, is one step.
//!
//! Codes: a natural `c` is read as the bit string of `c + 1` without its
//! leading one. That string is a concatenation of Elias-gamma words, one per
//! instruction; an incomplete trailing word is ignored, so every natural
//! decodes to some program.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::codec::{pair_big, unpair_big};

/// Output arity is capped when read from register 0.
pub const MAX_OUTPUT_ARITY: usize = 1 << 16;
const DENSE_REGISTERS: usize = 1024;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("take_last = {take_last} exceeds total_out = {total_out}")]
    TakeLastTooLarge { take_last: usize, total_out: usize },
    #[error("prefix of length {prefix} does not fit an output of {total_out} entries")]
    PrefixTooLong { prefix: usize, total_out: usize },
    #[error("arity index {k} is outside 1..={range}")]
    ArityOutOfRange { k: u64, range: ArityRange },
    #[error("arity index must be at least 1")]
    ZeroArity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Instruction {
    Inc {
        r: u64,
    },
    /// Decrement, saturating at 0.
    Dec {
        r: u64,
    },
    Clr {
        r: u64,
    },
    /// `dst := src`.
    Mov {
        src: u64,
        dst: u64,
    },
    /// Jump to `target` when register `r` is 0. Targets past the end halt.
    Jz {
        r: u64,
        target: u64,
    },
    Halt,
}

/// Single-register and destination fields address `q ^ 1`, an involution
/// that gives register 1, the first output, the shortest codes. Move sources
/// are unswapped, so instruction 0 is `MOV 0 → 1`: copy the input length.
fn swap_low(r: u64) -> u64 {
    r ^ 1
}

impl Instruction {
    fn number(&self) -> BigUint {
        let big = |v: u64| BigUint::from(v);
        let reg = |r: u64| big(swap_low(r));
        let (q, kind) = match *self {
            Instruction::Mov { src, dst } => (pair_big(&big(src), &reg(dst)), 0u32),
            Instruction::Inc { r } => (reg(r), 1),
            Instruction::Dec { r } => (reg(r), 2),
            Instruction::Clr { r } => (reg(r), 3),
            Instruction::Jz { r, target } => (pair_big(&reg(r), &big(target)), 4),
            Instruction::Halt => (BigUint::zero(), 5),
        };
        q * 6u32 + kind
    }

    fn from_number(a: &BigUint) -> Self {
        let kind = (a % 6u32).to_u32().unwrap_or(0);
        let q = a / 6u32;
        let sat = |v: &BigUint| v.to_u64().unwrap_or(u64::MAX);
        let reg = |v: &BigUint| swap_low(sat(v));
        match kind {
            0 => {
                let (src, dst) = unpair_big(&q);
                Instruction::Mov { src: sat(&src), dst: reg(&dst) }
            }
            1 => Instruction::Inc { r: reg(&q) },
            2 => Instruction::Dec { r: reg(&q) },
            3 => Instruction::Clr { r: reg(&q) },
            4 => {
                let (r, target) = unpair_big(&q);
                Instruction::Jz { r: reg(&r), target: sat(&target) }
            }
            _ => Instruction::Halt,
        }
    }

    fn max_register(&self) -> Option<u64> {
        match *self {
            Instruction::Inc { r } | Instruction::Dec { r } | Instruction::Clr { r } => Some(r),
            Instruction::Jz { r, .. } => Some(r),
            Instruction::Mov { src, dst } => Some(src.max(dst)),
            Instruction::Halt => None,
        }
    }
}

/// A natural number read as a program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ProgramCode(pub BigUint);

impl fmt::Display for ProgramCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for ProgramCode {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BigUint::from_str(s.trim()).map(ProgramCode)
    }
}

impl From<u64> for ProgramCode {
    fn from(v: u64) -> Self {
        ProgramCode(BigUint::from(v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program {
    pub instructions: Vec<Instruction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Halted {
        #[serde(serialize_with = "serialize_registers")]
        output: Vec<BigUint>,
        steps: u64,
    },
    OutOfBudget,
}

fn serialize_registers<S: serde::Serializer>(regs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(regs.len()))?;
    for r in regs {
        match r.to_u64() {
            Some(v) => seq.serialize_element(&v)?,
            None => seq.serialize_element(&r.to_string())?,
        }
    }
    seq.end()
}

/// How many arity values an index enumeration cycles through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArityRange {
    Finite(u64),
    Unbounded,
}

impl fmt::Display for ArityRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArityRange::Finite(n) => write!(f, "{n}"),
            ArityRange::Unbounded => write!(f, "∞"),
        }
    }
}

struct Registers {
    dense: Vec<BigUint>,
    sparse: HashMap<u64, BigUint>,
}

impl Registers {
    fn load(input: &[BigUint]) -> Self {
        let mut dense = vec![BigUint::zero(); DENSE_REGISTERS.max(input.len() + 1)];
        dense[0] = BigUint::from(input.len());
        dense[1..=input.len()].clone_from_slice(input);
        Registers { dense, sparse: HashMap::new() }
    }

    fn get(&self, r: u64) -> BigUint {
        match usize::try_from(r).ok().filter(|&i| i < self.dense.len()) {
            Some(i) => self.dense[i].clone(),
            None => self.sparse.get(&r).cloned().unwrap_or_default(),
        }
    }

    fn is_zero(&self, r: u64) -> bool {
        match usize::try_from(r).ok().filter(|&i| i < self.dense.len()) {
            Some(i) => self.dense[i].is_zero(),
            None => self.sparse.get(&r).is_none_or(|v| v.is_zero()),
        }
    }

    fn slot(&mut self, r: u64) -> &mut BigUint {
        match usize::try_from(r).ok().filter(|&i| i < self.dense.len()) {
            Some(i) => &mut self.dense[i],
            None => self.sparse.entry(r).or_default(),
        }
    }

    fn read(&self, arity: usize) -> Vec<BigUint> {
        (1..=arity as u64).map(|r| self.get(r)).collect()
    }
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Program { instructions }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn max_register(&self) -> u64 {
        self.instructions.iter().filter_map(Instruction::max_register).max().unwrap_or(0)
    }

    pub fn encode(&self) -> ProgramCode {
        let mut bits: Vec<bool> = vec![true];
        for ins in &self.instructions {
            let v = ins.number() + 1u32;
            let width = v.bits() as usize;
            bits.extend(std::iter::repeat_n(false, width - 1));
            bits.extend((0..width).rev().map(|i| v.bit(i as u64)));
        }
        let mut n = BigUint::zero();
        for b in bits {
            n <<= 1u32;
            if b {
                n += 1u32;
            }
        }
        ProgramCode(n - 1u32)
    }

    pub fn decode(code: &ProgramCode) -> Self {
        let n = &code.0 + 1u32;
        let width = n.bits();
        // drop the leading one
        let bits: Vec<bool> = (0..width.saturating_sub(1)).rev().map(|i| n.bit(i)).collect();
        let mut instructions = Vec::new();
        let mut pos = 0usize;
        loop {
            let zeros = bits[pos..].iter().take_while(|b| !**b).count();
            if pos + zeros >= bits.len() || pos + 2 * zeros + 1 > bits.len() {
                break;
            }
            let word = &bits[pos + zeros..pos + 2 * zeros + 1];
            let mut v = BigUint::zero();
            for &b in word {
                v <<= 1u32;
                if b {
                    v += 1u32;
                }
            }
            instructions.push(Instruction::from_number(&(v - 1u32)));
            pos += 2 * zeros + 1;
        }
        Program { instructions }
    }

    fn execute(&self, input: &[BigUint], budget: u64) -> Result<(Registers, u64), ()> {
        let mut regs = Registers::load(input);
        let mut pc = 0usize;
        let mut steps = 0u64;
        while pc < self.instructions.len() {
            if steps == budget {
                return Err(());
            }
            steps += 1;
            match self.instructions[pc] {
                Instruction::Inc { r } => *regs.slot(r) += 1u32,
                Instruction::Dec { r } => {
                    let slot = regs.slot(r);
                    if !slot.is_zero() {
                        *slot -= 1u32;
                    }
                }
                Instruction::Clr { r } => *regs.slot(r) = BigUint::zero(),
                Instruction::Mov { src, dst } => {
                    let v = regs.get(src);
                    *regs.slot(dst) = v;
                }
                Instruction::Jz { r, target } => {
                    if regs.is_zero(r) {
                        pc = usize::try_from(target).unwrap_or(usize::MAX);
                        continue;
                    }
                }
                Instruction::Halt => break,
            }
            pc += 1;
        }
        Ok((regs, steps))
    }

    /// Runs for at most `budget` steps; arity read from register 0.
    pub fn run(&self, input: &[BigUint], budget: u64) -> RunOutcome {
        match self.execute(input, budget) {
            Ok((regs, steps)) => {
                let k = regs.get(0).to_usize().unwrap_or(usize::MAX).min(MAX_OUTPUT_ARITY);
                RunOutcome::Halted { output: regs.read(k), steps }
            }
            Err(()) => RunOutcome::OutOfBudget,
        }
    }

    /// Runs for at most `budget` steps and reads registers `1..=arity`.
    pub fn run_with_arity(&self, input: &[BigUint], budget: u64, arity: usize) -> RunOutcome {
        match self.execute(input, budget) {
            Ok((regs, steps)) => RunOutcome::Halted { output: regs.read(arity), steps },
            Err(()) => RunOutcome::OutOfBudget,
        }
    }
}

pub fn decode_program(code: &ProgramCode) -> Program {
    Program::decode(code)
}

pub fn encode_program(program: &Program) -> ProgramCode {
    program.encode()
}

pub fn run(code: &ProgramCode, input: &[BigUint], budget: u64) -> RunOutcome {
    Program::decode(code).run(input, budget)
}

/// Reads `bits` as labels when every entry is 0 or 1.
pub fn as_bits(values: &[BigUint]) -> Option<Vec<bool>> {
    values
        .iter()
        .map(|v| {
            if v.is_zero() {
                Some(false)
            } else if v.is_one() {
                Some(true)
            } else {
                None
            }
        })
        .collect()
}

/// `Some(o)` iff the program halts after exactly `steps` steps with
/// registers `1..=arity` all in {0, 1}.
pub fn binary_output_at_exact_step(
    program: &Program,
    input: &[BigUint],
    steps: u64,
    arity: usize,
) -> Option<Vec<bool>> {
    match program.run_with_arity(input, steps, arity) {
        RunOutcome::Halted { output, steps: used } if used == steps => as_bits(&output),
        _ => None,
    }
}

/// Builds a program that runs `w` on `prefix ++ x` and returns the last
/// `take_last` of the `total_out` entries `w` leaves in registers
/// `1..=total_out`. Inputs `x` have `total_out - prefix.len()` entries. The
/// adapter halts exactly when the simulated run does.
pub fn prefix_adapter(
    w_code: &ProgramCode,
    prefix: &[u64],
    take_last: usize,
    total_out: usize,
) -> Result<ProgramCode, MachineError> {
    if take_last > total_out {
        return Err(MachineError::TakeLastTooLarge { take_last, total_out });
    }
    if prefix.len() > total_out {
        return Err(MachineError::PrefixTooLong { prefix: prefix.len(), total_out });
    }
    let w = Program::decode(w_code);
    let shift = prefix.len() as u64;
    let inputs = (total_out - prefix.len()) as u64;
    let zero_reg = w.max_register().max(total_out as u64).saturating_add(1);

    let mut prologue = Vec::new();
    for i in (1..=inputs).rev() {
        if shift > 0 {
            prologue.push(Instruction::Mov { src: i, dst: i + shift });
        }
    }
    for (j, &v) in prefix.iter().enumerate() {
        let r = j as u64 + 1;
        prologue.push(Instruction::Clr { r });
        prologue.extend(std::iter::repeat_n(Instruction::Inc { r }, v as usize));
    }
    prologue.push(Instruction::Clr { r: 0 });
    prologue.extend(std::iter::repeat_n(Instruction::Inc { r: 0 }, total_out));

    let offset = prologue.len() as u64;
    let body_len = w.len() as u64;
    let epilogue_at = offset + body_len;
    let relocate = |t: u64| if t < body_len { t + offset } else { epilogue_at };
    let body = w.instructions.iter().map(|ins| match *ins {
        Instruction::Jz { r, target } => Instruction::Jz { r, target: relocate(target) },
        Instruction::Halt => Instruction::Jz { r: zero_reg, target: epilogue_at },
        other => other,
    });

    let mut instructions = prologue;
    instructions.extend(body);
    let first_kept = (total_out - take_last) as u64;
    for i in 1..=take_last as u64 {
        if first_kept > 0 {
            instructions.push(Instruction::Mov { src: first_kept + i, dst: i });
        }
    }
    instructions.push(Instruction::Clr { r: 0 });
    instructions.extend(std::iter::repeat_n(Instruction::Inc { r: 0 }, take_last));
    instructions.push(Instruction::Halt);
    Ok(Program::new(instructions).encode())
}

/// The `j`-th pair of program code and arity: with `unpair(j) = (c, i)` the
/// code is `c` and the arity is `(i mod range) + 1`, or `i + 1` when unbounded.
pub fn pair_enum(j: &BigUint, range: ArityRange) -> (ProgramCode, u64) {
    let (c, i) = unpair_big(j);
    let k = match range {
        ArityRange::Finite(r) => (&i % r).to_u64().expect("residue fits") + 1,
        ArityRange::Unbounded => (i + 1u32).to_u64().unwrap_or(u64::MAX),
    };
    (ProgramCode(c), k)
}

/// Least `j` with `pair_enum(j, range) = (code, k)`.
pub fn index_of_program(code: &ProgramCode, k: u64, range: ArityRange) -> Result<BigUint, MachineError> {
    if k == 0 {
        return Err(MachineError::ZeroArity);
    }
    if let ArityRange::Finite(r) = range {
        if k > r {
            return Err(MachineError::ArityOutOfRange { k, range });
        }
    }
    Ok(pair_big(&code.0, &BigUint::from(k - 1)))
}

/// Hand-built programs used by tests, the CLI and the acceptance suite.
pub mod programs {
    use super::*;

    /// Register with no writers in any program built here.
    pub const SCRATCH: u64 = 999;

    /// Ignores its input and outputs `values`.
    pub fn constant(values: &[u64]) -> Program {
        let mut ins = Vec::new();
        for (j, &v) in values.iter().enumerate() {
            let r = j as u64 + 1;
            ins.push(Instruction::Clr { r });
            ins.extend(std::iter::repeat_n(Instruction::Inc { r }, v as usize));
        }
        ins.push(Instruction::Clr { r: 0 });
        ins.extend(std::iter::repeat_n(Instruction::Inc { r: 0 }, values.len()));
        ins.push(Instruction::Halt);
        Program::new(ins)
    }

    /// Never halts.
    pub fn diverging() -> Program {
        Program::new(vec![Instruction::Jz { r: SCRATCH, target: 0 }])
    }

    /// Returns its input unchanged.
    pub fn identity() -> Program {
        Program::default()
    }
}
