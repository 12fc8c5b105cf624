//! Computable learning on finitely supported hypotheses.
//!
//! The crate provides effective codings of tuples and samples, an enumerable
//! step-bounded register machine, recursively enumerable hypothesis classes
//! (including one whose VC dimension and effective VC dimension differ),
//! exact VC computations and witness algorithms, empirical and structural
//! risk minimizers, and a seeded Monte-Carlo harness for learning guarantees.
//!
//! Data-parallel loops run on rayon with the default `parallel` feature and
//! sequentially without it; results are identical either way.

pub mod classes;
pub mod cli;
pub mod codec;
pub mod harness;
pub mod hypothesis;
pub mod learners;
pub mod machine;
pub mod par;
pub mod point;
pub mod vc;
