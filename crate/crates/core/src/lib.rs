//! Frank-Wolfe solvers with linear convergence over polytopes.
//!
//! The library provides vanilla, away-step, pairwise, fully-corrective and
//! min-norm-point Frank-Wolfe over domains given by a linear minimization oracle,
//! tools for the pyramidal width and related constants of a polytope, and a small
//! experiment harness.

pub mod atoms;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod iterate;
pub mod linalg;
pub mod objectives;
pub mod oracles;
pub mod solvers;
pub mod trace;

pub use atoms::{Atom, AtomId, AtomStore};
pub use error::{FwError, Result};
pub use iterate::{ActiveIterate, StepKind};
pub use objectives::{FnObjective, Objective, QuadraticObjective};
pub use oracles::PolytopeSpec;
pub use solvers::{solve, Solution, SolverConfig, Start, Status, Variant};
pub use trace::{RunTrace, StepRecord};
