//! Simulation of self-organizing logic circuits built from memristive gates.
//!
//! A boolean problem is compiled into a network of three-terminal gates whose
//! dynamics relax to an equilibrium encoding a solution. The crate covers the
//! device models, gate tables, netlists, problem compilers, the ODE assembly,
//! time integration and an orchestration layer for factorization and
//! subset-sum experiments.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; index loops
// mirror the per-terminal and per-memristor layout of the state vector.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembler;
pub mod compiler;
pub mod device;
pub mod error;
pub mod gate;
pub mod integrator;
pub mod netlist;
pub mod runner;
pub mod sparse;

pub use error::{Error, Result};
