//! Discontinuous Galerkin solvers for linear elastodynamics on Cartesian
//! meshes, in two families:
//!
//! * a displacement formulation (interior penalty: SIP/NIP/IIP, with an
//!   optional velocity-jump damping term), and
//! * a displacement-stress formulation (FDG/LDG/ALT flux families) where the
//!   stress is recovered algebraically from the displacement each step.
//!
//! Both are advanced in time with an explicit second-order leapfrog scheme.
//! The crate also ships the machinery needed to exercise the solvers: broken
//! tensor-product spaces on boxes, the jump/average face calculus, energy
//! norms and convergence-rate tables, a family of manufactured solutions, and
//! config-driven experiment drivers (`runner`) used by the CLI.
//!
//! Everything is plain `f64` data with no global state; all assembled
//! operators are immutable after construction and safe to share across
//! threads.

// index-matched loops over quadrature points and coefficient blocks read
// better than iterator chains in the assembly kernels; negated comparisons
// like !(x > 0.0) are deliberate NaN guards in the validators
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod field;
pub mod ip;
pub mod linalg;
pub mod manufactured;
pub mod material;
pub mod mesh;
pub mod mixed;
pub mod rng;
pub mod runner;
pub mod tables;
pub mod timestep;
pub mod trace;

mod error;
pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
