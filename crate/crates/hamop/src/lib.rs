//! Exact symbolic verification of Hamiltonian differential operators over
//! jet spaces.
//!
//! The library decides whether a skew-adjoint horizontal differential operator
//! defines a Lie-Poisson bracket satisfying the Jacobi identity. Two
//! independent routes are provided:
//!
//! - a symbolic route that assembles the defining coefficient system of the
//!   strengthened Jacobi identity and tests it for exact vanishing
//!   ([`jacobi`]), and
//! - an evaluation oracle that substitutes trigonometric-polynomial data,
//!   where every total derivative integrates to exactly zero over a period
//!   ([`oracle`]).
//!
//! All arithmetic is exact: scalars are arbitrary-precision rationals, and a
//! verdict of "zero" means canonical-form zero, never a numerical tolerance.

pub mod algebra;
pub mod calculus;
pub mod jacobi;
pub mod multiindex;
pub mod operators;
pub mod oracle;
pub mod parse;
pub mod render;
pub mod report;
pub mod session;

#[cfg(test)]
pub(crate) mod teststrat;

pub use algebra::{AlgebraError, Atom, Expr, FnAtom, JetVar};
pub use multiindex::MultiIndex;
pub use operators::DiffOp;
pub use session::SessionConfig;
