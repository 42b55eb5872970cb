//! Symbolic-numeric engine for normal forms at a radial boundary point.
//!
//! The symbolic half works on truncated jets with exact rational coefficients:
//! membership in the radial class, reduction of the principal part to the
//! model z by graded canonical transformations, and the order-by-order removal
//! of lower-order terms down to the invariant p₀(y). The numerical half
//! verifies the flow-theoretic statements the symbolic construction relies on:
//! spectral splittings, limits of commuted flows, transport integrals, and
//! smoothness probes for limit maps.

pub mod exec;
pub mod flow;
pub mod jet;
pub mod lower;
pub mod principal;
pub mod rational;
pub mod sampling;
pub mod symbol;

pub use jet::{JetCaps, JetError, JetSeries, Monomial, Var};
pub use rational::Rational;
