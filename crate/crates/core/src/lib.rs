//! Dilogarithm potential functions for hyperbolic knot complements.
//!
//! The critical points of a potential `V(x, y, ξ)` are the solutions of the
//! hyperbolicity equations of an ideal triangulation. Adding the Dehn-filling
//! term for a slope `p/q` turns them into the equations of the filled manifold,
//! whose volume and Chern–Simons invariant are read off from `V` at the solution.
//!
//! * [`dilog`]: logarithms with branch tracking, `Li2`, Rogers and Bloch–Wigner functions.
//! * [`potential`]: spec files, evaluation, gradients and the built-in 5_2 potential.
//! * [`solver`]: Newton solver, complete structure, deformation tracing and fillings.
//! * [`invariants`]: volume, Chern–Simons value and core geodesic of a filling.

pub mod cli;
pub mod dilog;
pub mod error;
pub mod invariants;
pub mod potential;
pub mod selftest;
pub mod solver;

pub use error::{Error, Result};
