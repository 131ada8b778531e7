//! Numerical laboratory for fully nonlinear elliptic equations whose
//! ellipticity oscillates randomly in space and may degenerate.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`env`] — seeded samplers of stationary ellipticity fields
//!   (constant, mollified random checkerboard, Poisson trap field) and
//!   Monte Carlo estimation of their inverse moments;
//! * [`operators`] — Pucci extremal operators, linear trace operators and
//!   Bellman minima over finite families, with matrix/offset shifts;
//! * [`grid`] — masked lattice domains on boxes, balls and annuli, grid
//!   functions, and wide-stencil direction frames;
//! * [`scheme`] — the monotone (degenerate elliptic) discrete evaluation
//!   of an operator on a grid function;
//! * [`solver`] — damped-Jacobi and nonlinear Gauss–Seidel solvers for the
//!   Dirichlet problem, the zero-obstacle problem and discrete convex
//!   envelopes;
//! * [`homogenize`] — contact-set densities, effective-operator estimation
//!   by bisection over shift levels, structural property checks, corrector
//!   sublinearity and the two-scale convergence experiment;
//! * [`regularity`] — unit-scale verification of the maximum-principle
//!   estimates that drive the homogenization argument;
//! * [`counterexample`] — the trap-field blow-up experiment and the
//!   discrete certificate for its explicit subsolution.
//!
//! Everything is deterministic given seeds: sampling is counter-based and
//! parallel reductions are evaluated in a fixed order, so results do not
//! depend on thread scheduling. The `parallel` feature (on by default)
//! enables rayon data parallelism; without it every routine falls back to
//! sequential loops with identical output.

pub mod counterexample;
pub mod env;
pub mod error;
pub mod grid;
pub mod homogenize;
pub mod operators;
pub mod parallel;
pub mod regularity;
pub mod scheme;
pub mod solver;
pub mod sym;

pub use error::CoreError;
pub use sym::{Dim, SymMatrix};
