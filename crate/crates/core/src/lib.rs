//! Semi-analytical solver for scalar first-order Cauchy problems
//! `u' - N(x, u) u = phi(x)`, `u(x0) = u0`.
//!
//! The functional-discrete (FD) method freezes the `u`-argument of `N` at the
//! left node of every grid subinterval, solves the resulting linear problem,
//! and then adds correction terms driven by Adomian polynomials. The grid step
//! is the method's built-in convergence parameter. A classical Adomian
//! decomposition baseline and the convergence diagnostics (condition checks,
//! majorant sequence, convergence radius, discrepancy) live alongside it.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;

pub mod adm;
pub mod adomian;
pub mod analysis;
pub mod cli;
pub mod fdcore;
pub mod mesh;
