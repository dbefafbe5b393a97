//! Numerical laboratory for damped Hamiltonian chains of rotators and
//! oscillators.
//!
//! The crate builds and checks explicit strict Lyapunov functions for such
//! chains and measures the resulting energy-dissipation scaling:
//!
//! - [`potentials`]: closed-form trig/polynomial potentials with exact
//!   derivatives of any order, plus the non-degeneracy validators.
//! - [`chain`]: chain specifications, Hamiltonians, vector fields.
//! - [`jets`]: truncated Taylor-series arithmetic and flow transport; every
//!   iterated Lie derivative in the crate comes from here.
//! - [`rotor_lyapunov`]: the explicit rotor function
//!   `W = a0 H^g0 - sum_j (a_{2j-1} H^a p_j xi_j + a_{2j} H^a' xi_j L xi_j)`,
//!   its coefficient calibration and the dissipation-bound verification.
//! - [`matrosov`]: the generic strict-Lyapunov construction
//!   `W# = A(W) - sum_k B_k(W) L^{k-1}W L^k W` from tabulated envelopes.
//! - [`oscillators`]: equilibrium solving with certified search boxes and
//!   order-of-vanishing statistics for oscillator chains.
//! - [`sim`]: adaptive Runge-Kutta and Euler-Maruyama integration, decay-rate
//!   scans and the stochastic-generator consistency check.
//! - [`config`] / [`report`]: declarative experiment configs and CSV reports.

// Numeric kernels index several arrays in lockstep; iterator zips would
// obscure the stencils.
#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod config;
pub mod jets;
pub mod matrosov;
pub mod oscillators;
pub mod potentials;
pub mod report;
pub mod rotor_lyapunov;
pub mod sampling;
pub mod sim;
pub mod stats;
