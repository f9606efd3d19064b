//! Tabular laboratory for reinforcement learning from intervention feedback.
//!
//! The crate is `no_std` (it needs `alloc`) and free of IO. It covers:
//!
//! - [`mdp`]: finite MDPs, policies, environment builders and seeded simulation.
//! - [`solvers`]: value iteration, exact policy evaluation, occupancy measures,
//!   concentrability coefficients and a pessimistic (LCB) planner.
//! - [`intervention`]: simulated intervening experts and the labeled episode loop.
//! - [`learners`]: the RL and supervised subroutines fitted on intervention data.
//! - [`loops`]: RLIF, HG-DAgger, DAgger and behavioral cloning training loops.
//! - [`theory`]: executable suboptimality-gap, concentrability and metric checks.
//!
//! Randomness is always passed in explicitly; every entry point that samples
//! takes an `&mut impl Rng`, and [`rng::seeded`] builds the generator used
//! throughout the workspace.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod intervention;
pub mod learners;
pub mod loops;
pub mod mdp;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
