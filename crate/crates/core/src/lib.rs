//! Cooperative optical beam tracking: stochastic simulation and optimal-control numerics.
//!
//! Two stations of a free-space optical link point at each other. Each station
//! estimates its own pointing state from the space-time photodetection process on
//! its detector plane and steers its transceiver to hold the estimated spot at the
//! detector center. The crate provides:
//!
//! - truth-side simulation of the coupled stations (linear SDE states, doubly
//!   stochastic space-time Poisson photodetection via thinning),
//! - the conditional-mean/covariance jump filter and the impulsive steering law
//!   that pins the estimated spot at the origin,
//! - Monte Carlo evaluation of the received-optical-energy objective, and
//! - two independent estimators of the theoretical performance ceiling: a
//!   backward grid recursion for isotropic scenarios and a piecewise-deterministic
//!   Markov process (PDMP) sampler for general ones.
//!
//! The `harness` module and the `beamtrack` binary tie these together behind a
//! scenario-file CLI with deterministic, seed-reproducible outputs.

pub mod bound;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod harness;
pub mod model;
pub mod objective;
pub mod report;
pub mod rng;
pub mod sim;
pub mod symmat;
pub mod verify;

pub use error::Error;
pub use symmat::SymMat;
