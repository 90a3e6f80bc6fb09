//! Ground states and weak KAM solutions for Frenkel–Kontorova chains on
//! quasi-periodic substrates.
//!
//! The library is organised bottom-up:
//!
//! - [`substrate`]: quasi-periodic point sets `q_k = k + (ρ−1)⌊kα⌋`, their
//!   Sturmian coding, cell lookup and pattern recurrence.
//! - [`model`]: nearest-neighbour interaction energies
//!   `E(x, y) = ½(y − x − λ)² + K·V(x)` with a substrate-adapted potential.
//! - [`ground_action`]: certified brackets for the ground energy per bond
//!   (chain lower bounds, closed-chain and ladder upper bounds) and the
//!   degenerate/nondegenerate pinning verdict.
//! - [`mane`]: minimal-action potentials between sites, calibrated and
//!   fundamental configurations, preferred ordering and growth asymmetry.
//! - [`kam`]: the nonlinear smoothing operator, localized fixed points,
//!   solution verification, classification and parameter sweeps.
//! - [`config`], [`report`], [`cli`], [`recipes`]: file-driven front end.

pub mod cli;
pub mod config;
mod dp;
pub mod error;
pub mod ground_action;
pub mod kam;
pub mod mane;
pub mod model;
pub mod recipes;
pub mod report;
pub mod substrate;

pub use error::{Error, Result};
