//! Exact training of linear ramp-loss support vector machines.
//!
//! The crate contains a small dense LP/convex-QP layer, the mixed-integer
//! ramp-loss formulations, big-M tightening procedures for the l1- and
//! l2-norm models, a branch-and-bound engine with a brute-force oracle,
//! clustering helpers and CSV reporting.

pub mod bigm_l1;
pub mod bigm_l2;
pub mod bnb;
pub mod cluster;
pub mod data;
pub mod error;
pub mod model;
pub mod report;
pub mod solver;
pub mod strategy;
pub mod tighten;

pub use error::{Error, Result};
