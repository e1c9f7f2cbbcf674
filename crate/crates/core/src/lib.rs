//! Robust and data-conforming LQR synthesis for systems modeled as polytopic
//! difference inclusions.
//!
//! The crate assembles the synthesis programs as semidefinite programs over
//! matrix variables, solves them with an embedded interior-point method, and
//! evaluates the resulting gains by closed-loop Monte Carlo simulation of a
//! nonlinear benchmark plant.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod sdp;
pub mod simulation;
pub mod solver;
pub mod statistics;
pub mod synthesis;

pub use error::{Error, Result};
