//! One-class classification with multiple kernel learning in the Fisher
//! null-space framework.
//!
//! The classifier maps target training samples onto the point 1 in a
//! reproducing kernel Hilbert space, with the hypothetical negative at the
//! origin; training is a ridge-type linear solve in the dual. On top of
//! that sit:
//!
//! - [`kernel`] — RBF Gram construction, width heuristic, weighted and
//!   fixed-rule kernel fusion, PSD validation;
//! - [`fisher`] — the single-kernel solver, projections, decision scores;
//! - [`mkl`] — lp-norm multiple kernel learning via fixed-point iteration,
//!   plus a gradient-ascent reference solver;
//! - [`joint`] — several related one-class tasks sharing kernel weights;
//! - [`eval`] — ROC/AUC, presentation-attack metrics, grid selection,
//!   repeated-trial protocols, and the synthetic experiments;
//! - [`data`] — feature CSV and kernel-matrix file formats, model
//!   persistence, synthetic data generation;
//! - [`model`] — a trained-model wrapper tying coefficients to a kernel
//!   recipe for scoring and serialization.
//!
//! Data-parallel loops (Gram rows, per-kernel responses, per-task solves,
//! grid cells, trials) run on rayon under the default `parallel` feature
//! and fall back to sequential code without it; results are bitwise
//! identical either way.

pub mod data;
pub mod error;
pub mod eval;
pub mod fisher;
pub mod joint;
pub mod kernel;
pub mod mkl;
pub mod model;
mod par;

pub use error::{Error, Result};
