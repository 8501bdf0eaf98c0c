//! Fixed points of self-maps on metric spaces carrying a merely transitive
//! relation.
//!
//! The crate checks the hypotheses of the chain-based generalization of the
//! Ran-Reurings fixed point theorem on finite instances, runs Picard iteration
//! with the explicit error bounds of its constructive proof, reduces local
//! radial contractions on rectifiable paths to finite orbit instances, and
//! cross-checks every solver answer against brute-force oracles.
//!
//! Module map:
//!
//! * [`space`]: finite metric spaces, transitive relations, self-map tables.
//! * [`chain`]: ε-monotonic chains and chainability.
//! * [`contraction`]: monotonicity, contraction and limit-comparability checks.
//! * [`solver`]: certified Picard iteration, existence and uniqueness pipelines.
//! * [`paths`]: polyline lengths, image paths, orbit metric, path metric estimate.
//! * [`oracle`]: brute-force verdicts, seeded instance generation, mining.
//! * [`expr`]: the expression language for real-vector maps.
//! * [`io`]: instance, paths and report file formats.
//! * [`cli`]: the `relfix` command-line front end.

pub mod chain;
pub mod cli;
pub mod contraction;
mod error;
pub mod expr;
pub mod fmt;
pub mod io;
pub mod oracle;
pub mod paths;
pub mod rng;
pub mod solver;
pub mod space;

pub use error::{Error, Result};

/// Relative tolerance for metric validation and path inequalities.
pub const TAU_REL: f64 = 1e-9;

/// Absolute tolerance for contraction inequalities and trace bounds.
pub const TAU_ABS: f64 = 1e-12;
