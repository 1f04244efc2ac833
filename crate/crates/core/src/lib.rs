//! Exact algebra on decision trees.
//!
//! Trees are piecewise-constant functions over a box of numeric and
//! categorical features. Any number of trees can be overlaid into a single
//! tree whose leaves carry one value per input, which makes affine
//! combinations, L2 norms, distances, means, variances, covariances and
//! correlations exact finite sums over leaves.

pub mod cli;
pub mod combine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mds;
pub mod measures;
pub mod oracle;
pub mod tree;

pub use error::{Error, Result, Violation};
