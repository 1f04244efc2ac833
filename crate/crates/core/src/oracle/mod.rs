//! Brute-force reference computations used to check the exact algorithms.
//!
//! Nothing here calls into combination or the leaf-sum integrals; the
//! oracles only evaluate trees point by point.

pub mod equivalence;
pub mod fuzz;
pub mod grid;
pub mod monte_carlo;

pub use equivalence::{pointwise_equivalence, Equivalence};
pub use fuzz::{random_point, random_schema, random_tree, FuzzConfig, LeafSpec};
pub use grid::{grid_integral, CellGrid, Combiner};
pub use monte_carlo::{monte_carlo_integral, McEstimate};
