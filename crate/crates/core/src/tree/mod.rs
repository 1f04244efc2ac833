//! Schemas, splits, regions and the tree arena.

pub mod arena;
pub mod region;
pub mod schema;
pub mod split;
pub mod value;

pub use arena::{Node, NodeId, Tree, TreeBuilder};
pub use region::{FeatureConstraint, HalfSpace, Interval, LevelSet, Region};
pub use schema::{Feature, FeatureKind, FeatureSchema, FeatureValue};
pub use split::{Side, Split};
pub use value::{LeafKind, LeafValue};
