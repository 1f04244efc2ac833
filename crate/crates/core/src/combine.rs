//! Overlaying trees: restriction to a region, pairwise products, folds over
//! many trees and affine combinations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    classify_split_pair, region_is_empty, region_is_subset, split_partitions_region, PairClassification,
    PartitionOutcome,
};
use crate::tree::{FeatureSchema, LeafKind, LeafValue, Node, NodeId, Region, Side, Split, Tree};

pub const DEFAULT_MAX_NODES: usize = 10_000_000;

/// Size guard and call accounting for combination.
///
/// `max_nodes` caps the size of each output tree. `calls_made` accumulates
/// over every combination run with this budget.
#[derive(Debug, Clone)]
pub struct CombineBudget {
    pub max_nodes: usize,
    /// Re-checks at every recursive step that the working region lies inside
    /// both current nodes' regions. Slow; meant for tests.
    pub check_containment: bool,
    calls_made: usize,
    nodes_created: usize,
}

impl Default for CombineBudget {
    fn default() -> Self {
        CombineBudget::new(DEFAULT_MAX_NODES)
    }
}

impl CombineBudget {
    pub fn new(max_nodes: usize) -> Self {
        CombineBudget {
            max_nodes,
            check_containment: false,
            calls_made: 0,
            nodes_created: 0,
        }
    }

    pub fn with_containment_checks(mut self) -> Self {
        self.check_containment = true;
        self
    }

    /// Recursive combine calls plus restriction calls.
    pub fn calls_made(&self) -> usize {
        self.calls_made
    }

    /// Nodes in the most recent output tree (or the partial one on abort).
    pub fn nodes_created(&self) -> usize {
        self.nodes_created
    }

    pub fn reset_counters(&mut self) {
        self.calls_made = 0;
        self.nodes_created = 0;
    }
}

/// Output arena under construction, children before parents.
struct Output<'b> {
    nodes: Vec<Node>,
    budget: &'b mut CombineBudget,
}

impl<'b> Output<'b> {
    fn new(budget: &'b mut CombineBudget) -> Self {
        budget.nodes_created = 0;
        Output {
            nodes: Vec::new(),
            budget,
        }
    }

    fn push(&mut self, node: Node) -> Result<NodeId> {
        if self.nodes.len() >= self.budget.max_nodes {
            return Err(Error::BudgetExceeded {
                max_nodes: self.budget.max_nodes,
                nodes_created: self.nodes.len(),
            });
        }
        self.nodes.push(node);
        self.budget.nodes_created = self.nodes.len();
        Ok(self.nodes.len() - 1)
    }

    fn leaf(&mut self, value: LeafValue) -> Result<NodeId> {
        self.push(Node::leaf(value))
    }

    fn internal(&mut self, split: Split, left: NodeId, right: NodeId) -> Result<NodeId> {
        let id = self.push(Node::internal(split, left, right))?;
        self.nodes[left].parent = Some(id);
        self.nodes[right].parent = Some(id);
        Ok(id)
    }

    fn finish(self, schema: Arc<FeatureSchema>, root: NodeId) -> Tree {
        Tree::from_arena(schema, self.nodes, root).compacted()
    }

    /// Copies the part of `source` below `node` that is visible inside
    /// `region`, skipping splits that do not cut the region.
    fn collect(
        &mut self,
        source: &Tree,
        node: NodeId,
        region: &Region,
        map: &dyn Fn(&LeafValue) -> LeafValue,
        counted: bool,
    ) -> Result<NodeId> {
        if counted {
            self.budget.calls_made += 1;
        }
        let (split, (left, right)) = match (source.split(node), source.children(node)) {
            (Some(s), Some(c)) => (s, c),
            _ => {
                let value = source.value(node).ok_or(Error::UnknownNode(node))?;
                return self.leaf(map(value));
            }
        };
        match split_partitions_region(source.schema(), split, region)? {
            PartitionOutcome::SplitsRegion => {
                let l = self.collect(source, left, &region.restrict(split, Side::Left), map, true)?;
                let r = self.collect(source, right, &region.restrict(split, Side::Right), map, true)?;
                self.internal(split.clone(), l, r)
            }
            PartitionOutcome::RegionInLeft => self.collect(source, left, region, map, true),
            PartitionOutcome::RegionInRight => self.collect(source, right, region, map, true),
        }
    }
}

/// The tree `source` restricted to `region`: same values on the region, with
/// only the splits that actually cut it.
pub fn collect(source: &Tree, region: &Region) -> Result<Tree> {
    check_region(source.schema(), region)?;
    let mut budget = CombineBudget::default();
    let mut out = Output::new(&mut budget);
    let root = out.collect(source, source.root(), region, &|v| v.clone(), true)?;
    Ok(out.finish(source.schema_arc().clone(), root))
}

fn check_region(schema: &FeatureSchema, region: &Region) -> Result<()> {
    let full = Region::full(schema);
    let shape_ok = region.constraints().len() == schema.len()
        && region.constraints().iter().zip(full.constraints()).all(|(a, b)| {
            std::mem::discriminant(a) == std::mem::discriminant(b)
                && match (a, b) {
                    (crate::tree::FeatureConstraint::Levels(x), crate::tree::FeatureConstraint::Levels(y)) => {
                        x.universe() == y.universe()
                    }
                    _ => true,
                }
        });
    if !shape_ok {
        return Err(Error::SchemaMismatch("region does not match the tree's schema".into()));
    }
    if region_is_empty(region) {
        return Err(Error::EmptyRegion);
    }
    if !region_is_subset(region, &full) {
        return Err(Error::Precondition("region extends beyond the domain".into()));
    }
    Ok(())
}

/// Source ids carried by a value: its tuple ids, or `[0]` for a plain value.
fn source_ids(value: &LeafValue) -> Vec<usize> {
    match value {
        LeafValue::Tuple { source_ids, .. } => source_ids.clone(),
        _ => vec![0],
    }
}

/// Concatenates two values into one flat tuple, shifting the second value's
/// source ids by `offset`.
fn join(first: &LeafValue, second: &LeafValue, offset: usize) -> LeafValue {
    let mut values = first.components().to_vec();
    values.extend_from_slice(second.components());
    let mut ids = source_ids(first);
    ids.extend(source_ids(second).into_iter().map(|i| i + offset));
    LeafValue::Tuple {
        values,
        source_ids: ids,
    }
}

/// Kind of the per-source components, so a tuple tree can be folded with a
/// plain tree of the same underlying kind.
fn component_kind(tree: &Tree) -> Result<LeafKind> {
    let value = tree
        .nodes()
        .iter()
        .find_map(|n| n.value.as_ref())
        .ok_or_else(|| Error::InvalidTree(vec![]))?;
    value
        .components()
        .first()
        .map(LeafValue::kind)
        .ok_or_else(|| Error::InvalidValue("empty tuple".into()))
}

pub(crate) fn check_compatible(a: &Tree, b: &Tree) -> Result<()> {
    if !Arc::ptr_eq(a.schema_arc(), b.schema_arc()) && a.schema() != b.schema() {
        return Err(Error::SchemaMismatch("trees are defined on different schemas".into()));
    }
    let (ka, kb) = (component_kind(a)?, component_kind(b)?);
    if ka != kb {
        return Err(Error::LeafKindMismatch(format!(
            "cannot combine {} leaves with {} leaves",
            ka, kb
        )));
    }
    Ok(())
}

struct Overlay<'a, 'b> {
    first: &'a Tree,
    second: &'a Tree,
    offset: usize,
    out: Output<'b>,
}

impl Overlay<'_, '_> {
    fn schema(&self) -> &FeatureSchema {
        self.first.schema()
    }

    fn check_containment(&self, u: NodeId, v: NodeId, region: &Region) -> Result<()> {
        let inside = region_is_subset(region, &self.first.node_region(u)?)
            && region_is_subset(region, &self.second.node_region(v)?);
        if inside {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "working region {} escapes the regions of nodes {} and {}",
                region, u, v
            )))
        }
    }

    /// Builds a subtree equal to `(first at u, second at v)` on `region`.
    fn combine(&mut self, u: NodeId, v: NodeId, region: &Region) -> Result<NodeId> {
        self.out.budget.calls_made += 1;
        if self.out.budget.check_containment {
            self.check_containment(u, v, region)?;
        }
        let (first, second, offset) = (self.first, self.second, self.offset);
        let (su, sv) = match (first.split(u), second.split(v)) {
            (None, None) => {
                let (a, b) = (leaf_value(first, u)?, leaf_value(second, v)?);
                return self.out.leaf(join(a, b, offset));
            }
            (None, Some(_)) => {
                let a = leaf_value(first, u)?;
                return self.out.collect(second, v, region, &|b| join(a, b, offset), false);
            }
            (Some(_), None) => {
                let b = leaf_value(second, v)?;
                return self.out.collect(first, u, region, &|a| join(a, b, offset), false);
            }
            (Some(su), Some(sv)) => (su, sv),
        };
        let pu = split_partitions_region(self.schema(), su, region)?;
        let pv = split_partitions_region(self.schema(), sv, region)?;
        if pu != PartitionOutcome::SplitsRegion || pv != PartitionOutcome::SplitsRegion {
            return self.combine(descend(first, u, pu), descend(second, v, pv), region);
        }
        let (ul, ur) = first.children(u).ok_or(Error::UnknownNode(u))?;
        let (vl, vr) = second.children(v).ok_or(Error::UnknownNode(v))?;
        let child_v = |side: Side| match side {
            Side::Left => vl,
            Side::Right => vr,
        };
        let (left_pair, right_pair) = match classify_split_pair(self.schema(), su, sv, region)? {
            PairClassification::Crossing => ((ul, v), (ur, v)),
            PairClassification::ParallelSecondInLeft { rest_in } => ((ul, v), (ur, child_v(rest_in))),
            PairClassification::ParallelSecondInRight { rest_in } => ((ul, child_v(rest_in)), (ur, v)),
            PairClassification::IdenticalSameOrientation => ((ul, vl), (ur, vr)),
            PairClassification::IdenticalSwapped => ((ul, vr), (ur, vl)),
        };
        let l = self.combine(left_pair.0, left_pair.1, &region.restrict(su, Side::Left))?;
        let r = self.combine(right_pair.0, right_pair.1, &region.restrict(su, Side::Right))?;
        self.out.internal(su.clone(), l, r)
    }
}

fn leaf_value(tree: &Tree, id: NodeId) -> Result<&LeafValue> {
    tree.value(id).ok_or(Error::UnknownNode(id))
}

/// The node to continue from when a split does not cut the working region.
fn descend(tree: &Tree, id: NodeId, outcome: PartitionOutcome) -> NodeId {
    match outcome {
        PartitionOutcome::SplitsRegion => id,
        PartitionOutcome::RegionInLeft => tree.child(id, Side::Left).unwrap_or(id),
        PartitionOutcome::RegionInRight => tree.child(id, Side::Right).unwrap_or(id),
    }
}

/// A tree whose leaves hold `(first(x), second(x))` as a flat tuple.
///
/// Whenever both splits could be used, the first tree's split is taken.
pub fn combine_pair(first: &Tree, second: &Tree, budget: &mut CombineBudget) -> Result<Tree> {
    check_compatible(first, second)?;
    let offset = first
        .nodes()
        .iter()
        .find_map(|n| n.value.as_ref())
        .map(|v| source_ids(v).into_iter().max().unwrap_or(0) + 1)
        .unwrap_or(1);
    let mut overlay = Overlay {
        first,
        second,
        offset,
        out: Output::new(budget),
    };
    let region = Region::full(first.schema());
    let root = overlay.combine(first.root(), second.root(), &region)?;
    Ok(overlay.out.finish(first.schema_arc().clone(), root))
}

/// Left fold of [`combine_pair`]. Each leaf holds one value per input tree,
/// in input order, with source ids `0..n`.
pub fn combine_many(trees: &[Tree], budget: &mut CombineBudget) -> Result<Tree> {
    let (head, rest) = trees
        .split_first()
        .ok_or_else(|| Error::Precondition("need at least one tree to combine".into()))?;
    let mut acc = head.map_values(|v| Ok(join_single(v)))?;
    for tree in rest {
        acc = combine_pair(&acc, tree, budget)?;
    }
    Ok(acc)
}

fn join_single(value: &LeafValue) -> LeafValue {
    match value {
        LeafValue::Tuple { .. } => value.clone(),
        other => LeafValue::Tuple {
            values: vec![other.clone()],
            source_ids: vec![0],
        },
    }
}

/// The tree of `Σ weights[m] · trees[m]`.
///
/// Class-probability trees need convex weights so that leaves stay
/// probability vectors.
pub fn affine_combination(trees: &[Tree], weights: &[f64], budget: &mut CombineBudget) -> Result<Tree> {
    if weights.len() != trees.len() {
        return Err(Error::LengthMismatch {
            expected: trees.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidValue("weights must be finite".into()));
    }
    let kind = match trees.first() {
        Some(t) => component_kind(t)?,
        None => return Err(Error::Precondition("need at least one tree to combine".into())),
    };
    if let LeafKind::ClassProbs { .. } = kind {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > crate::tree::value::PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidValue(
                "class-probability trees need non-negative weights summing to 1".into(),
            ));
        }
    }
    for t in trees {
        if matches!(t.leaf_kind(), Some(LeafKind::Tuple)) {
            return Err(Error::LeafKindMismatch(
                "affine combination of tuple-valued trees".into(),
            ));
        }
    }
    let combined = combine_many(trees, budget)?;
    combined.map_values(|v| weighted_sum(v.components(), weights))
}

/// `Σ w_m v_m`, accumulated left to right from zero.
pub(crate) fn weighted_sum(values: &[LeafValue], weights: &[f64]) -> Result<LeafValue> {
    match values.first() {
        Some(LeafValue::Scalar(_)) => {
            let mut acc = 0.0;
            for (v, w) in values.iter().zip(weights) {
                acc += w * v
                    .as_scalar()
                    .ok_or_else(|| Error::LeafKindMismatch("mixed tuple".into()))?;
            }
            Ok(LeafValue::Scalar(acc))
        }
        Some(LeafValue::ClassProbs(p0)) => {
            let mut acc = vec![0.0; p0.len()];
            for (v, w) in values.iter().zip(weights) {
                match v {
                    LeafValue::ClassProbs(p) if p.len() == acc.len() => {
                        for (a, x) in acc.iter_mut().zip(p) {
                            *a += w * x;
                        }
                    }
                    _ => return Err(Error::LeafKindMismatch("mixed tuple".into())),
                }
            }
            Ok(LeafValue::ClassProbs(acc))
        }
        _ => Err(Error::LeafKindMismatch(
            "weighted sum needs scalar or class-probability values".into(),
        )),
    }
}

/// Merges sibling leaves with identical values into their parent until no
/// such pair remains. The function is unchanged.
pub fn simplify(tree: &Tree) -> Tree {
    fn rebuild(tree: &Tree, id: NodeId, out: &mut Vec<Node>) -> NodeId {
        if let (Some(split), Some((l, r))) = (tree.split(id), tree.children(id)) {
            let nl = rebuild(tree, l, out);
            let nr = rebuild(tree, r, out);
            let merged = match (&out[nl].value, &out[nr].value) {
                (Some(a), Some(b)) if out[nl].is_leaf() && out[nr].is_leaf() && a == b => Some(a.clone()),
                _ => None,
            };
            if let Some(value) = merged {
                out.truncate(out.len().min(nl.min(nr)));
                out.push(Node::leaf(value));
                return out.len() - 1;
            }
            out.push(Node::internal(split.clone(), nl, nr));
            let id = out.len() - 1;
            out[nl].parent = Some(id);
            out[nr].parent = Some(id);
            id
        } else {
            out.push(Node {
                value: tree.value(id).cloned(),
                ..Node::default()
            });
            out.len() - 1
        }
    }
    let mut nodes = Vec::with_capacity(tree.len());
    let root = rebuild(tree, tree.root(), &mut nodes);
    Tree::from_arena(tree.schema_arc().clone(), nodes, root).compacted()
}
