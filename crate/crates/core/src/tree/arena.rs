use std::sync::Arc;

use crate::error::{Error, Result, Violation};
use crate::geometry::{split_partitions_region, PartitionOutcome};
use crate::tree::region::Region;
use crate::tree::schema::{FeatureSchema, FeatureValue};
use crate::tree::split::{Side, Split};
use crate::tree::value::{LeafKind, LeafValue};

pub type NodeId = usize;

/// One arena slot. A well-formed node is either internal (split and both
/// children) or a leaf (value only).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub split: Option<Split>,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub value: Option<LeafValue>,
}

impl Node {
    pub fn leaf(value: LeafValue) -> Self {
        Node {
            value: Some(value),
            ..Node::default()
        }
    }

    pub fn internal(split: Split, left: NodeId, right: NodeId) -> Self {
        Node {
            split: Some(split),
            left: Some(left),
            right: Some(right),
            ..Node::default()
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }
}

/// A piecewise-constant function stored as an arena of nodes.
///
/// Node ids are arena indices. Two trees with different structure may
/// represent the same function; equality on `Tree` is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    schema: Arc<FeatureSchema>,
    nodes: Vec<Node>,
    root: NodeId,
}

impl Tree {
    /// Builds a tree from raw nodes, filling in parent links from the child
    /// links, and validates it.
    pub fn new(schema: Arc<FeatureSchema>, nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        let tree = Tree::from_nodes_unchecked(schema, nodes, root);
        tree.validate().map_err(Error::InvalidTree)?;
        Ok(tree)
    }

    /// Builds without validation. Parent links are taken as given.
    pub fn from_nodes_unchecked(schema: Arc<FeatureSchema>, nodes: Vec<Node>, root: NodeId) -> Self {
        Tree { schema, nodes, root }
    }

    pub fn constant(schema: Arc<FeatureSchema>, value: LeafValue) -> Result<Self> {
        Tree::new(schema, vec![Node::leaf(value)], 0)
    }

    /// A single split with two leaves.
    pub fn stump(schema: Arc<FeatureSchema>, split: Split, left: LeafValue, right: LeafValue) -> Result<Self> {
        let mut b = TreeBuilder::new(schema);
        let l = b.leaf(left);
        let r = b.leaf(right);
        let root = b.internal(split, l, r);
        b.build(root)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    /// `(left, right)` of an internal node.
    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        let n = &self.nodes[id];
        Some((n.left?, n.right?))
    }

    pub fn child(&self, id: NodeId, side: Side) -> Option<NodeId> {
        match side {
            Side::Left => self.nodes[id].left,
            Side::Right => self.nodes[id].right,
        }
    }

    pub fn split(&self, id: NodeId) -> Option<&Split> {
        self.nodes[id].split.as_ref()
    }

    pub fn value(&self, id: NodeId) -> Option<&LeafValue> {
        self.nodes[id].value.as_ref()
    }

    /// Node ids in depth-first order, left subtree before right.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.children(id) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// Leaf ids in depth-first order, left before right.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| self.is_leaf(id)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            if let Some((l, r)) = self.children(id) {
                stack.push((l, d + 1));
                stack.push((r, d + 1));
            }
        }
        best
    }

    pub fn leaf_kind(&self) -> Option<LeafKind> {
        self.nodes.iter().find_map(|n| n.value.as_ref()).map(LeafValue::kind)
    }

    pub fn has_hyperplanes(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n.split, Some(Split::Hyperplane { .. })))
    }

    /// Leaf reached by a point, without checking the point.
    pub fn leaf_for(&self, point: &[FeatureValue]) -> NodeId {
        let mut id = self.root;
        while let (Some(split), Some(l), Some(r)) = {
            let n = &self.nodes[id];
            (n.split.as_ref(), n.left, n.right)
        } {
            id = match split.route(&self.schema, point) {
                Side::Left => l,
                Side::Right => r,
            };
        }
        id
    }

    /// Value of the unique leaf whose region contains the point.
    pub fn evaluate(&self, point: &[FeatureValue]) -> Result<&LeafValue> {
        self.schema.check_point(point)?;
        let leaf = self.leaf_for(point);
        self.nodes[leaf]
            .value
            .as_ref()
            .ok_or_else(|| Error::InvalidTree(vec![Violation::at(leaf, "leaf without value")]))
    }

    /// Path from the root to a node, as (ancestor, side taken) pairs.
    fn path_to(&self, id: NodeId) -> Result<Vec<(NodeId, Side)>> {
        self.node(id)?;
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            let side = if self.nodes[p].left == Some(cur) {
                Side::Left
            } else {
                Side::Right
            };
            path.push((p, side));
            cur = p;
            if path.len() > self.nodes.len() {
                return Err(Error::InvalidTree(vec![Violation::tree("parent links form a cycle")]));
            }
        }
        path.reverse();
        Ok(path)
    }

    /// `A(v)`: the domain refined by every split on the way down to `id`.
    pub fn node_region(&self, id: NodeId) -> Result<Region> {
        let mut region = Region::full(&self.schema);
        for (ancestor, side) in self.path_to(id)? {
            let split = self.nodes[ancestor]
                .split
                .as_ref()
                .ok_or_else(|| Error::InvalidTree(vec![Violation::at(ancestor, "internal node without split")]))?;
            region = region.restrict(split, side);
        }
        Ok(region)
    }

    /// Checks every structural, value and geometric invariant, reporting all
    /// violations found.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let n = self.nodes.len();
        if n == 0 {
            return Err(vec![Violation::tree("tree has no nodes")]);
        }
        if self.root >= n {
            return Err(vec![Violation::tree(format!("root id {} out of range", self.root))]);
        }
        if self.nodes[self.root].parent.is_some() {
            v.push(Violation::at(self.root, "root has a parent"));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if id != self.root && node.parent.is_none() {
                v.push(Violation::at(id, "second root: node has no parent"));
            }
            for child in [node.left, node.right].into_iter().flatten() {
                if child >= n {
                    v.push(Violation::at(id, format!("child id {} out of range", child)));
                } else if self.nodes[child].parent != Some(id) {
                    v.push(Violation::at(
                        child,
                        format!("parent link does not point back to {}", id),
                    ));
                }
            }
            if node.left.is_some() && node.left == node.right {
                v.push(Violation::at(id, "left and right child are the same node"));
            }
            if let Some(p) = node.parent {
                if p >= n || (self.nodes[p].left != Some(id) && self.nodes[p].right != Some(id)) {
                    v.push(Violation::at(id, "parent does not list node as a child"));
                }
            }
            match (node.left.is_some(), node.right.is_some()) {
                (true, false) | (false, true) => v.push(Violation::at(id, "node has only one child")),
                (true, true) => {
                    if node.split.is_none() {
                        v.push(Violation::at(id, "internal node without split"));
                    }
                    if node.value.is_some() {
                        v.push(Violation::at(id, "internal node has a value"));
                    }
                }
                (false, false) => {
                    if node.value.is_none() {
                        v.push(Violation::at(id, "leaf without value"));
                    }
                    if node.split.is_some() {
                        v.push(Violation::at(id, "leaf has a split"));
                    }
                }
            }
            if let Some(split) = &node.split {
                if let Err(e) = split.check(&self.schema) {
                    v.push(Violation::at(id, e.detail()));
                }
            }
            if let Some(value) = &node.value {
                if let Err(e) = value.check() {
                    v.push(Violation::at(id, e.detail()));
                }
                if let (LeafValue::ClassProbs(p), Some(labels)) = (value, self.schema.class_labels()) {
                    if p.len() != labels.len() {
                        v.push(Violation::at(
                            id,
                            format!("{} class probabilities for {} class labels", p.len(), labels.len()),
                        ));
                    }
                }
            }
        }
        let kinds: Vec<(NodeId, LeafKind)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, node)| node.value.as_ref().map(|x| (i, x.kind())))
            .collect();
        if let Some(&(_, first)) = kinds.first() {
            for &(i, k) in &kinds {
                if k != first {
                    v.push(Violation::at(
                        i,
                        format!("leaf value kind {} differs from {}", k, first),
                    ));
                }
            }
        }
        if !v.is_empty() {
            return Err(v);
        }

        // Structure is sound: walk from the root, checking reachability and
        // that each split genuinely partitions its node's region.
        let mut seen = vec![false; n];
        let mut stack = vec![(self.root, Region::full(&self.schema))];
        while let Some((id, region)) = stack.pop() {
            if seen[id] {
                v.push(Violation::at(id, "node reached twice"));
                continue;
            }
            seen[id] = true;
            if let (Some(split), Some((l, r))) = (self.split(id), self.children(id)) {
                match split_partitions_region(&self.schema, split, &region) {
                    Ok(PartitionOutcome::SplitsRegion) => {
                        stack.push((r, region.restrict(split, Side::Right)));
                        stack.push((l, region.restrict(split, Side::Left)));
                    }
                    Ok(_) => v.push(Violation::at(id, "split does not partition node region")),
                    Err(e) => v.push(Violation::at(id, e.detail())),
                }
            }
        }
        if v.is_empty() {
            for (id, s) in seen.iter().enumerate() {
                if !s {
                    v.push(Violation::at(id, "node not reachable from root"));
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Copy with nodes renumbered in preorder and unreachable nodes dropped.
    pub fn compacted(&self) -> Tree {
        let order = self.preorder();
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (i, &old) in order.iter().enumerate() {
            new_id[old] = i;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old];
                Node {
                    parent: n.parent.map(|p| new_id[p]),
                    split: n.split.clone(),
                    left: n.left.map(|c| new_id[c]),
                    right: n.right.map(|c| new_id[c]),
                    value: n.value.clone(),
                }
            })
            .collect();
        Tree {
            schema: self.schema.clone(),
            nodes,
            root: 0,
        }
    }

    /// Same partition with every leaf value replaced.
    pub fn map_values<F>(&self, mut f: F) -> Result<Tree>
    where
        F: FnMut(&LeafValue) -> Result<LeafValue>,
    {
        let mut nodes = self.nodes.clone();
        for node in &mut nodes {
            if let Some(v) = &node.value {
                node.value = Some(f(v)?);
            }
        }
        Ok(Tree {
            schema: self.schema.clone(),
            nodes,
            root: self.root,
        })
    }

    pub(crate) fn from_arena(schema: Arc<FeatureSchema>, nodes: Vec<Node>, root: NodeId) -> Tree {
        Tree { schema, nodes, root }
    }
}

/// Bottom-up construction: create children first, then their parent.
#[derive(Debug)]
pub struct TreeBuilder {
    schema: Arc<FeatureSchema>,
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new(schema: Arc<FeatureSchema>) -> Self {
        TreeBuilder {
            schema,
            nodes: Vec::new(),
        }
    }

    pub fn leaf(&mut self, value: LeafValue) -> NodeId {
        self.nodes.push(Node::leaf(value));
        self.nodes.len() - 1
    }

    pub fn scalar(&mut self, value: f64) -> NodeId {
        self.leaf(LeafValue::Scalar(value))
    }

    pub fn internal(&mut self, split: Split, left: NodeId, right: NodeId) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node::internal(split, left, right));
        for c in [left, right] {
            if let Some(child) = self.nodes.get_mut(c) {
                child.parent = Some(id);
            }
        }
        id
    }

    /// Validates and returns the tree, renumbered in preorder.
    pub fn build(self, root: NodeId) -> Result<Tree> {
        let tree = Tree::from_nodes_unchecked(self.schema, self.nodes, root);
        tree.validate().map_err(Error::InvalidTree)?;
        Ok(tree.compacted())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::region::Interval;
    use crate::tree::schema::Feature;

    fn d2() -> Arc<FeatureSchema> {
        Arc::new(
            FeatureSchema::new(
                vec![Feature::numeric("x1", 0.0, 10.0), Feature::numeric("x2", 0.0, 10.0)],
                None,
            )
            .unwrap(),
        )
    }

    fn stump4() -> Tree {
        Tree::stump(
            d2(),
            Split::numeric(0, 4.0),
            LeafValue::Scalar(0.0),
            LeafValue::Scalar(1.0),
        )
        .unwrap()
    }

    fn pt(x1: f64, x2: f64) -> Vec<FeatureValue> {
        vec![FeatureValue::Numeric(x1), FeatureValue::Numeric(x2)]
    }

    #[test]
    fn evaluate_routes_boundary_left() {
        let t = stump4();
        assert_eq!(t.evaluate(&pt(3.0, 9.0)).unwrap(), &LeafValue::Scalar(0.0));
        assert_eq!(t.evaluate(&pt(4.0, 0.0)).unwrap(), &LeafValue::Scalar(0.0));
        assert_eq!(t.evaluate(&pt(7.0, 2.0)).unwrap(), &LeafValue::Scalar(1.0));
    }

    #[test]
    fn evaluate_rejects_out_of_domain() {
        let t = stump4();
        assert!(matches!(t.evaluate(&pt(11.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(
            t.evaluate(&[FeatureValue::Numeric(1.0)]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            t.evaluate(&[FeatureValue::Level(0), FeatureValue::Numeric(1.0)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn node_regions_of_stump() {
        let t = stump4();
        let (l, r) = t.children(t.root()).unwrap();
        assert_eq!(t.node_region(t.root()).unwrap(), Region::full(t.schema()));
        let left = t.node_region(l).unwrap();
        assert_eq!(left.interval(0).unwrap(), &Interval::closed(0.0, 4.0));
        assert_eq!(left.interval(1).unwrap(), &Interval::closed(0.0, 10.0));
        let right = t.node_region(r).unwrap();
        assert_eq!(
            right.interval(0).unwrap(),
            &Interval {
                low: 4.0,
                low_closed: false,
                high: 10.0,
                high_closed: true
            }
        );
        assert!(matches!(t.node_region(17), Err(Error::UnknownNode(17))));
    }

    #[test]
    fn validate_reports_missing_leaf_value() {
        let t = stump4();
        assert!(t.validate().is_ok());
        let mut nodes = t.nodes().to_vec();
        let (_, r) = t.children(t.root()).unwrap();
        nodes[r].value = None;
        let broken = Tree::from_nodes_unchecked(d2(), nodes, t.root());
        let violations = broken.validate().unwrap_err();
        assert!(violations
            .iter()
            .any(|v| v.message == "leaf without value" && v.node == Some(r)));
    }

    #[test]
    fn validate_reports_non_partitioning_split() {
        let nodes = vec![
            Node {
                split: Some(Split::numeric(0, 12.0)),
                left: Some(1),
                right: Some(2),
                ..Node::default()
            },
            Node {
                parent: Some(0),
                value: Some(LeafValue::Scalar(0.0)),
                ..Node::default()
            },
            Node {
                parent: Some(0),
                value: Some(LeafValue::Scalar(1.0)),
                ..Node::default()
            },
        ];
        let t = Tree::from_nodes_unchecked(d2(), nodes, 0);
        let violations = t.validate().unwrap_err();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].message, "split does not partition node region");
    }

    #[test]
    fn validate_reports_mixed_kinds_and_bad_probs() {
        let mut b = TreeBuilder::new(d2());
        let l = b.scalar(1.0);
        let r = b.leaf(LeafValue::ClassProbs(vec![0.5, 0.5]));
        let root = b.internal(Split::numeric(0, 5.0), l, r);
        let err = b.build(root).unwrap_err();
        assert!(err.to_string().contains("differs"));

        let err = Tree::constant(d2(), LeafValue::ClassProbs(vec![0.5, 0.3])).unwrap_err();
        assert!(err.to_string().contains("sum"));
    }

    #[test]
    fn validate_rejects_deeper_redundant_split() {
        let mut b = TreeBuilder::new(d2());
        let a = b.scalar(0.0);
        let c = b.scalar(1.0);
        // Inside x1 <= 4 the split x1 <= 6 has an empty right side.
        let inner = b.internal(Split::numeric(0, 6.0), a, c);
        let d = b.scalar(2.0);
        let root = b.internal(Split::numeric(0, 4.0), inner, d);
        assert!(b.build(root).is_err());
    }

    #[test]
    fn single_leaf_tree_is_constant() {
        let t = Tree::constant(d2(), LeafValue::Scalar(7.0)).unwrap();
        assert_eq!(t.evaluate(&pt(1.0, 1.0)).unwrap(), &LeafValue::Scalar(7.0));
        assert_eq!(t.leaf_count(), 1);
    }
}
