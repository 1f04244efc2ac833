//! The flat-table dialect: one CSV row per node.
//!
//! Required header columns, in any order:
//!
//! | column | meaning |
//! |---|---|
//! | `tree_id` | groups rows into trees; trees keep first-appearance order |
//! | `node_id` | unique within a tree |
//! | `parent_id` | empty for the root |
//! | `is_left_child` | `1`/`true`/`left` or `0`/`false`/`right`; empty for the root |
//! | `split_feature` | feature name or index; empty for leaves |
//! | `split_threshold_or_levels` | threshold for numeric features, `|`-separated level names for categorical ones |
//! | `leaf_value` | real, `|`-separated class probabilities, or a class label (read as one-hot) |
//!
//! Any other column must be empty in every row; a filled-in surrogate or
//! missing-value column is rejected because it cannot be represented.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result, Violation};
use crate::io::json::{check_single_kind, Forest};
use crate::tree::{FeatureKind, FeatureSchema, LeafValue, Node, Split, Tree};

pub const COLUMNS: [&str; 7] = [
    "tree_id",
    "node_id",
    "parent_id",
    "is_left_child",
    "split_feature",
    "split_threshold_or_levels",
    "leaf_value",
];

struct Row {
    tree: String,
    node: String,
    parent: String,
    is_left: String,
    feature: String,
    condition: String,
    value: String,
}

fn import_error(tree: &str, node: &str, msg: impl std::fmt::Display) -> Error {
    Error::Import(format!("{} at tree_id {} node_id {}", msg, tree, node))
}

fn describe_column(name: &str) -> &'static str {
    let lower = name.to_ascii_lowercase();
    if lower.contains("surrogate") {
        "surrogate splits are not supported"
    } else if lower.contains("missing") || lower.contains("default") || lower.contains("na_") {
        "missing-value routing is not supported"
    } else {
        "unrecognised column"
    }
}

fn parse_rows(text: &str) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("flat table header: {}", e)))?
        .clone();
    let mut position = [0usize; 7];
    for (slot, name) in position.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Import(format!("missing required column '{}'", name)))?;
    }
    let extra: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !COLUMNS.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("flat table: {}", e)))?;
        let get = |i: usize| record.get(position[i]).unwrap_or("").to_string();
        let row = Row {
            tree: get(0),
            node: get(1),
            parent: get(2),
            is_left: get(3),
            feature: get(4),
            condition: get(5),
            value: get(6),
        };
        for (i, name) in &extra {
            if !record.get(*i).unwrap_or("").is_empty() {
                return Err(import_error(
                    &row.tree,
                    &row.node,
                    format!("column '{}' is set: {}", name, describe_column(name)),
                ));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn parse_side(row: &Row) -> Result<bool> {
    match row.is_left.to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "left" | "l" => Ok(true),
        "0" | "false" | "f" | "no" | "right" | "r" => Ok(false),
        other => Err(import_error(
            &row.tree,
            &row.node,
            format!("is_left_child '{}' is not a boolean", other),
        )),
    }
}

fn parse_split(schema: &FeatureSchema, row: &Row) -> Result<Split> {
    let feature = schema
        .index_of(&row.feature)
        .or_else(|| row.feature.parse::<usize>().ok().filter(|&i| i < schema.len()))
        .ok_or_else(|| import_error(&row.tree, &row.node, format!("unknown feature '{}'", row.feature)))?;
    match &schema.features()[feature].kind {
        FeatureKind::Numeric { .. } => {
            let t: f64 = row.condition.parse().map_err(|_| {
                import_error(
                    &row.tree,
                    &row.node,
                    format!("threshold '{}' is not a number", row.condition),
                )
            })?;
            if !t.is_finite() {
                return Err(import_error(&row.tree, &row.node, "threshold is not finite"));
            }
            Ok(Split::numeric(feature, t))
        }
        FeatureKind::Categorical { levels } => {
            let picked = row
                .condition
                .split('|')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|name| {
                    levels
                        .iter()
                        .position(|l| l == name)
                        .ok_or_else(|| import_error(&row.tree, &row.node, format!("unknown level '{}'", name)))
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok(Split::categorical(feature, picked))
        }
    }
}

fn parse_value(schema: &FeatureSchema, row: &Row) -> Result<LeafValue> {
    let text = row.value.as_str();
    if text.is_empty() {
        return Err(import_error(&row.tree, &row.node, "leaf without value"));
    }
    if let Some(labels) = schema.class_labels() {
        if let Some(k) = labels.iter().position(|l| l == text) {
            return Ok(LeafValue::one_hot(k, labels.len()));
        }
    }
    let numbers = text
        .split('|')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|_| import_error(&row.tree, &row.node, format!("leaf value '{}' is not understood", text)))?;
    if text.contains('|') || schema.class_labels().is_some() {
        Ok(LeafValue::ClassProbs(numbers))
    } else {
        Ok(LeafValue::Scalar(numbers[0]))
    }
}

fn build_tree(schema: &Arc<FeatureSchema>, tree_id: &str, rows: &[&Row]) -> Result<Tree> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, r) in rows.iter().enumerate() {
        if index.insert(r.node.as_str(), i).is_some() {
            return Err(import_error(tree_id, &r.node, "duplicate node id"));
        }
    }
    let mut nodes: Vec<Node> = vec![Node::default(); rows.len()];
    let mut root = None;
    for (i, r) in rows.iter().enumerate() {
        if r.parent.is_empty() {
            if root.replace(i).is_some() {
                return Err(import_error(tree_id, &r.node, "second root (empty parent_id)"));
            }
            continue;
        }
        let p = *index.get(r.parent.as_str()).ok_or_else(|| {
            import_error(
                tree_id,
                &r.node,
                format!("orphan node: parent '{}' not found", r.parent),
            )
        })?;
        let slot = if parse_side(r)? {
            &mut nodes[p].left
        } else {
            &mut nodes[p].right
        };
        if slot.is_some() {
            return Err(import_error(tree_id, &r.parent, "two children on the same side"));
        }
        *slot = Some(i);
        nodes[i].parent = Some(p);
    }
    let root = root.ok_or_else(|| Error::Import(format!("no root row (empty parent_id) at tree_id {}", tree_id)))?;
    for (i, r) in rows.iter().enumerate() {
        let has_children = nodes[i].left.is_some() || nodes[i].right.is_some();
        if has_children {
            if r.feature.is_empty() {
                return Err(import_error(tree_id, &r.node, "internal node without split_feature"));
            }
            nodes[i].split = Some(parse_split(schema, r)?);
        } else {
            if !r.feature.is_empty() {
                return Err(import_error(tree_id, &r.node, "split node without children"));
            }
            nodes[i].value = Some(parse_value(schema, r)?);
        }
    }
    let tree = Tree::from_nodes_unchecked(schema.clone(), nodes, root);
    tree.validate().map_err(|violations| {
        Error::InvalidTree(
            violations
                .into_iter()
                .map(|v| match v.node {
                    Some(i) => {
                        Violation::tree(format!("{} at tree_id {} node_id {}", v.message, tree_id, rows[i].node))
                    }
                    None => Violation::tree(format!("{} at tree_id {}", v.message, tree_id)),
                })
                .collect(),
        )
    })?;
    Ok(tree)
}

/// Reads a flat node table into a validated forest over `schema`.
pub fn import_flat_table(text: &str, schema: Arc<FeatureSchema>) -> Result<Forest> {
    let rows = parse_rows(text)?;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&Row>> = HashMap::new();
    for r in &rows {
        let key = r.tree.as_str();
        if !groups.contains_key(key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    let trees = order
        .iter()
        .map(|id| build_tree(&schema, id, &groups[id]))
        .collect::<Result<Vec<_>>>()?;
    if trees.is_empty() {
        return Err(Error::Import("table has no rows".into()));
    }
    check_single_kind(&trees)?;
    let mut forest = Forest::new(schema, trees);
    forest.metadata.insert("source".into(), "flat-table".into());
    Ok(forest)
}

fn format_value(value: &LeafValue) -> Result<String> {
    match value {
        LeafValue::Scalar(v) => Ok(v.to_string()),
        LeafValue::ClassProbs(p) => Ok(p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|")),
        LeafValue::Tuple { .. } => Err(Error::Import("tuple leaves have no flat-table form".into())),
    }
}

/// Writes trees in the flat-table dialect. Hyperplane splits and tuple
/// leaves cannot be expressed and are rejected.
pub fn export_flat_table(trees: &[Tree]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Import(format!("writing flat table: {}", e));
    w.write_record(COLUMNS).map_err(csv_err)?;
    for (t, tree) in trees.iter().enumerate() {
        let schema = tree.schema();
        for id in tree.preorder() {
            let node = &tree.nodes()[id];
            let (parent, side) = match node.parent {
                Some(p) => (
                    p.to_string(),
                    if tree.nodes()[p].left == Some(id) { "1" } else { "0" }.to_string(),
                ),
                None => (String::new(), String::new()),
            };
            let (feature, condition) = match &node.split {
                Some(Split::NumericThreshold { feature, threshold }) => {
                    (schema.features()[*feature].name.clone(), threshold.to_string())
                }
                Some(Split::CategoricalSubset { feature, left_levels }) => {
                    let f = &schema.features()[*feature];
                    let names = match &f.kind {
                        FeatureKind::Categorical { levels } => left_levels
                            .iter()
                            .map(|&k| levels[k].clone())
                            .collect::<Vec<_>>()
                            .join("|"),
                        FeatureKind::Numeric { .. } => String::new(),
                    };
                    (f.name.clone(), names)
                }
                Some(Split::Hyperplane { .. }) => {
                    return Err(Error::Import("hyperplane splits have no flat-table form".into()))
                }
                None => (String::new(), String::new()),
            };
            let value = match &node.value {
                Some(v) => format_value(v)?,
                None => String::new(),
            };
            w.write_record([t.to_string(), id.to_string(), parent, side, feature, condition, value])
                .map_err(csv_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Import(format!("writing flat table: {}", e)))?;
    String::from_utf8(bytes).map_err(|e| Error::Import(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Feature;

    fn d2() -> Arc<FeatureSchema> {
        Arc::new(
            FeatureSchema::new(
                vec![
                    Feature::numeric("x1", 0.0, 10.0),
                    Feature::categorical("c", ["a", "b", "c"]),
                ],
                Some(vec!["no".into(), "yes".into()]),
            )
            .unwrap(),
        )
    }

    const HEADER: &str = "tree_id,node_id,parent_id,is_left_child,split_feature,split_threshold_or_levels,leaf_value\n";

    #[test]
    fn reads_a_small_forest() {
        let text = format!(
            "{}0,0,,,x1,4,\n0,1,0,1,,,no\n0,2,0,0,c,a|c,\n0,3,2,1,,,0.25|0.75\n0,4,2,0,,,yes\n1,r,,,,,0.5|0.5\n",
            HEADER
        );
        let f = import_flat_table(&text, d2()).unwrap();
        assert_eq!(f.trees.len(), 2);
        assert_eq!(f.trees[0].leaf_count(), 3);
        assert_eq!(f.trees[1].len(), 1);
        let exported = export_flat_table(&f.trees).unwrap();
        let back = import_flat_table(&exported, d2()).unwrap();
        assert_eq!(back.trees, f.trees.iter().map(Tree::compacted).collect::<Vec<_>>());
    }

    #[test]
    fn orphans_are_named() {
        let text = format!("{}7,0,,,x1,4,\n7,1,0,1,,,no\n7,2,9,0,,,yes\n", HEADER);
        let err = import_flat_table(&text, d2()).unwrap_err();
        assert!(err.to_string().contains("tree_id 7 node_id 2"), "{}", err);
        assert!(err.to_string().contains("orphan"), "{}", err);
    }

    #[test]
    fn surrogate_columns_are_rejected() {
        let text = "tree_id,node_id,parent_id,is_left_child,split_feature,split_threshold_or_levels,leaf_value,surrogate_feature\n0,0,,,x1,4,,c\n";
        let err = import_flat_table(text, d2()).unwrap_err();
        assert!(err.to_string().contains("surrogate"), "{}", err);
        let ok = "tree_id,node_id,parent_id,is_left_child,split_feature,split_threshold_or_levels,leaf_value,missing_default\n0,0,,,,,yes,\n";
        assert!(import_flat_table(ok, d2()).is_ok());
    }

    #[test]
    fn invalid_splits_are_located() {
        let text = format!("{}0,0,,,x1,12,\n0,1,0,1,,,no\n0,2,0,0,,,yes\n", HEADER);
        let err = import_flat_table(&text, d2()).unwrap_err();
        assert!(
            err.to_string()
                .contains("split does not partition node region at tree_id 0 node_id 0"),
            "{}",
            err
        );
    }
}
