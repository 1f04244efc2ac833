//! Canonical JSON for schemas, trees and forests.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Feature, FeatureKind, FeatureSchema, LeafValue, Node, Split, Tree};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaJson {
    pub features: Vec<FeatureJson>,
    #[serde(default)]
    pub class_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureJson {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKindJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKindJson {
    Numeric { low: f64, high: f64 },
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SplitJson {
    Numeric { feature: usize, threshold: f64 },
    Categorical { feature: usize, left_levels: Vec<usize> },
    Hyperplane { coeffs: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ValueJson {
    #[serde(rename = "scalar")]
    Scalar { v: f64 },
    #[serde(rename = "probs")]
    Probs { p: Vec<f64> },
    #[serde(rename = "tuple")]
    Tuple {
        values: Vec<ValueJson>,
        source_ids: Vec<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeJson {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueJson>,
}

/// A tree without its schema, as stored inside a forest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeBodyJson {
    pub nodes: Vec<NodeJson>,
    pub root: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFileJson {
    pub schema: SchemaJson,
    pub nodes: Vec<NodeJson>,
    pub root: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestFileJson {
    pub schema: SchemaJson,
    pub trees: Vec<TreeBodyJson>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// Trees sharing one schema, plus free-form annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub schema: Arc<FeatureSchema>,
    pub trees: Vec<Tree>,
    pub metadata: BTreeMap<String, String>,
}

impl Forest {
    pub fn new(schema: Arc<FeatureSchema>, trees: Vec<Tree>) -> Self {
        Forest {
            schema,
            trees,
            metadata: BTreeMap::new(),
        }
    }
}

pub fn schema_to_json(schema: &FeatureSchema) -> SchemaJson {
    SchemaJson {
        features: schema
            .features()
            .iter()
            .map(|f| FeatureJson {
                name: f.name.clone(),
                kind: match &f.kind {
                    FeatureKind::Numeric { low, high } => FeatureKindJson::Numeric { low: *low, high: *high },
                    FeatureKind::Categorical { levels } => FeatureKindJson::Categorical { levels: levels.clone() },
                },
            })
            .collect(),
        class_labels: schema.class_labels().map(|l| l.to_vec()),
    }
}

pub fn schema_from_json(json: SchemaJson) -> Result<FeatureSchema> {
    let features = json
        .features
        .into_iter()
        .map(|f| match f.kind {
            FeatureKindJson::Numeric { low, high } => Feature::numeric(f.name, low, high),
            FeatureKindJson::Categorical { levels } => Feature::categorical(f.name, levels),
        })
        .collect();
    FeatureSchema::new(features, json.class_labels)
}

fn split_to_json(split: &Split) -> SplitJson {
    match split {
        Split::NumericThreshold { feature, threshold } => SplitJson::Numeric {
            feature: *feature,
            threshold: *threshold,
        },
        Split::CategoricalSubset { feature, left_levels } => SplitJson::Categorical {
            feature: *feature,
            left_levels: left_levels.clone(),
        },
        Split::Hyperplane { coefficients, offset } => SplitJson::Hyperplane {
            coeffs: coefficients.clone(),
            offset: *offset,
        },
    }
}

fn split_from_json(json: SplitJson) -> Split {
    match json {
        SplitJson::Numeric { feature, threshold } => Split::numeric(feature, threshold),
        SplitJson::Categorical { feature, left_levels } => Split::categorical(feature, left_levels),
        SplitJson::Hyperplane { coeffs, offset } => Split::hyperplane(coeffs, offset),
    }
}

pub fn value_to_json(value: &LeafValue) -> ValueJson {
    match value {
        LeafValue::Scalar(v) => ValueJson::Scalar { v: *v },
        LeafValue::ClassProbs(p) => ValueJson::Probs { p: p.clone() },
        LeafValue::Tuple { values, source_ids } => ValueJson::Tuple {
            values: values.iter().map(value_to_json).collect(),
            source_ids: source_ids.clone(),
        },
    }
}

pub fn value_from_json(json: ValueJson) -> LeafValue {
    match json {
        ValueJson::Scalar { v } => LeafValue::Scalar(v),
        ValueJson::Probs { p } => LeafValue::ClassProbs(p),
        ValueJson::Tuple { values, source_ids } => LeafValue::Tuple {
            values: values.into_iter().map(value_from_json).collect(),
            source_ids,
        },
    }
}

/// Nodes in arena order with ids equal to arena indices.
pub fn tree_body_to_json(tree: &Tree) -> TreeBodyJson {
    TreeBodyJson {
        nodes: tree
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| NodeJson {
                id: i as u64,
                split: n.split.as_ref().map(split_to_json),
                left: n.left.map(|c| c as u64),
                right: n.right.map(|c| c as u64),
                value: n.value.as_ref().map(value_to_json),
            })
            .collect(),
        root: tree.root() as u64,
    }
}

/// Builds and validates a tree from file nodes. Node ids may be any
/// distinct integers; they are renumbered in file order. Diagnostics name
/// the file's ids, prefixed by `context`.
pub fn tree_from_body(schema: Arc<FeatureSchema>, body: TreeBodyJson, context: &str) -> Result<Tree> {
    let located = |id: u64, msg: String| {
        Error::InvalidTree(vec![crate::error::Violation::tree(format!(
            "{} {}node {}",
            msg, context, id
        ))])
    };
    let mut index: HashMap<u64, usize> = HashMap::with_capacity(body.nodes.len());
    for (i, n) in body.nodes.iter().enumerate() {
        if index.insert(n.id, i).is_some() {
            return Err(located(n.id, "duplicate node id at".into()));
        }
    }
    let lookup = |from: u64, id: u64| -> Result<usize> {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| located(from, format!("child id {} does not exist at", id)))
    };
    let file_ids: Vec<u64> = body.nodes.iter().map(|n| n.id).collect();
    let mut nodes: Vec<Node> = Vec::with_capacity(body.nodes.len());
    for n in &body.nodes {
        nodes.push(Node {
            parent: None,
            split: n.split.clone().map(split_from_json),
            left: n.left.map(|c| lookup(n.id, c)).transpose()?,
            right: n.right.map(|c| lookup(n.id, c)).transpose()?,
            value: n.value.clone().map(value_from_json),
        });
    }
    for i in 0..nodes.len() {
        for c in [nodes[i].left, nodes[i].right].into_iter().flatten() {
            if nodes[c].parent.is_some() {
                return Err(located(file_ids[c], "node has two parents at".into()));
            }
            nodes[c].parent = Some(i);
        }
    }
    let root = *index
        .get(&body.root)
        .ok_or_else(|| located(body.root, "root id does not exist at".into()))?;
    let tree = Tree::from_nodes_unchecked(schema, nodes, root);
    tree.validate().map_err(|violations| {
        Error::InvalidTree(
            violations
                .into_iter()
                .map(|v| match v.node {
                    Some(id) => {
                        crate::error::Violation::tree(format!("{} at {}node {}", v.message, context, file_ids[id]))
                    }
                    None => crate::error::Violation::tree(format!("{} at {}", v.message, context.trim_end())),
                })
                .collect(),
        )
    })?;
    Ok(tree)
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{} at line {} column {}: {}", what, e.line(), e.column(), e)))
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    s.push('\n');
    s
}

pub fn tree_to_json_string(tree: &Tree) -> String {
    let body = tree_body_to_json(tree);
    to_pretty(&TreeFileJson {
        schema: schema_to_json(tree.schema()),
        nodes: body.nodes,
        root: body.root,
    })
}

pub fn tree_from_json_str(text: &str) -> Result<Tree> {
    let file: TreeFileJson = parse(text, "tree file")?;
    let schema = Arc::new(schema_from_json(file.schema)?);
    tree_from_body(
        schema,
        TreeBodyJson {
            nodes: file.nodes,
            root: file.root,
        },
        "",
    )
}

pub fn forest_to_json_string(forest: &Forest) -> String {
    to_pretty(&ForestFileJson {
        schema: schema_to_json(&forest.schema),
        trees: forest.trees.iter().map(tree_body_to_json).collect(),
        metadata: forest.metadata.clone(),
    })
}

pub fn forest_from_json_str(text: &str) -> Result<Forest> {
    let file: ForestFileJson = parse(text, "forest file")?;
    let schema = Arc::new(schema_from_json(file.schema)?);
    let trees = file
        .trees
        .into_iter()
        .enumerate()
        .map(|(i, body)| tree_from_body(schema.clone(), body, &format!("tree {} ", i)))
        .collect::<Result<Vec<_>>>()?;
    check_single_kind(&trees)?;
    Ok(Forest {
        schema,
        trees,
        metadata: file.metadata,
    })
}

pub(crate) fn check_single_kind(trees: &[Tree]) -> Result<()> {
    if let Some(first) = trees.first().and_then(Tree::leaf_kind) {
        for (i, t) in trees.iter().enumerate() {
            if let Some(k) = t.leaf_kind() {
                if k != first {
                    return Err(Error::LeafKindMismatch(format!(
                        "tree {} has {} leaves, tree 0 has {} leaves",
                        i, k, first
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Accepts either a tree file or a forest file and returns its trees.
pub fn trees_from_json_str(text: &str) -> Result<Forest> {
    let probe: serde_json::Value = parse(text, "JSON file")?;
    if probe.get("trees").is_some() {
        forest_from_json_str(text)
    } else {
        let tree = tree_from_json_str(text)?;
        Ok(Forest::new(tree.schema_arc().clone(), vec![tree]))
    }
}

pub fn schema_from_json_str(text: &str) -> Result<FeatureSchema> {
    let probe: serde_json::Value = parse(text, "schema file")?;
    // A tree or forest file carries its schema under "schema".
    let inner = probe.get("schema").cloned().unwrap_or(probe);
    let json: SchemaJson = serde_json::from_value(inner).map_err(|e| Error::Parse(format!("schema file: {}", e)))?;
    schema_from_json(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STUMP4: &str = r#"{"schema": {"features":[{"name":"x1","kind":"numeric","low":0,"high":10}, {"name":"x2","kind":"numeric","low":0,"high":10}], "class_labels": null}, "nodes":[{"id":0,"split":{"type":"numeric","feature":0,"threshold":4.0},"left":1,"right":2}, {"id":1,"value":{"type":"scalar","v":0.0}}, {"id":2,"value":{"type":"scalar","v":1.0}}], "root":0}"#;

    #[test]
    fn parses_documented_example_and_round_trips() {
        let t = tree_from_json_str(STUMP4).unwrap();
        assert_eq!(t.leaf_count(), 2);
        let text = tree_to_json_string(&t);
        let again = tree_from_json_str(&text).unwrap();
        assert_eq!(again, t);
        assert_eq!(tree_to_json_string(&again), text);
    }

    #[test]
    fn ids_are_remapped() {
        let text = r#"{"schema":{"features":[{"name":"x","kind":"numeric","low":0,"high":1}]},
            "nodes":[{"id":7,"value":{"type":"scalar","v":2.5}},
                     {"id":3,"split":{"type":"numeric","feature":0,"threshold":0.5},"left":9,"right":7},
                     {"id":9,"value":{"type":"scalar","v":-1}}],
            "root":3}"#;
        let t = tree_from_json_str(text).unwrap();
        assert_eq!(t.root(), 1);
        assert_eq!(t.children(1), Some((2, 0)));
    }

    #[test]
    fn bad_probabilities_are_located() {
        let text = r#"{"schema":{"features":[{"name":"x","kind":"numeric","low":0,"high":1}],"class_labels":["a","b"]},
            "trees":[{"nodes":[{"id":0,"split":{"type":"numeric","feature":0,"threshold":0.5},"left":1,"right":3},
                              {"id":1,"value":{"type":"probs","p":[0.5,0.5]}},
                              {"id":3,"value":{"type":"probs","p":[0.5,0.3]}}],"root":0}]}"#;
        let err = forest_from_json_str(text).unwrap_err();
        assert!(
            err.to_string().contains("probabilities sum 0.8 ≠ 1 at tree 0 node 3"),
            "{}",
            err
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = tree_from_json_str("{\n  \"schema\": [}").unwrap_err();
        assert!(matches!(err, Error::Parse(ref m) if m.contains("line 2")), "{}", err);
    }

    #[test]
    fn dangling_child_is_reported() {
        let text = r#"{"schema":{"features":[{"name":"x","kind":"numeric","low":0,"high":1}]},
            "nodes":[{"id":0,"split":{"type":"numeric","feature":0,"threshold":0.5},"left":1,"right":2},
                     {"id":1,"value":{"type":"scalar","v":0}}],"root":0}"#;
        assert!(tree_from_json_str(text).unwrap_err().to_string().contains("child id 2"));
    }

    #[test]
    fn hyperplane_and_categorical_round_trip() {
        let text = r#"{"schema":{"features":[{"name":"a","kind":"numeric","low":0,"high":1},{"name":"c","kind":"categorical","levels":["p","q","r"]},{"name":"b","kind":"numeric","low":0,"high":1}]},
            "nodes":[{"id":0,"split":{"type":"hyperplane","coeffs":[1,1],"offset":1},"left":1,"right":2},
                     {"id":1,"split":{"type":"categorical","feature":1,"left_levels":[2,0]},"left":3,"right":4},
                     {"id":2,"value":{"type":"scalar","v":0.1}},
                     {"id":3,"value":{"type":"scalar","v":0.2}},
                     {"id":4,"value":{"type":"scalar","v":0.30000000000000004}}],"root":0}"#;
        let t = tree_from_json_str(text).unwrap();
        let out = tree_to_json_string(&t);
        assert!(out.contains("0.30000000000000004"));
        assert_eq!(tree_to_json_string(&tree_from_json_str(&out).unwrap()), out);
    }
}
