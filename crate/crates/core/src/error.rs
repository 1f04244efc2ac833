use std::fmt;

use thiserror::Error;

/// A single broken tree invariant, located by node id where applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub node: Option<usize>,
    pub message: String,
}

impl Violation {
    pub(crate) fn at(node: usize, message: impl Into<String>) -> Self {
        Violation {
            node: Some(node),
            message: message.into(),
        }
    }

    pub(crate) fn tree(message: impl Into<String>) -> Self {
        Violation {
            node: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(id) => write!(f, "node {}: {}", id, self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("invalid tree: {}", join_violations(.0))]
    InvalidTree(Vec<Violation>),

    #[error("invalid leaf value: {0}")]
    InvalidValue(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("leaf kind mismatch: {0}")]
    LeafKindMismatch(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty region")]
    EmptyRegion,

    #[error("node budget exceeded: limit {max_nodes}, {nodes_created} nodes created before abort")]
    BudgetExceeded { max_nodes: usize, nodes_created: usize },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("degenerate correlation: zero variance in {0}")]
    DegenerateCorrelation(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear program is unbounded")]
    UnboundedLp,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("import error: {0}")]
    Import(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Stable upper-case name used in machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSchema(_) => "INVALID_SCHEMA",
            Error::InvalidSplit(_) => "INVALID_SPLIT",
            Error::Domain(_) => "DOMAIN",
            Error::UnknownNode(_) => "UNKNOWN_NODE",
            Error::InvalidTree(_) => "INVALID_TREE",
            Error::InvalidValue(_) => "INVALID_VALUE",
            Error::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            Error::LeafKindMismatch(_) => "LEAF_KIND_MISMATCH",
            Error::LengthMismatch { .. } => "LENGTH_MISMATCH",
            Error::EmptyRegion => "EMPTY_REGION",
            Error::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
            Error::UnsupportedGeometry(_) => "UNSUPPORTED_GEOMETRY",
            Error::DegenerateCorrelation(_) => "DEGENERATE_CORRELATION",
            Error::Precondition(_) => "PRECONDITION",
            Error::UnboundedLp => "UNBOUNDED_LP",
            Error::InvalidMeasure(_) => "INVALID_MEASURE",
            Error::Parse(_) => "PARSE",
            Error::Import(_) => "IMPORT",
            Error::Io(_) => "IO",
        }
    }

    /// Message without the category prefix, for embedding in diagnostics.
    pub fn detail(&self) -> String {
        match self {
            Error::InvalidSchema(m)
            | Error::InvalidSplit(m)
            | Error::Domain(m)
            | Error::InvalidValue(m)
            | Error::SchemaMismatch(m)
            | Error::LeafKindMismatch(m)
            | Error::UnsupportedGeometry(m)
            | Error::Precondition(m)
            | Error::InvalidMeasure(m)
            | Error::Parse(m)
            | Error::Import(m) => m.clone(),
            other => other.to_string(),
        }
    }

    /// True for failures of the computation itself, as opposed to bad input.
    pub fn is_computation_error(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::UnsupportedGeometry(_)
                | Error::DegenerateCorrelation(_)
                | Error::UnboundedLp
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
