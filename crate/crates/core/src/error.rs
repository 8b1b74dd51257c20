use thiserror::Error;

use crate::structure::ValidationIssue;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid structure: {}", format_issues(.0))]
    Invalid(Vec<ValidationIssue>),

    #[error("unknown part `{0}`")]
    UnknownPart(String),

    #[error("duplicate part id `{0}`")]
    DuplicatePart(String),

    #[error("part index {0} out of range")]
    PartIndex(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("size cap exceeded: {what} is {got}, limit {limit}")]
    SizeCap {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("disconnected portion")]
    Disconnected,

    #[error("empty portion")]
    EmptyPortion,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown {kind} `{name}` in morphism mask")]
    UnknownMaskTarget { kind: &'static str, name: String },

    #[error("incompatible structures: {0}")]
    Incompatible(String),

    #[error("unbound symbol at part `{0}`")]
    UnboundSymbol(String),

    #[error("cyclic schema nesting through `{0}`")]
    CyclicNesting(String),

    #[error("unknown schema `{0}`")]
    UnknownSchema(String),

    #[error("execution error: {0}")]
    Execution(String),

    #[error("out of fuel after {0} steps")]
    OutOfFuel(u64),

    #[error("unregistered structure {0}")]
    Unregistered(usize),

    #[error("unknown subject `{0}`")]
    UnknownSubject(String),

    #[error("invalid micro-situation: {0}")]
    InvalidSituation(String),

    #[error("raster: {0}")]
    Raster(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
