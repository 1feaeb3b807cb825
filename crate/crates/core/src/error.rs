use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("dependency cycle through layers [{}]", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("edge {src} -> {dst} references unknown layer `{missing}`")]
    DanglingEdge { src: String, dst: String, missing: String },

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),

    #[error("self-loop on layer `{0}`")]
    SelfLoop(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("layer set is not dependency-closed: `{layer}` is done but predecessor `{pred}` is not")]
    NotDependencyClosed { layer: String, pred: String },

    #[error("accelerator `{acc}` cannot execute layer `{layer}`")]
    UnsupportedLayer { acc: String, layer: String },

    #[error("no accelerator supports layer `{layer}` ({kind})")]
    NoSupportingAccelerator { layer: String, kind: String },

    #[error("unknown performance model type `{0}`")]
    UnknownPerfModel(String),

    #[error("mapping does not assign layer `{0}`")]
    IncompleteAssignment(String),

    #[error("invalid mapping state: {0}")]
    InvalidState(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("layer `{0}` persists across graphs but its kind or shape changed")]
    IdConflict(String),

    #[error("search space has {} candidates, over the budget of {budget}", count(*.candidates))]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Candidate counts saturate at `u128::MAX`.
fn count(n: u128) -> String {
    if n == u128::MAX {
        "more than 3.4e38".into()
    } else {
        n.to_string()
    }
}

impl Error {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the mapping problem itself rather than of its inputs.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedLayer { .. } | Error::NoSupportingAccelerator { .. } | Error::BudgetExceeded { .. }
        )
    }
}
