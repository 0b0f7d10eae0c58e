//! Error types shared across the crate.

use thiserror::Error;

/// A single roster or task validation problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("duplicate student id `{0}`")]
    DuplicateId(String),
    #[error("student `{id}`: field `{field}` = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        id: String,
        field: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("student id must not be empty")]
    EmptyId,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid roster: {}", join_violations(.0))]
    InvalidRoster(Vec<Violation>),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot form teams of size {m} from {n} students")]
    InfeasibleSize { n: usize, m: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid team: {0}")]
    InvalidTeam(String),

    #[error("assignment does not match team: {0}")]
    AssignmentMismatch(String),

    #[error("{what} would need {required} items, limit is {limit}")]
    GuardExceeded {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("missing exact baseline for instance `{0}`")]
    MissingBaseline(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
