use thiserror::Error;

use crate::graph::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("inconsistent graph: d + s - u = {value} is negative")]
    Inconsistent { value: i64 },

    #[error("graph count ceiling {ceiling} exceeded for (n={n}, r={r}, d={d})")]
    ResourceLimit { n: u32, r: u32, d: u32, ceiling: usize },

    #[error("invalid move parameters: {0}")]
    InvalidMove(String),

    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("{} graph(s) unreachable from the maximal graph: {}", .unreachable.len(), .unreachable.join(", "))]
    Unreachable { unreachable: Vec<String> },

    #[error("invalid transversal configuration: {0}")]
    InvalidConfig(String),

    #[error("forms share a common factor of degree {degree}")]
    CommonFactor { degree: u32 },

    #[error("no move sequence from gamma to the boundary limit {target}")]
    WitnessNotFound { target: String },

    #[error("equivariant data required: {0}")]
    EquivariantDataRequired(String),

    #[error("cache corruption: {0}")]
    CacheCorruption(String),

    #[error("interpolation mismatch for m={m} at q={q}: predicted {predicted}, counted {counted}")]
    InterpolationMismatch {
        m: u32,
        q: u64,
        predicted: String,
        counted: String,
    },

    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("{failed} self-test check(s) failed")]
    ChecksFailed { failed: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGraph(_) => "invalid_graph",
            Error::Inconsistent { .. } => "inconsistent",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::InvalidMove(_) => "invalid_move",
            Error::InvalidArguments(_) => "invalid_arguments",
            Error::Unreachable { .. } => "unreachable",
            Error::InvalidConfig(_) => "invalid_config",
            Error::CommonFactor { .. } => "common_factor",
            Error::WitnessNotFound { .. } => "witness_not_found",
            Error::EquivariantDataRequired(_) => "equivariant_data_required",
            Error::CacheCorruption(_) => "cache_corruption",
            Error::InterpolationMismatch { .. } => "interpolation_mismatch",
            Error::Schema { .. } => "schema",
            Error::ChecksFailed { .. } => "checks_failed",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
