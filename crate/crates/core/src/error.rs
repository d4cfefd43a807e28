use thiserror::Error;

/// Errors raised by the structure-prediction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid species `{symbol}`: {reason}")]
    InvalidSpecies { symbol: String, reason: String },

    #[error("invalid unit cell: {0}")]
    InvalidCell(String),

    #[error("degenerate unit cell: relative volume {relative_volume:.3e} is not positive enough")]
    DegenerateCell { relative_volume: f64 },

    #[error("invalid force field entry {a}-{b}: {reason}")]
    InvalidForceField { a: String, b: String, reason: String },

    #[error("expected {expected} positions, found {found}")]
    PositionCount { expected: usize, found: usize },

    #[error("non-finite coordinate at site {site}")]
    NonFiniteCoordinate { site: usize },

    #[error("site {site} references unknown species index {species}")]
    UnknownSpecies { site: usize, species: usize },

    #[error("a structure needs at least one site")]
    EmptyStructure,

    #[error("no feasible structure after {attempts} placement attempts")]
    Exhausted { attempts: usize },

    #[error("sites {i} and {j} are {distance:.3e} Å apart (image {offset:?}); energy is singular")]
    Singularity {
        i: usize,
        j: usize,
        offset: [i32; 3],
        distance: f64,
    },

    #[error("discretization step {delta} Å exceeds the smallest cell length {min_length} Å")]
    EmptyGrid { delta: f64, min_length: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("structures do not share a composition and cell")]
    CompositionMismatch,

    #[error("composition is not valid: {0}")]
    InvalidComposition(crate::model::CompositionViolation),

    #[error("empty input")]
    EmptyInput,

    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
