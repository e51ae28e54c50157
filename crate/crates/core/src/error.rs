use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structure has no atoms")]
    EmptyStructure,
    #[error("non-finite coordinate on atom {0}")]
    NonFinite(usize),
    #[error("atom mismatch: {0}")]
    AtomMismatch(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown element symbol `{0}`")]
    UnknownElement(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("frame {0} carries no energy")]
    MissingEnergy(usize),
    #[error("atoms {0} and {1} are closer than 1e-6 Å")]
    Singular(usize, usize),
    #[error("unphysical parameters: {0}")]
    Collision(String),
    #[error("phosphate groups not identifiable: {0}")]
    MalformedSeed(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
