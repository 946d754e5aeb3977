//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A probability vector failed validation (negative mass beyond
    /// tolerance, or total mass away from one).
    #[error("invalid probability mass: {0}")]
    InvalidMass(String),

    /// Two objects that must share an alphabet do not.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// A parameter is outside the domain where the requested quantity
    /// is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The source description itself is unusable.
    #[error("source spec error: {0}")]
    SourceSpec(String),

    /// An exact computation would exceed its enumeration or memory budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Every candidate state was eliminated by a zero-probability symbol.
    #[error("no admissible class: {0}")]
    NoAdmissibleClass(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
