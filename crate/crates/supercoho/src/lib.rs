//! Exact-arithmetic computations for Lie superalgebras: construction of
//! gl(m|n) and the Cartan-type algebras W(n), S(n) with their detecting
//! subalgebras, finite-dimensional supermodules (duals, tensors, Kac and
//! dual Kac modules), relative cohomology with restriction maps, invariant
//! rings, rank and support varieties, and weight atypicality.
//!
//! All arithmetic is over the rationals with arbitrary precision. Every
//! dimension, rank, and cohomology table this crate produces is exact and
//! deterministic: identical inputs give bit-identical results, independently
//! of whether the parallel execution paths are enabled.

pub mod cohomology;
pub mod linalg;
pub mod parallel;
pub mod rat;
pub mod representations;
pub mod superalgebra;
pub mod varieties;

pub use rat::Rat;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid construction: {0}")]
    Invalid(String),
    #[error("not a subalgebra: {0}")]
    NotASubalgebra(String),
    #[error("unsupported shape")]
    UnsupportedShape,
    #[error("non-abelianizable weight")]
    NonAbelianizableWeight,
    #[error("algebra is not Type I graded")]
    NotTypeI,
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("incompatible pairs: {0}")]
    IncompatiblePairs(String),
    #[error("undetermined projectivity: [x,x] acts nonzero-nilpotently on the 0-block")]
    UndeterminedProjectivity,
    #[error("cochain space dimension {0} exceeds cap {1} (set SUPERCOHO_MAX_DIM to raise)")]
    CapExceeded(usize, usize),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
