use thiserror::Error;

use crate::verify::Certificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("signature mismatch: {left:?} vs {right:?}")]
    SignatureMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not a projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },

    #[error("projection is not central (commutator residual {residual:.3e})")]
    NotCentral { residual: f64 },

    #[error("not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("projection family is not orthogonal or does not sum to 1: {0}")]
    BadProjectionFamily(String),

    #[error("map is not idempotent (residual {residual:.3e}, bound {bound:.3e})")]
    NotIdempotent { residual: f64, bound: f64 },

    #[error("range/kernel split is ill-conditioned (rank {range} + {kernel} != {dim}, condition {condition:.3e})")]
    IllConditioned {
        range: usize,
        kernel: usize,
        dim: usize,
        condition: f64,
    },

    #[error("element is not in the range of the projection (residual {residual:.3e})")]
    NotInRange { residual: f64 },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("space map is not a retraction: {0}")]
    NotRetraction(String),

    #[error("basepoint is not fixed by the retraction")]
    BasepointNotFixed,

    #[error("expectation is not homomorphic (norm gap {gap:.6e})")]
    NotHomomorphic { gap: f64, certificate: Box<Certificate> },

    #[error("idempotent function has an entry far from {{0, 1}}: {value:.6e} at point {point}")]
    NonBinaryIdempotent { point: usize, value: f64 },

    #[error("retraction target of point {point} is ambiguous")]
    AmbiguousTarget { point: usize },

    #[error("Schwarz inequality violated (defect eigenvalue {min_eigenvalue:.3e}, gap {gap:.3e})")]
    SchwarzViolation { min_eigenvalue: f64, gap: f64 },

    #[error("all-zero Gram tensor: no norm-gap witness exists")]
    ZeroGram,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by malformed input files rather than by the mathematics.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Shape(_)
                | Error::InvalidSignature(_)
                | Error::InvalidSize(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
