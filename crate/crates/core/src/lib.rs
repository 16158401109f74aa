//! Finite-dimensional C*-algebras `⊕ M_{nᵢ}(ℂ)`, linear maps on them, and
//! certificates for conditional expectations: homomorphism via norm gaps
//! and kernel ideals, centrality of projections, Jordan and triple
//! structure on ranges, and retractions of finite spaces.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod algebra;
pub mod corpus;
pub mod error;
pub mod expectations;
pub mod gelfand;
pub mod instance;
pub mod jordan;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod verify;

pub use algebra::{distance, AlgebraSignature, BlockMatrix, ElementRepr, Tolerance};
pub use error::{Error, Result};
pub use expectations::{BlockLinearMap, OperatorMap, Provenance, Splitting};
pub use scalar::{Real, C};
pub use verify::{Certificate, Property, Reason, Verdict, Witness};

pub type Element = BlockMatrix<f64>;
pub type Map = OperatorMap<f64>;
pub type LinearMap = BlockLinearMap<f64>;
pub type Element32 = BlockMatrix<f32>;
pub type Map32 = OperatorMap<f32>;
