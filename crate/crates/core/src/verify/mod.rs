//! Certificates for the conditional-expectation axioms, the homomorphism
//! characterization, and centrality of projections.

mod centrality;
mod certificate;
mod expectation;
mod homomorphic;

pub use centrality::{central_test, comparability_split, subequivalence, ComparabilitySplit, Subequivalence};
pub use certificate::{Certificate, Check, Failure, NamedElement, Property, Reason, Verdict, Witness};
pub use expectation::{choi_spectrum, verify_expectation, ChoiSpectrum, CONTRACTIVITY_SAMPLES};
pub use homomorphic::{
    basis_multiplicativity, homomorphic_certificate, kadison_schwarz, kernel_ideal_residual,
    ks_defect, multiplicative_domain_member, norm_gap, recheck_norm_gap, witness_norm_gap,
    GramTensor, NormGapWitness, SchwarzSample,
};

use crate::algebra::BlockMatrix;
use crate::scalar::Real;

/// Hilbert–Schmidt distance; an upper bound for the operator-norm distance
/// and much cheaper inside basis-pair loops.
pub(crate) fn hs_distance<T: Real>(x: &BlockMatrix<T>, y: &BlockMatrix<T>) -> f64 {
    (x - y).hs_norm().as_f64()
}

/// `residual / (1 + scale)`, compared against `eq_tol`.
pub(crate) fn relative(residual: f64, scale: f64) -> f64 {
    residual / (1.0 + scale)
}
