use crate::algebra::{distance, BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::corner_compression;
use crate::linalg::{select_independent, Mat};
use crate::sampling::Sampler;
use crate::scalar::{Real, C};

use super::certificate::{Certificate, Property, Reason, Witness};
use super::homomorphic::homomorphic_certificate;

/// Number of random elements tried by the norm search in [`central_test`].
const NORM_SEARCH_SAMPLES: usize = 128;

fn require_projection<T: Real>(p: &BlockMatrix<T>, tol: &Tolerance) -> Result<()> {
    if p.is_projection(tol) {
        Ok(())
    } else {
        Err(Error::NotProjection {
            residual: p.projection_residual().as_f64(),
        })
    }
}

/// Orthonormal columns spanning the range of a projection block.
fn frame<T: Real>(m: &Mat<T>, tol: &Tolerance) -> Vec<Vec<C<T>>> {
    let cols: Vec<_> = (0..m.cols()).map(|j| m.column(j)).collect();
    select_independent(&cols, T::lit(tol.rank_tol)).orthonormal
}

/// Outcome of comparing two projections `e ≾ f`.
#[derive(Clone, Debug)]
pub struct Subequivalence<T: Real> {
    pub holds: bool,
    pub ranks_e: Vec<usize>,
    pub ranks_f: Vec<usize>,
    /// `u` with `uu* = e` and `u*u ≤ f`, present when `holds`.
    pub partial_isometry: Option<BlockMatrix<T>>,
    /// `‖uu* − e‖`.
    pub range_residual: f64,
    /// `max(‖f·u*u − u*u‖, projection residual of u*u)`.
    pub source_residual: f64,
}

impl<T: Real> Subequivalence<T> {
    pub fn verified(&self, tol: &Tolerance) -> bool {
        self.holds
            && self.range_residual <= tol.eq_bound(1.0)
            && self.source_residual <= tol.eq_bound(1.0)
    }
}

/// Decides `e ≾ f` by comparing ranks block by block and, when it holds,
/// builds `u = Σ_k ε_k φ_k*` from orthonormal frames `ε` of `e` and `φ` of `f`.
pub fn subequivalence<T: Real>(
    e: &BlockMatrix<T>,
    f: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<Subequivalence<T>> {
    if e.signature() != f.signature() {
        return Err(Error::SignatureMismatch {
            left: e.signature().blocks().to_vec(),
            right: f.signature().blocks().to_vec(),
        });
    }
    require_projection(e, tol)?;
    require_projection(f, tol)?;
    let sig = e.signature();
    let mut ranks_e = Vec::new();
    let mut ranks_f = Vec::new();
    let mut blocks = Vec::new();
    let mut holds = true;
    for (b, &n) in sig.blocks().iter().enumerate() {
        let fe = frame(e.block(b), tol);
        let ff = frame(f.block(b), tol);
        ranks_e.push(fe.len());
        ranks_f.push(ff.len());
        if fe.len() > ff.len() {
            holds = false;
            continue;
        }
        let u = Mat::from_fn(n, n, |r, c| {
            fe.iter()
                .zip(&ff)
                .fold(C::new(T::zero(), T::zero()), |acc, (x, y)| acc + x[r] * y[c].conj())
        });
        blocks.push(u);
    }
    if !holds {
        return Ok(Subequivalence {
            holds,
            ranks_e,
            ranks_f,
            partial_isometry: None,
            range_residual: f64::INFINITY,
            source_residual: f64::INFINITY,
        });
    }
    let u = BlockMatrix::from_blocks(sig, blocks)?;
    let uu = &u * &u.adjoint();
    let src = &u.adjoint() * &u;
    let range_residual = distance(&uu, e).as_f64();
    let source_residual = distance(&(f * &src), &src)
        .max(src.projection_residual())
        .as_f64();
    Ok(Subequivalence {
        holds,
        ranks_e,
        ranks_f,
        partial_isometry: Some(u),
        range_residual,
        source_residual,
    })
}

/// Central `z` with `ze ≾ z(1−e)` and `(1−z)(1−e) ≾ (1−z)e`.
#[derive(Clone, Debug)]
pub struct ComparabilitySplit<T: Real> {
    pub z: BlockMatrix<T>,
    pub lower: Subequivalence<T>,
    pub upper: Subequivalence<T>,
}

impl<T: Real> ComparabilitySplit<T> {
    pub fn verified(&self, tol: &Tolerance) -> bool {
        self.lower.verified(tol) && self.upper.verified(tol)
    }
}

/// Per block, `z_b = 1` when `rank(e_b) ≤ n_b − rank(e_b)` and `0` otherwise.
pub fn comparability_split<T: Real>(e: &BlockMatrix<T>, tol: &Tolerance) -> Result<ComparabilitySplit<T>> {
    require_projection(e, tol)?;
    let sig = e.signature();
    let scalars: Vec<C<T>> = sig
        .blocks()
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let r = frame(e.block(b), tol).len();
            let v = if r <= n - r { T::one() } else { T::zero() };
            C::new(v, T::zero())
        })
        .collect();
    let z = BlockMatrix::block_scalars(sig, &scalars)?;
    let one = BlockMatrix::identity(sig);
    let not_e = &one - e;
    let not_z = &one - &z;
    let lower = subequivalence(&(&z * e), &(&z * &not_e), tol)?;
    let upper = subequivalence(&(&not_z * &not_e), &(&not_z * e), tol)?;
    Ok(ComparabilitySplit { z, lower, upper })
}

/// Decides whether `e` is central three ways: direct commutation, the corner
/// map `x ↦ exe` being homomorphic, and a search for `x` with
/// `‖exe‖ < ‖ex‖`. The verdict follows commutation; the other two must agree.
pub fn central_test<T: Real>(e: &BlockMatrix<T>, tol: &Tolerance, seed: u64) -> Result<Certificate> {
    require_projection(e, tol)?;
    let sig = e.signature();
    let mut cert = Certificate::new(Property::Central, tol).with_seed(seed);

    let member = cert.check(
        "center_membership",
        e.commutator_residual().as_f64(),
        tol.eq_bound(e.operator_norm().as_f64()),
    );

    let corner = corner_compression(e, tol)?;
    let hom = homomorphic_certificate(&corner, tol);
    let corner_hom = hom.holds();
    cert.note(format!(
        "corner map homomorphic: {corner_hom}{}",
        hom.reason.map(|r| format!(" ({r:?})")).unwrap_or_default()
    ));

    let mut candidates = BlockMatrix::<T>::basis(sig);
    let mut sampler = Sampler::new(seed);
    for _ in 0..NORM_SEARCH_SAMPLES {
        candidates.push(sampler.unit_element(sig));
    }
    let mut best: Option<(f64, f64, f64, usize)> = None;
    for (i, x) in candidates.iter().enumerate() {
        let ex = (e * x).operator_norm().as_f64();
        let exe = (&(e * x) * e).operator_norm().as_f64();
        let g = ex - exe;
        if best.map_or(true, |(bg, ..)| g > bg) {
            best = Some((g, ex, exe, i));
        }
    }
    let (gap, ex, exe, i) = best.expect("nonempty candidates");
    let no_witness = cert.check("norm_search", gap, tol.eq_bound(ex));

    if member != corner_hom || member != no_witness {
        cert.note(format!(
            "deciders disagree: center_membership={member}, corner_homomorphic={corner_hom}, no_norm_witness={no_witness}"
        ));
        cert.fail(Reason::DecidersDisagree, None);
    } else {
        cert.note("center membership, corner homomorphism and norm search agree");
    }
    if !member {
        let w = if no_witness {
            None
        } else {
            Some(
                Witness::new()
                    .element("x", &candidates[i])
                    .value("norm_ex", ex)
                    .value("norm_exe", exe)
                    .value("gap", gap),
            )
        };
        cert.fail(Reason::NotCentral, w);
    }
    Ok(cert)
}
