use crate::algebra::{AlgebraSignature, BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::{split_along, OperatorMap, Splitting};
use crate::scalar::{Real, C};

use super::certificate::{Certificate, Property, Reason, Witness};
use super::{hs_distance, relative};

/// Kadison–Schwarz defect `E(x*x) − E(x)*E(x)`.
pub fn ks_defect<T: Real>(map: &OperatorMap<T>, x: &BlockMatrix<T>) -> BlockMatrix<T> {
    let ex = map.apply(x);
    &map.apply(&(&x.adjoint() * x)) - &(&ex.adjoint() * &ex)
}

/// `‖E(x*x)‖ − ‖E(x)‖²`; zero for every `x` exactly when `E` is homomorphic.
pub fn norm_gap<T: Real>(map: &OperatorMap<T>, x: &BlockMatrix<T>) -> f64 {
    let ex = map.apply(x).operator_norm().as_f64();
    map.apply(&(&x.adjoint() * x)).operator_norm().as_f64() - ex * ex
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzSample {
    pub defect_min_eigenvalue: f64,
    pub gap: f64,
}

/// Evaluates the defect and the gap at `x`, returning an error when the
/// defect is not positive or the gap is negative beyond tolerance. Either
/// means the map is not a conditional expectation or the arithmetic broke.
pub fn kadison_schwarz<T: Real>(
    map: &OperatorMap<T>,
    x: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<SchwarzSample> {
    let defect = ks_defect(map, x);
    let sample = SchwarzSample {
        defect_min_eigenvalue: defect.min_eigenvalue().as_f64(),
        gap: norm_gap(map, x),
    };
    let scale = x.operator_norm().as_f64().powi(2);
    let herm = defect.self_adjoint_residual().as_f64();
    if sample.defect_min_eigenvalue < -tol.psd_bound(scale)
        || herm > tol.eq_bound(scale)
        || sample.gap < -tol.eq_bound(scale)
    {
        return Err(Error::SchwarzViolation {
            min_eigenvalue: sample.defect_min_eigenvalue,
            gap: sample.gap,
        });
    }
    Ok(sample)
}

/// Whether `a` lies in the multiplicative domain: equality in the Schwarz
/// inequality on both sides.
pub fn multiplicative_domain_member<T: Real>(
    map: &OperatorMap<T>,
    a: &BlockMatrix<T>,
    tol: &Tolerance,
) -> bool {
    let ea = map.apply(a);
    let scale = a.operator_norm().as_f64().powi(2);
    let left = &map.apply(&(&a.adjoint() * a)) - &(&ea.adjoint() * &ea);
    let right = &map.apply(&(a * &a.adjoint())) - &(&ea * &ea.adjoint());
    left.operator_norm().as_f64() <= tol.eq_bound(scale)
        && right.operator_norm().as_f64() <= tol.eq_bound(scale)
}

/// `G_{jk} = E(y_j* y_k)` over a kernel basis `{y_j}`.
#[derive(Clone, Debug)]
pub struct GramTensor<T: Real> {
    pub kernel_basis: Vec<BlockMatrix<T>>,
    entries: Vec<BlockMatrix<T>>,
}

impl<T: Real> GramTensor<T> {
    pub fn new(map: &OperatorMap<T>, kernel_basis: &[BlockMatrix<T>]) -> Self {
        let m = kernel_basis.len();
        let mut entries = Vec::with_capacity(m * m);
        for yj in kernel_basis {
            let yjs = yj.adjoint();
            for yk in kernel_basis {
                entries.push(map.apply(&(&yjs * yk)));
            }
        }
        Self {
            kernel_basis: kernel_basis.to_vec(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.kernel_basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel_basis.is_empty()
    }

    pub fn get(&self, j: usize, k: usize) -> &BlockMatrix<T> {
        &self.entries[j * self.len() + k]
    }

    /// Largest `‖G_{jk}‖ / (1 + ‖y_j‖‖y_k‖)` and where it occurs.
    pub fn max_relative(&self) -> (f64, usize, usize) {
        let norms: Vec<f64> = self.kernel_basis.iter().map(|y| y.operator_norm().as_f64()).collect();
        let mut best = (0.0, 0, 0);
        for j in 0..self.len() {
            for k in 0..self.len() {
                let r = relative(self.get(j, k).operator_norm().as_f64(), norms[j] * norms[k]);
                if r > best.0 {
                    best = (r, j, k);
                }
            }
        }
        best
    }

    pub fn is_zero(&self, tol: &Tolerance) -> bool {
        self.max_relative().0 <= tol.eq_tol
    }

    /// Most negative eigenvalue among the diagonal entries, clamped at zero.
    pub fn diagonal_negativity(&self) -> f64 {
        (0..self.len())
            .map(|j| (-self.get(j, j).min_eigenvalue().as_f64()).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Largest `‖G_{kj} − G_{jk}*‖`.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            for k in 0..self.len() {
                worst = worst.max(hs_distance(self.get(k, j), &self.get(j, k).adjoint()));
            }
        }
        worst
    }
}

/// A kernel element refuting `‖E(x)‖² = ‖E(x*x)‖`.
#[derive(Clone, Debug)]
pub struct NormGapWitness<T: Real> {
    pub x: BlockMatrix<T>,
    pub norm_ex: f64,
    pub norm_exx: f64,
    pub gap: f64,
}

impl<T: Real> NormGapWitness<T> {
    pub fn evaluate(map: &OperatorMap<T>, x: BlockMatrix<T>) -> Self {
        let norm_ex = map.apply(&x).operator_norm().as_f64();
        let norm_exx = map.apply(&(&x.adjoint() * &x)).operator_norm().as_f64();
        Self {
            x,
            norm_ex,
            norm_exx,
            gap: norm_exx - norm_ex * norm_ex,
        }
    }

    pub fn to_witness(&self) -> Witness {
        Witness::new()
            .element("x", &self.x)
            .value("norm_ex", self.norm_ex)
            .value("norm_exx", self.norm_exx)
            .value("gap", self.gap)
    }
}

/// Builds a kernel element with a positive norm gap from a nonzero Gram
/// tensor. A diagonal entry is used when it is at least half the largest
/// entry; otherwise `y_k + θ y_j` for `θ ∈ {1, i, −1, −i}`, one of which
/// satisfies `‖E(x*x)‖ ≥ ‖G_{jk}‖` by polarization.
pub fn witness_norm_gap<T: Real>(
    map: &OperatorMap<T>,
    gram: &GramTensor<T>,
    tol: &Tolerance,
) -> Result<NormGapWitness<T>> {
    let (max_rel, j, k) = gram.max_relative();
    if gram.is_empty() || max_rel <= tol.eq_tol {
        return Err(Error::ZeroGram);
    }
    let max = gram.get(j, k).operator_norm().as_f64();
    let (dmax, dj) = (0..gram.len())
        .map(|i| (gram.get(i, i).operator_norm().as_f64(), i))
        .fold((-1.0, 0), |b, c| if c.0 > b.0 { c } else { b });
    if dmax >= max / 2.0 {
        return Ok(NormGapWitness::evaluate(map, gram.kernel_basis[dj].clone()));
    }
    let thetas = [
        C::new(T::one(), T::zero()),
        C::new(T::zero(), T::one()),
        C::new(-T::one(), T::zero()),
        C::new(T::zero(), -T::one()),
    ];
    let best = thetas
        .iter()
        .map(|&theta| {
            let x = &gram.kernel_basis[k] + &gram.kernel_basis[j].scale(theta);
            NormGapWitness::evaluate(map, x)
        })
        .fold(None::<NormGapWitness<T>>, |b, w| match b {
            Some(b) if b.norm_exx >= w.norm_exx => Some(b),
            _ => Some(w),
        })
        .expect("four candidates");
    Ok(best)
}

/// Re-evaluates the gap of the witness `x` recorded in a certificate.
pub fn recheck_norm_gap<T: Real>(
    map: &OperatorMap<T>,
    witness: &Witness,
    signature: &AlgebraSignature,
) -> Option<f64> {
    let x = witness.get::<T>("x", signature)?.ok()?;
    Some(norm_gap(map, &x))
}

/// Largest relative `‖E(bᵢbⱼ) − E(bᵢ)E(bⱼ)‖` over basis pairs, with the pair.
pub fn basis_multiplicativity<T: Real>(map: &OperatorMap<T>) -> (f64, usize, usize) {
    let sig = map.signature();
    let d = sig.dim();
    let basis = BlockMatrix::<T>::basis(sig);
    let images: Vec<BlockMatrix<T>> = (0..d).map(|j| map.apply_basis(j)).collect();
    let norms: Vec<f64> = images.iter().map(|e| e.hs_norm().as_f64()).collect();
    let mut worst = (0.0, 0, 0);
    for i in 0..d {
        for j in 0..d {
            let lhs = map.apply(&(&basis[i] * &basis[j]));
            let rhs = &images[i] * &images[j];
            let r = relative(hs_distance(&lhs, &rhs), norms[i] * norms[j]);
            if r > worst.0 {
                worst = (r, i, j);
            }
        }
    }
    worst
}

/// Largest relative distance from `bᵢ y` or `y bᵢ` to the kernel span, over
/// kernel basis `y` and matrix units `bᵢ`.
pub fn kernel_ideal_residual<T: Real>(split: &Splitting<T>, signature: &AlgebraSignature) -> f64 {
    let basis = BlockMatrix::<T>::basis(signature);
    let mut worst = 0.0f64;
    for y in &split.kernel_basis {
        let ny = y.hs_norm().as_f64();
        for b in &basis {
            for p in [b * y, y * b] {
                worst = worst.max(relative(split.kernel_residual(&p).as_f64(), ny));
            }
        }
    }
    worst
}

/// Decides whether `E(xy) = E(x)E(y)` for all `x, y`.
///
/// Three independent deciders run: the Gram tensor over the kernel is zero,
/// `E` is multiplicative on basis pairs, and the kernel is a two-sided ideal.
/// The verdict is `Holds` only when all three pass; a split decision fails
/// with [`Reason::DecidersDisagree`].
pub fn homomorphic_certificate<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Certificate {
    let mut cert = Certificate::new(Property::Homomorphic, tol);
    let sig = map.signature();
    let split = match split_along(map, tol) {
        Ok(s) => s,
        Err(e) => {
            cert.note(format!("range/kernel split unavailable: {e}"));
            cert.fail(Reason::NotIdempotent, None);
            return cert;
        }
    };
    let (r, k) = split.dims();
    cert.note(format!("range dimension {r}, kernel dimension {k}"));
    cert.check("kernel_star_closed", split.kernel_star_residual, tol.eq_bound(1.0));

    let gram = GramTensor::new(map, &split.kernel_basis);
    cert.check("gram_diagonal_positive", gram.diagonal_negativity(), tol.psd_tol);
    cert.check("gram_hermitian", gram.hermitian_residual(), tol.eq_bound(1.0));

    let (g_res, _, _) = gram.max_relative();
    let gram_zero = cert.check("gram_zero", g_res, tol.eq_tol);
    let (m_res, _, _) = basis_multiplicativity(map);
    let mult = cert.check("basis_multiplicativity", m_res, tol.eq_tol);
    let ideal = cert.check("kernel_ideal", kernel_ideal_residual(&split, sig), tol.eq_tol);

    if gram_zero && mult && ideal {
        return cert;
    }
    if gram_zero != mult || mult != ideal {
        cert.note(format!(
            "deciders disagree: gram_zero={gram_zero}, basis_multiplicativity={mult}, kernel_ideal={ideal}"
        ));
        let w = witness_norm_gap(map, &gram, tol).ok().map(|w| w.to_witness());
        cert.fail(Reason::DecidersDisagree, w);
        return cert;
    }
    match witness_norm_gap(map, &gram, tol) {
        Ok(w) => cert.fail(Reason::GramNonzero, Some(w.to_witness())),
        Err(e) => {
            cert.note(format!("no witness: {e}"));
            cert.fail(Reason::GramNonzero, None);
        }
    }
    cert
}
