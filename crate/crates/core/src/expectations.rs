//! Linear maps `A → A` in the matrix-unit basis, the standard
//! conditional-expectation constructions, and the range ⊕ kernel split.

use crate::algebra::{distance, AlgebraSignature, BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::gelfand::SpaceMap;
use crate::linalg::{select_independent, ColumnSelection, Mat};
use crate::scalar::{Real, C};

/// How a map was constructed. Metadata only: the coordinate matrix is the
/// source of truth.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance<T: Real> {
    Pinching(Vec<BlockMatrix<T>>),
    GroupAverage(Vec<BlockMatrix<T>>),
    CentralProjection(BlockMatrix<T>),
    Corner(BlockMatrix<T>),
    Graph(BlockLinearMap<T>),
    FromSpaceMap(SpaceMap),
    ZeroDiagonal(usize),
    Antipodal(usize),
    Dense,
}

impl<T: Real> Provenance<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::Pinching(_) => "pinching",
            Provenance::GroupAverage(_) => "group_average",
            Provenance::CentralProjection(_) => "central",
            Provenance::Corner(_) => "corner",
            Provenance::Graph(_) => "graph",
            Provenance::FromSpaceMap(_) => "retraction",
            Provenance::ZeroDiagonal(_) => "zero_diagonal",
            Provenance::Antipodal(_) => "antipodal",
            Provenance::Dense => "dense",
        }
    }
}

/// Linear map between two (possibly different) block algebras.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLinearMap<T: Real> {
    domain: AlgebraSignature,
    codomain: AlgebraSignature,
    matrix: Mat<T>,
}

impl<T: Real> BlockLinearMap<T> {
    pub fn from_fn(
        domain: &AlgebraSignature,
        codomain: &AlgebraSignature,
        f: impl Fn(&BlockMatrix<T>) -> BlockMatrix<T>,
    ) -> Self {
        let mut matrix = Mat::zeros(codomain.dim(), domain.dim());
        for j in 0..domain.dim() {
            let img = f(&BlockMatrix::basis_element(domain, j));
            assert_eq!(img.signature(), codomain, "image outside codomain");
            matrix.set_column(j, &img.to_vector());
        }
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        }
    }

    pub fn from_matrix(
        domain: &AlgebraSignature,
        codomain: &AlgebraSignature,
        matrix: Mat<T>,
    ) -> Result<Self> {
        if matrix.rows() != codomain.dim() || matrix.cols() != domain.dim() {
            return Err(Error::Shape(format!(
                "map matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    pub fn domain(&self) -> &AlgebraSignature {
        &self.domain
    }

    pub fn codomain(&self) -> &AlgebraSignature {
        &self.codomain
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(x.signature(), &self.domain, "argument outside domain");
        BlockMatrix::from_vector(&self.codomain, &self.matrix.mul_vec(&x.to_vector()))
            .expect("codomain dimension")
    }
}

/// Linear endomorphism of `A`, stored as a `d × d` matrix on coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMap<T: Real> {
    signature: AlgebraSignature,
    matrix: Mat<T>,
    provenance: Provenance<T>,
}

impl<T: Real> OperatorMap<T> {
    /// Tabulates `f` on the matrix-unit basis.
    pub fn from_fn(
        signature: &AlgebraSignature,
        provenance: Provenance<T>,
        f: impl Fn(&BlockMatrix<T>) -> BlockMatrix<T>,
    ) -> Self {
        let d = signature.dim();
        let mut matrix = Mat::zeros(d, d);
        for j in 0..d {
            let img = f(&BlockMatrix::basis_element(signature, j));
            assert_eq!(img.signature(), signature, "image outside the algebra");
            matrix.set_column(j, &img.to_vector());
        }
        Self {
            signature: signature.clone(),
            matrix,
            provenance,
        }
    }

    pub fn from_matrix(signature: &AlgebraSignature, matrix: Mat<T>) -> Result<Self> {
        let d = signature.dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::Shape(format!(
                "map matrix is {}x{}, expected {d}x{d}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self {
            signature: signature.clone(),
            matrix,
            provenance: Provenance::Dense,
        })
    }

    pub fn identity(signature: &AlgebraSignature) -> Self {
        Self {
            signature: signature.clone(),
            matrix: Mat::identity(signature.dim()),
            provenance: Provenance::Dense,
        }
    }

    pub fn zero(signature: &AlgebraSignature) -> Self {
        let d = signature.dim();
        Self {
            signature: signature.clone(),
            matrix: Mat::zeros(d, d),
            provenance: Provenance::Dense,
        }
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance<T> {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance<T>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn apply(&self, x: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(x.signature(), &self.signature, "argument outside the algebra");
        BlockMatrix::from_vector(&self.signature, &self.matrix.mul_vec(&x.to_vector()))
            .expect("dimension preserved")
    }

    pub fn try_apply(&self, x: &BlockMatrix<T>) -> Result<BlockMatrix<T>> {
        if x.signature() != &self.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.blocks().to_vec(),
                right: x.signature().blocks().to_vec(),
            });
        }
        Ok(self.apply(x))
    }

    /// Image of the `j`-th basis element (a column of the matrix).
    pub fn apply_basis(&self, j: usize) -> BlockMatrix<T> {
        BlockMatrix::from_vector(&self.signature, &self.matrix.column(j)).expect("column length")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.blocks().to_vec(),
                right: other.signature.blocks().to_vec(),
            });
        }
        Ok(Self {
            signature: self.signature.clone(),
            matrix: &self.matrix * &other.matrix,
            provenance: Provenance::Dense,
        })
    }

    /// `‖E² − E‖₁` and the bound `eq_tol·(1 + ‖E‖₁)` it is compared to.
    pub fn idempotency_residual(&self, tol: &Tolerance) -> (f64, f64) {
        let sq = &self.matrix * &self.matrix;
        let residual = (&sq - &self.matrix).max_col_sum_norm().as_f64();
        (residual, tol.eq_bound(self.matrix.max_col_sum_norm().as_f64()))
    }

    pub fn is_idempotent(&self, tol: &Tolerance) -> bool {
        let (r, b) = self.idempotency_residual(tol);
        r <= b
    }

    /// Recomputes the matrix from the provenance formula, if there is one.
    pub fn rebuild(&self) -> Option<Self> {
        let sig = &self.signature;
        let prov = self.provenance.clone();
        let rebuilt = match &self.provenance {
            Provenance::Pinching(ps) => Self::from_fn(sig, prov, |x| pinch(ps, x)),
            Provenance::GroupAverage(us) => Self::from_fn(sig, prov, |x| average(us, x)),
            Provenance::CentralProjection(p) => Self::from_fn(sig, prov, |x| p * x),
            Provenance::Corner(e) => Self::from_fn(sig, prov, |x| &(e * x) * e),
            Provenance::Graph(phi) => graph_expectation(phi),
            Provenance::FromSpaceMap(tau) => crate::gelfand::expectation_from_retraction(tau).ok()?,
            Provenance::ZeroDiagonal(n) => zero_diagonal_projection(*n).ok()?,
            Provenance::Antipodal(n) => crate::gelfand::antipodal_average(*n).ok()?,
            Provenance::Dense => return None,
        };
        Some(rebuilt)
    }

    pub fn cast<U: Real>(&self) -> OperatorMap<U> {
        OperatorMap {
            signature: self.signature.clone(),
            matrix: self.matrix.cast(),
            provenance: Provenance::Dense,
        }
    }
}

fn pinch<T: Real>(ps: &[BlockMatrix<T>], x: &BlockMatrix<T>) -> BlockMatrix<T> {
    let mut acc = BlockMatrix::zeros(x.signature());
    for p in ps {
        acc = &acc + &(&(p * x) * p);
    }
    acc
}

fn average<T: Real>(us: &[BlockMatrix<T>], x: &BlockMatrix<T>) -> BlockMatrix<T> {
    let mut acc = BlockMatrix::zeros(x.signature());
    for u in us {
        acc = &acc + &(&(u * x) * &u.adjoint());
    }
    acc.scale_real(T::one() / T::from_usize(us.len()).expect("group size"))
}

fn check_signature<T: Real>(sig: &AlgebraSignature, x: &BlockMatrix<T>) -> Result<()> {
    if x.signature() != sig {
        return Err(Error::SignatureMismatch {
            left: sig.blocks().to_vec(),
            right: x.signature().blocks().to_vec(),
        });
    }
    Ok(())
}

fn check_projection<T: Real>(p: &BlockMatrix<T>, tol: &Tolerance) -> Result<()> {
    if p.is_projection(tol) {
        Ok(())
    } else {
        Err(Error::NotProjection {
            residual: p.projection_residual().as_f64(),
        })
    }
}

/// `x ↦ Σⱼ pⱼ x pⱼ` for mutually orthogonal projections summing to 1.
pub fn pinching<T: Real>(
    signature: &AlgebraSignature,
    projections: &[BlockMatrix<T>],
    tol: &Tolerance,
) -> Result<OperatorMap<T>> {
    if projections.is_empty() {
        return Err(Error::BadProjectionFamily("empty family".into()));
    }
    for p in projections {
        check_signature(signature, p)?;
        check_projection(p, tol)?;
    }
    for (j, p) in projections.iter().enumerate() {
        for (k, q) in projections.iter().enumerate().skip(j + 1) {
            let r = (p * q).operator_norm().as_f64();
            if r > tol.eq_bound(1.0) {
                return Err(Error::BadProjectionFamily(format!(
                    "p{j} p{k} has norm {r:.3e}"
                )));
            }
        }
    }
    let sum = projections
        .iter()
        .fold(BlockMatrix::zeros(signature), |acc, p| &acc + p);
    let r = distance(&sum, &BlockMatrix::identity(signature)).as_f64();
    if r > tol.eq_bound(projections.len() as f64) {
        return Err(Error::BadProjectionFamily(format!(
            "projections sum to 1 only up to {r:.3e}"
        )));
    }
    let ps = projections.to_vec();
    Ok(OperatorMap::from_fn(
        signature,
        Provenance::Pinching(ps.clone()),
        |x| pinch(&ps, x),
    ))
}

/// Pinching onto the block-diagonal part: the family of diagonal matrix units.
pub fn diagonal_pinching<T: Real>(signature: &AlgebraSignature) -> OperatorMap<T> {
    let mut ps = Vec::new();
    for (b, &n) in signature.blocks().iter().enumerate() {
        for k in 0..n {
            ps.push(BlockMatrix::matrix_unit(signature, b, k, k));
        }
    }
    pinching(signature, &ps, &Tolerance::default()).expect("diagonal units form a partition")
}

/// `E_p(x) = px` for a central projection `p`.
pub fn central_projection_expectation<T: Real>(
    p: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<OperatorMap<T>> {
    check_projection(p, tol)?;
    if !p.center_membership(tol) {
        return Err(Error::NotCentral {
            residual: p.commutator_residual().as_f64(),
        });
    }
    let pc = p.clone();
    Ok(OperatorMap::from_fn(
        p.signature(),
        Provenance::CentralProjection(p.clone()),
        |x| &pc * x,
    ))
}

/// `E_e(x) = exe`, a conditional expectation onto the corner `eAe`.
pub fn corner_compression<T: Real>(
    e: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<OperatorMap<T>> {
    check_projection(e, tol)?;
    let ec = e.clone();
    Ok(OperatorMap::from_fn(
        e.signature(),
        Provenance::Corner(e.clone()),
        |x| &(&ec * x) * &ec,
    ))
}

/// `E(x, y) = (x, φx)` on `A ⊕ B`, projecting onto the graph of `φ: A → B`.
pub fn graph_expectation<T: Real>(phi: &BlockLinearMap<T>) -> OperatorMap<T> {
    let head = phi.domain().num_blocks();
    let sum = phi.domain().direct_sum(phi.codomain());
    OperatorMap::from_fn(&sum, Provenance::Graph(phi.clone()), |xy| {
        let (x, _) = xy.split_at(head);
        let fx = phi.apply(&x);
        x.direct_sum(&fx)
    })
}

fn unitary_residual<T: Real>(u: &BlockMatrix<T>) -> f64 {
    let one = BlockMatrix::identity(u.signature());
    let a = distance(&(&u.adjoint() * u), &one);
    let b = distance(&(u * &u.adjoint()), &one);
    a.max(b).as_f64()
}

/// `E(x) = |G|⁻¹ Σ_g u_g x u_g*`.
pub fn group_average<T: Real>(
    signature: &AlgebraSignature,
    unitaries: &[BlockMatrix<T>],
    tol: &Tolerance,
) -> Result<OperatorMap<T>> {
    if unitaries.is_empty() {
        return Err(Error::InvalidSize("group average needs at least one unitary".into()));
    }
    for u in unitaries {
        check_signature(signature, u)?;
        let r = unitary_residual(u);
        if r > tol.eq_bound(1.0) {
            return Err(Error::NotUnitary { residual: r });
        }
    }
    let us = unitaries.to_vec();
    Ok(OperatorMap::from_fn(
        signature,
        Provenance::GroupAverage(us.clone()),
        |x| average(&us, x),
    ))
}

/// Whether every product `u_g u_h` equals some `u_k` up to a global phase.
/// This is what makes a group average idempotent.
pub fn closed_under_products_mod_phase<T: Real>(
    unitaries: &[BlockMatrix<T>],
    tol: &Tolerance,
) -> bool {
    let Some(first) = unitaries.first() else {
        return true;
    };
    let n = T::from_usize(first.signature().total_size()).expect("size");
    // |tr(u* w)| = N exactly when u* w is a scalar multiple of 1
    unitaries.iter().all(|a| {
        unitaries.iter().all(|b| {
            let w = a * b;
            unitaries.iter().any(|u| {
                let overlap = (&u.adjoint() * &w)
                    .blocks()
                    .iter()
                    .fold(C::new(T::zero(), T::zero()), |acc, m| acc + m.trace());
                (overlap.norm() - n).abs().as_f64() <= tol.eq_bound(n.as_f64())
            })
        })
    })
}

/// `x ↦ x − diag(x)` on `M_n`: a norm-one idempotent whose range is not a
/// subalgebra.
pub fn zero_diagonal_projection<T: Real>(n: usize) -> Result<OperatorMap<T>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("zero-diagonal projection needs n >= 2, got {n}")));
    }
    let sig = AlgebraSignature::new(vec![n])?;
    Ok(OperatorMap::from_fn(&sig, Provenance::ZeroDiagonal(n), |x| {
        let m = x.block(0);
        let off = Mat::from_fn(n, n, |r, c| if r == c { C::new(T::zero(), T::zero()) } else { m[(r, c)] });
        BlockMatrix::from_blocks(x.signature(), vec![off]).expect("shape")
    }))
}

/// `A = S ⊕ M`: bases of the range and kernel of an idempotent map.
///
/// Range basis elements are images `E(bⱼ)` of basis elements; kernel basis
/// elements are `bⱼ − E(bⱼ)`. Both are chosen by pivoted Gram–Schmidt, so for
/// maps built from matrix units they come out as (multiples of) matrix units.
#[derive(Clone, Debug)]
pub struct Splitting<T: Real> {
    pub range_basis: Vec<BlockMatrix<T>>,
    pub kernel_basis: Vec<BlockMatrix<T>>,
    range_span: ColumnSelection<T>,
    kernel_span: ColumnSelection<T>,
    /// Largest distance from `y*` to the kernel span over kernel basis `y`.
    pub kernel_star_residual: f64,
    /// Ratio of the largest column norm to the smallest accepted pivot.
    pub condition: f64,
}

impl<T: Real> Splitting<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.range_basis.len(), self.kernel_basis.len())
    }

    /// Hilbert–Schmidt distance from `x` to the range.
    pub fn range_residual(&self, x: &BlockMatrix<T>) -> T {
        self.range_span.residual(&x.to_vector())
    }

    /// Hilbert–Schmidt distance from `x` to the kernel.
    pub fn kernel_residual(&self, x: &BlockMatrix<T>) -> T {
        self.kernel_span.residual(&x.to_vector())
    }

    pub fn kernel_is_star_closed(&self, tol: &Tolerance) -> bool {
        self.kernel_star_residual <= tol.eq_bound(1.0)
    }
}

/// Columns of `E` selected by pivoted Gram–Schmidt: an orthonormal basis of
/// the range of any linear map, idempotent or not.
pub(crate) fn range_selection<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> ColumnSelection<T> {
    let cols: Vec<_> = (0..map.signature.dim()).map(|j| map.matrix.column(j)).collect();
    select_independent(&cols, T::lit(tol.rank_tol))
}

pub fn split_along<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Result<Splitting<T>> {
    let (residual, bound) = map.idempotency_residual(tol);
    if residual > bound {
        return Err(Error::NotIdempotent { residual, bound });
    }
    let sig = map.signature();
    let d = sig.dim();
    let complement = &Mat::identity(d) - map.matrix();
    let kcols: Vec<_> = (0..d).map(|j| complement.column(j)).collect();
    let range_span = range_selection(map, tol);
    let kernel_span = select_independent(&kcols, T::lit(tol.rank_tol));

    let scale = range_span.scale.max(kernel_span.scale).as_f64().max(1.0);
    let smallest = range_span
        .pivots
        .iter()
        .chain(&kernel_span.pivots)
        .fold(f64::INFINITY, |a, p| a.min(p.as_f64()));
    let condition = if smallest.is_finite() { scale / smallest } else { 1.0 };

    let (r, k) = (range_span.rank(), kernel_span.rank());
    if r + k != d {
        return Err(Error::IllConditioned {
            range: r,
            kernel: k,
            dim: d,
            condition,
        });
    }

    let range_basis: Vec<BlockMatrix<T>> = range_span
        .picked
        .iter()
        .map(|&j| map.apply_basis(j))
        .collect();
    let kernel_basis: Vec<BlockMatrix<T>> = kernel_span
        .picked
        .iter()
        .map(|&j| BlockMatrix::from_vector(sig, &kcols[j]).expect("length"))
        .collect();

    for s in &range_basis {
        let err = distance(&map.apply(s), s).as_f64();
        if err > tol.eq_bound(s.operator_norm().as_f64()) {
            return Err(Error::IllConditioned {
                range: r,
                kernel: k,
                dim: d,
                condition,
            });
        }
    }
    for y in &kernel_basis {
        let err = map.apply(y).operator_norm().as_f64();
        if err > tol.eq_bound(y.operator_norm().as_f64()) {
            return Err(Error::IllConditioned {
                range: r,
                kernel: k,
                dim: d,
                condition,
            });
        }
    }

    let kernel_star_residual = kernel_basis
        .iter()
        .map(|y| {
            let ys = y.adjoint();
            kernel_span.residual(&ys.to_vector()).as_f64() / ys.hs_norm().as_f64().max(1.0)
        })
        .fold(0.0, f64::max);

    Ok(Splitting {
        range_basis,
        kernel_basis,
        range_span,
        kernel_span,
        kernel_star_residual,
        condition,
    })
}
