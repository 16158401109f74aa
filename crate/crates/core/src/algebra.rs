//! Elements of a finite-dimensional C*-algebra `A = ⊕ᵢ M_{nᵢ}(ℂ)`.
//!
//! Coordinates are taken in the matrix-unit basis `e^{(b)}_{kl}`, ordered
//! lexicographically by `(block, row, col)`. In these coordinates the
//! Euclidean inner product is the Hilbert–Schmidt inner product `Σ_b tr(x_b* y_b)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{c, czero, Real, C};

/// Block dimensions `(n₁, …, n_B)` of `⊕ M_{nᵢ}(ℂ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AlgebraSignature {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl AlgebraSignature {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSignature("no blocks".into()));
        }
        if let Some(pos) = blocks.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSignature(format!("block {pos} has size 0")));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for &n in &blocks {
            offsets.push(dim);
            dim += n * n;
        }
        Ok(Self {
            blocks,
            offsets,
            dim,
        })
    }

    /// `ℂⁿ`, the algebra of functions on `n` points.
    pub fn functions(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self, b: usize) -> usize {
        self.blocks[b]
    }

    /// Vector-space dimension `d = Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N = Σ nᵢ`, the size of the block-diagonal representation.
    pub fn total_size(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    pub fn block_offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    /// Coordinate index of the matrix unit `e^{(b)}_{rc}`.
    pub fn index(&self, b: usize, r: usize, c: usize) -> usize {
        self.offsets[b] + r * self.blocks[b] + c
    }

    /// Inverse of [`index`](Self::index).
    pub fn unit(&self, i: usize) -> (usize, usize, usize) {
        assert!(i < self.dim, "basis index out of range");
        // offsets are strictly increasing since every block is non-empty
        let b = match self.offsets.binary_search(&i) {
            Ok(b) => b,
            Err(b) => b - 1,
        };
        let local = i - self.offsets[b];
        let n = self.blocks[b];
        (b, local / n, local % n)
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        Self::new(blocks).expect("direct sum of valid signatures")
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SignatureMismatch {
                left: self.blocks.clone(),
                right: other.blocks.clone(),
            })
        }
    }
}

impl TryFrom<Vec<usize>> for AlgebraSignature {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AlgebraSignature> for Vec<usize> {
    fn from(s: AlgebraSignature) -> Self {
        s.blocks
    }
}

impl fmt::Display for AlgebraSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|&n| if n == 1 { "C".to_string() } else { format!("M{n}") })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Numerical slack for the exact identities being checked.
///
/// `eq_tol` is relative: two elements are equal when their distance is at
/// most `eq_tol * (1 + scale)` for the scale of the operands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub eq_tol: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            psd_tol: 1e-8,
            rank_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(eq_tol: f64, psd_tol: f64, rank_tol: f64) -> Result<Self> {
        for (name, v) in [("eq_tol", eq_tol), ("psd_tol", psd_tol), ("rank_tol", rank_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parse(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(Self {
            eq_tol,
            psd_tol,
            rank_tol,
        })
    }

    /// Profile suited to `f32` arithmetic.
    pub fn single_precision() -> Self {
        Self {
            eq_tol: 1e-4,
            psd_tol: 1e-4,
            rank_tol: 1e-4,
        }
    }

    /// Named profiles: `default`, `strict`, `loose`, `single`.
    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "strict" => Some(Self {
                eq_tol: 1e-11,
                psd_tol: 1e-10,
                rank_tol: 1e-11,
            }),
            "loose" => Some(Self {
                eq_tol: 1e-6,
                psd_tol: 1e-6,
                rank_tol: 1e-7,
            }),
            "single" => Some(Self::single_precision()),
            _ => None,
        }
    }

    #[inline]
    pub fn eq_bound(&self, scale: f64) -> f64 {
        self.eq_tol * (1.0 + scale)
    }

    #[inline]
    pub fn psd_bound(&self, scale: f64) -> f64 {
        self.psd_tol * scale.max(1.0)
    }
}

/// Serialized element: blocks → rows → `[re, im]` entries.
pub type ElementRepr = Vec<Vec<Vec<[f64; 2]>>>;

/// An element of `⊕ M_{nᵢ}(ℂ)`, stored as one dense matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix<T: Real> {
    signature: AlgebraSignature,
    blocks: Vec<Mat<T>>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn zeros(signature: &AlgebraSignature) -> Self {
        let blocks = signature.blocks.iter().map(|&n| Mat::zeros(n, n)).collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    pub fn identity(signature: &AlgebraSignature) -> Self {
        let blocks = signature.blocks.iter().map(|&n| Mat::identity(n)).collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    /// The matrix unit `e^{(b)}_{rc}`.
    pub fn matrix_unit(signature: &AlgebraSignature, b: usize, r: usize, col: usize) -> Self {
        let mut x = Self::zeros(signature);
        x.blocks[b][(r, col)] = c(1.0, 0.0);
        x
    }

    /// The `i`-th basis element in coordinate order.
    pub fn basis_element(signature: &AlgebraSignature, i: usize) -> Self {
        let (b, r, col) = signature.unit(i);
        Self::matrix_unit(signature, b, r, col)
    }

    pub fn basis(signature: &AlgebraSignature) -> Vec<Self> {
        (0..signature.dim())
            .map(|i| Self::basis_element(signature, i))
            .collect()
    }

    /// Central element with block `b` equal to `scalars[b]·I`.
    pub fn block_scalars(signature: &AlgebraSignature, scalars: &[C<T>]) -> Result<Self> {
        if scalars.len() != signature.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} block scalars, got {}",
                signature.num_blocks(),
                scalars.len()
            )));
        }
        let blocks = signature
            .blocks
            .iter()
            .zip(scalars)
            .map(|(&n, &s)| Mat::identity(n).scale(s))
            .collect();
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }

    pub fn from_blocks(signature: &AlgebraSignature, blocks: Vec<Mat<T>>) -> Result<Self> {
        if blocks.len() != signature.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                signature.num_blocks(),
                blocks.len()
            )));
        }
        for (b, (m, &n)) in blocks.iter().zip(&signature.blocks).enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Shape(format!(
                    "block {b} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }

    pub fn from_vector(signature: &AlgebraSignature, v: &[C<T>]) -> Result<Self> {
        if v.len() != signature.dim() {
            return Err(Error::Shape(format!(
                "coordinate vector has length {}, expected {}",
                v.len(),
                signature.dim()
            )));
        }
        let blocks = signature
            .blocks
            .iter()
            .zip(&signature.offsets)
            .map(|(&n, &off)| {
                Mat::from_row_major(n, n, v[off..off + n * n].to_vec()).expect("block length")
            })
            .collect();
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }

    pub fn to_vector(&self) -> Vec<C<T>> {
        let mut v = Vec::with_capacity(self.signature.dim());
        for m in &self.blocks {
            v.extend_from_slice(m.as_slice());
        }
        v
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn blocks(&self) -> &[Mat<T>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &Mat<T> {
        &self.blocks[b]
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.signature.ensure_same(&other.signature)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(Mat::adjoint).collect(),
        }
    }

    /// `x·y = ½(xy + yx)`.
    pub fn jordan_product(&self, other: &Self) -> Result<Self> {
        self.signature.ensure_same(&other.signature)?;
        let xy = self.mul_unchecked(other);
        let yx = other.mul_unchecked(self);
        Ok((&xy + &yx).scale_real(T::lit(0.5)))
    }

    /// `{xyz} = ½(xy*z + zy*x)`.
    pub fn triple_product(&self, y: &Self, z: &Self) -> Result<Self> {
        self.signature.ensure_same(&y.signature)?;
        self.signature.ensure_same(&z.signature)?;
        let ys = y.adjoint();
        let a = self.mul_unchecked(&ys).mul_unchecked(z);
        let b = z.mul_unchecked(&ys).mul_unchecked(self);
        Ok((&a + &b).scale_real(T::lit(0.5)))
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(|m| m.scale(s)).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(|m| m.scale_real(s)).collect(),
        }
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn operator_norm(&self) -> T {
        self.blocks
            .iter()
            .map(Mat::spectral_norm)
            .fold(T::zero(), T::max)
    }

    /// Euclidean norm of the coordinate vector (Hilbert–Schmidt norm).
    pub fn hs_norm(&self) -> T {
        self.blocks
            .iter()
            .map(|m| {
                let f = m.frobenius_norm();
                f * f
            })
            .sum::<T>()
            .sqrt()
    }

    /// `‖x − x*‖`.
    pub fn self_adjoint_residual(&self) -> T {
        (self - &self.adjoint()).operator_norm()
    }

    /// Smallest eigenvalue of the Hermitian part, over all blocks.
    pub fn min_eigenvalue(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|m| m.hermitian_eigenvalues().into_iter().take(1))
            .fold(T::infinity(), T::min)
    }

    pub fn is_positive(&self, tol: &Tolerance) -> bool {
        let norm = self.operator_norm().as_f64();
        self.self_adjoint_residual().as_f64() <= tol.eq_bound(norm)
            && self.min_eigenvalue().as_f64() >= -tol.psd_bound(norm)
    }

    /// `max(‖x − x*‖, ‖x² − x‖)`.
    pub fn projection_residual(&self) -> T {
        let sq = self.mul_unchecked(self);
        self.self_adjoint_residual()
            .max((&sq - self).operator_norm())
    }

    pub fn is_projection(&self, tol: &Tolerance) -> bool {
        self.projection_residual().as_f64() <= tol.eq_bound(self.operator_norm().as_f64())
    }

    /// Per-block rank: singular values above `rank_tol·‖x‖`.
    pub fn rank_of(&self, tol: &Tolerance) -> Vec<usize> {
        let cutoff = T::lit(tol.rank_tol) * self.operator_norm();
        self.blocks
            .iter()
            .map(|m| {
                m.singular_values()
                    .into_iter()
                    .filter(|&s| s > cutoff && s > T::zero())
                    .count()
            })
            .collect()
    }

    /// Largest `‖x u − u x‖` over all matrix units `u`.
    pub fn commutator_residual(&self) -> T {
        let mut worst = T::zero();
        for (b, m) in self.blocks.iter().enumerate() {
            let n = self.signature.blocks[b];
            for r in 0..n {
                for col in 0..n {
                    // (m e_rc)_{ij} = m_ir δ_jc ; (e_rc m)_{ij} = δ_ir m_cj
                    let comm = Mat::from_fn(n, n, |i, j| {
                        let left = if j == col { m[(i, r)] } else { czero() };
                        let right = if i == r { m[(col, j)] } else { czero() };
                        left - right
                    });
                    worst = worst.max(comm.spectral_norm());
                }
            }
        }
        worst
    }

    /// Commutes with every matrix unit, i.e. lies in the center of `A`.
    pub fn center_membership(&self, tol: &Tolerance) -> bool {
        self.commutator_residual().as_f64() <= tol.eq_bound(self.operator_norm().as_f64())
    }

    /// Distance from each block to the nearest scalar multiple of the identity;
    /// the center of `⊕ M_{nᵢ}` is exactly the block-scalar elements.
    pub fn block_scalar_residual(&self) -> T {
        self.blocks
            .iter()
            .map(|m| {
                let n = m.rows();
                let mean = m.trace() / T::from_usize(n).expect("block size");
                (m - &Mat::identity(n).scale(mean)).spectral_norm()
            })
            .fold(T::zero(), T::max)
    }

    pub fn is_block_scalar(&self, tol: &Tolerance) -> bool {
        self.block_scalar_residual().as_f64() <= tol.eq_bound(self.operator_norm().as_f64())
    }

    /// `(x, y) ∈ A ⊕ B`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Self {
            signature: self.signature.direct_sum(&other.signature),
            blocks,
        }
    }

    /// Splits `(x, y) ∈ A ⊕ B` back into components, `A` having `head` blocks.
    pub fn split_at(&self, head: usize) -> (Self, Self) {
        let (a, b) = self.blocks.split_at(head);
        let sa = AlgebraSignature::new(self.signature.blocks[..head].to_vec()).expect("head");
        let sb = AlgebraSignature::new(self.signature.blocks[head..].to_vec()).expect("tail");
        (
            Self {
                signature: sa,
                blocks: a.to_vec(),
            },
            Self {
                signature: sb,
                blocks: b.to_vec(),
            },
        )
    }

    pub fn cast<U: Real>(&self) -> BlockMatrix<U> {
        BlockMatrix {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(Mat::cast).collect(),
        }
    }

    pub fn to_repr(&self) -> ElementRepr {
        self.blocks
            .iter()
            .map(|m| {
                (0..m.rows())
                    .map(|r| {
                        (0..m.cols())
                            .map(|col| [m[(r, col)].re.as_f64(), m[(r, col)].im.as_f64()])
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_repr(signature: &AlgebraSignature, repr: &ElementRepr) -> Result<Self> {
        if repr.len() != signature.num_blocks() {
            return Err(Error::Shape(format!(
                "element has {} blocks, signature {} has {}",
                repr.len(),
                signature,
                signature.num_blocks()
            )));
        }
        let mut blocks = Vec::with_capacity(repr.len());
        for (b, rows) in repr.iter().enumerate() {
            let n = signature.block_size(b);
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Shape(format!("block {b} must be {n}x{n}")));
            }
            blocks.push(Mat::from_fn(n, n, |r, col| {
                let [re, im] = rows[r][col];
                c(re, im)
            }));
        }
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }
}

impl<T: Real> Add for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn add(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(self.signature, rhs.signature, "signature mismatch");
        BlockMatrix {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn sub(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(self.signature, rhs.signature, "signature mismatch");
        BlockMatrix {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn mul(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(self.signature, rhs.signature, "signature mismatch");
        self.mul_unchecked(rhs)
    }
}

impl<T: Real> Neg for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn neg(self) -> BlockMatrix<T> {
        self.scale_real(-T::one())
    }
}

/// `‖x − y‖` in operator norm.
pub fn distance<T: Real>(x: &BlockMatrix<T>, y: &BlockMatrix<T>) -> T {
    (x - y).operator_norm()
}
