//! Dense complex matrices and the handful of factorizations the verifiers need.
//!
//! Everything here is deterministic for a fixed input: Jacobi sweeps visit
//! index pairs in a fixed cyclic order and pivot ties resolve to the lowest
//! index.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::scalar::{czero, Real, C};

const MAX_SWEEPS: usize = 80;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data; `None` if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    /// Matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<C<T>>]) -> Self {
        Self::from_fn(rows, columns.len(), |r, c| columns[c][r])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C<T>]) {
        assert_eq!(v.len(), self.rows, "column length mismatch");
        for (r, x) in v.iter().enumerate() {
            self[(r, j)] = *x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        let mut out = vec![czero(); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = czero();
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            *o = acc;
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(czero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Induced 1-norm: maximum absolute column sum.
    pub fn max_col_sum_norm(&self) -> T {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<T>())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * half
        })
    }

    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }

    /// Eigendecomposition of the Hermitian part of `self` by cyclic complex
    /// Jacobi rotations. Eigenvalues ascend; eigenvectors are the columns of
    /// `vectors`.
    pub fn hermitian_eigen(&self) -> HermitianEigen<T> {
        jacobi_eigen(self, true)
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        jacobi_eigen(self, false).values
    }

    /// Singular values in descending order, via one-sided (Hestenes) Jacobi.
    pub fn singular_values(&self) -> Vec<T> {
        let mut cols: Vec<Vec<C<T>>> = (0..self.cols).map(|j| self.column(j)).collect();
        let eps = T::epsilon();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..cols.len() {
                for j in (i + 1)..cols.len() {
                    let alpha = norm_sqr(&cols[i]);
                    let beta = norm_sqr(&cols[j]);
                    let gamma = dot(&cols[i], &cols[j]);
                    let g = gamma.norm();
                    if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = (gamma / g).conj();
                    let zeta = (beta - alpha) / (T::lit(2.0) * g);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let cs = T::one() / (T::one() + t * t).sqrt();
                    let sn = cs * t;
                    let (left, right) = cols.split_at_mut(j);
                    let (ci, cj) = (&mut left[i], &mut right[0]);
                    for k in 0..ci.len() {
                        let ai = ci[k];
                        let aj = cj[k] * phase;
                        ci[k] = ai * cs - aj * sn;
                        cj[k] = ai * sn + aj * cs;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<T> = cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        sv
    }

    /// Largest singular value; zero for an empty matrix.
    pub fn spectral_norm(&self) -> T {
        if self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        self.singular_values()[0]
    }
}

impl<T: Real> Index<(usize, usize)> for Mat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o = *o + a * *b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// Result of [`Mat::hermitian_eigen`].
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Mat<T>,
}

fn jacobi_eigen<T: Real>(m: &Mat<T>, want_vectors: bool) -> HermitianEigen<T> {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = if want_vectors { Mat::identity(n) } else { Mat::zeros(0, 0) };
    let eps = T::epsilon();
    let two = T::lit(2.0);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for p in 0..n {
            diag = diag + a[(p, p)].norm_sqr();
            for q in 0..n {
                if p != q {
                    off = off + a[(p, q)].norm_sqr();
                }
            }
        }
        if off == T::zero() || off <= eps * eps * (off + diag) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == T::zero() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase that makes the (p, q) entry real and non-negative.
                let phase = (apq / mag).conj();
                let theta = (aqq - app) / (two * mag);
                let t = if theta.is_infinite() {
                    T::zero()
                } else {
                    let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                    sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                let g_pp = C::new(cs, T::zero());
                let g_pq = C::new(sn, T::zero());
                let g_qp = phase * (-sn);
                let g_qq = phase * cs;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = czero();
                a[(q, p)] = czero();
                a[(p, p)].im = T::zero();
                a[(q, q)].im = T::zero();
                if want_vectors {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * g_pp + vkq * g_qp;
                        v[(k, q)] = vkp * g_pq + vkq * g_qq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = if want_vectors {
        Mat::from_fn(n, n, |r, c| v[(r, order[c])])
    } else {
        v
    };
    HermitianEigen { values, vectors }
}

/// `Σ conj(u_i) v_i`.
pub fn dot<T: Real>(u: &[C<T>], v: &[C<T>]) -> C<T> {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .fold(czero(), |acc, (a, b)| acc + a.conj() * *b)
}

pub fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<T: Real>(v: &[C<T>]) -> T {
    norm_sqr(v).sqrt()
}

/// Columns chosen by pivoted Gram–Schmidt, with an orthonormal basis of their span.
#[derive(Clone, Debug)]
pub struct ColumnSelection<T: Real> {
    /// Indices of the selected input vectors, in pivot order.
    pub picked: Vec<usize>,
    /// Orthonormal basis of the span of the selected vectors.
    pub orthonormal: Vec<Vec<C<T>>>,
    /// Residual norm of each selected vector at the moment it was picked.
    pub pivots: Vec<T>,
    /// Largest residual among the vectors that were *not* selected.
    pub rejected_residual: T,
    /// Largest input norm (the scale the threshold was relative to).
    pub scale: T,
}

impl<T: Real> ColumnSelection<T> {
    pub fn rank(&self) -> usize {
        self.picked.len()
    }

    /// Orthogonal projection of `v` onto the selected span.
    pub fn project(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![czero(); v.len()];
        for q in &self.orthonormal {
            let coef = dot(q, v);
            for (o, qi) in out.iter_mut().zip(q) {
                *o = *o + *qi * coef;
            }
        }
        out
    }

    /// Distance from `v` to the selected span.
    pub fn residual(&self, v: &[C<T>]) -> T {
        let p = self.project(v);
        v.iter()
            .zip(&p)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }
}

/// Greedy rank-revealing selection: repeatedly picks the input with the
/// largest residual against the span chosen so far, stopping once every
/// residual is at most `rel_tol * max(scale, 1)`. The floor keeps rounding
/// noise in an all-but-zero input from counting as rank.
pub fn select_independent<T: Real>(vectors: &[Vec<C<T>>], rel_tol: T) -> ColumnSelection<T> {
    let scale = vectors.iter().map(|v| norm(v)).fold(T::zero(), T::max);
    let threshold = rel_tol * scale.max(T::one());
    let mut residuals: Vec<Vec<C<T>>> = vectors.to_vec();
    let mut used = vec![false; vectors.len()];
    let mut sel = ColumnSelection {
        picked: Vec::new(),
        orthonormal: Vec::new(),
        pivots: Vec::new(),
        rejected_residual: T::zero(),
        scale,
    };
    loop {
        let mut best: Option<(usize, T)> = None;
        for (i, r) in residuals.iter().enumerate() {
            if used[i] {
                continue;
            }
            let n = norm(r);
            if best.map_or(true, |(_, b)| n > b) {
                best = Some((i, n));
            }
        }
        let Some((idx, piv)) = best else { break };
        if piv <= threshold || piv == T::zero() {
            sel.rejected_residual = piv;
            break;
        }
        used[idx] = true;
        // Re-orthogonalize once against the accepted basis for stability.
        let mut q = residuals[idx].clone();
        for b in &sel.orthonormal {
            let coef = dot(b, &q);
            for (qi, bi) in q.iter_mut().zip(b) {
                *qi = *qi - *bi * coef;
            }
        }
        let qn = norm(&q);
        for qi in q.iter_mut() {
            *qi = *qi / qn;
        }
        for (i, r) in residuals.iter_mut().enumerate() {
            if used[i] {
                continue;
            }
            let coef = dot(&q, r);
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri = *ri - *qi * coef;
            }
        }
        sel.picked.push(idx);
        sel.orthonormal.push(q);
        sel.pivots.push(piv);
    }
    sel
}
