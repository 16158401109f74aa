//! Seeded random elements. Every random test in the crate goes through a
//! [`Sampler`] so a recorded 64-bit seed reproduces it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraSignature, BlockMatrix};
use crate::linalg::{dot, norm, Mat};
use crate::scalar::{Real, C};

#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn complex<T: Real>(&mut self) -> C<T> {
        let re = self.gaussian();
        let im = self.gaussian();
        C::new(T::lit(re), T::lit(im))
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn matrix<T: Real>(&mut self, rows: usize, cols: usize) -> Mat<T> {
        Mat::from_fn(rows, cols, |_, _| self.complex())
    }

    /// Complex Gaussian entries in every block.
    pub fn element<T: Real>(&mut self, signature: &AlgebraSignature) -> BlockMatrix<T> {
        let blocks = signature
            .blocks()
            .iter()
            .map(|&n| self.matrix(n, n))
            .collect();
        BlockMatrix::from_blocks(signature, blocks).expect("shapes follow signature")
    }

    /// Gaussian element rescaled to operator norm one.
    pub fn unit_element<T: Real>(&mut self, signature: &AlgebraSignature) -> BlockMatrix<T> {
        let x = self.element(signature);
        let n = x.operator_norm();
        x.scale_real(T::one() / n)
    }

    /// Self-adjoint element of operator norm one.
    pub fn self_adjoint<T: Real>(&mut self, signature: &AlgebraSignature) -> BlockMatrix<T> {
        let x: BlockMatrix<T> = self.element(signature);
        let h = (&x + &x.adjoint()).scale_real(T::lit(0.5));
        let n = h.operator_norm();
        h.scale_real(T::one() / n)
    }

    /// Haar-ish unitary from Gram–Schmidt on a Gaussian matrix.
    pub fn unitary<T: Real>(&mut self, n: usize) -> Mat<T> {
        let g: Mat<T> = self.matrix(n, n);
        let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for q in &cols {
                    let coef = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi = *vi - *qi * coef;
                    }
                }
            }
            let nv = norm(&v);
            for vi in v.iter_mut() {
                *vi = *vi / nv;
            }
            cols.push(v);
        }
        Mat::from_columns(n, &cols)
    }

    pub fn block_unitary<T: Real>(&mut self, signature: &AlgebraSignature) -> BlockMatrix<T> {
        let blocks = signature.blocks().iter().map(|&n| self.unitary(n)).collect();
        BlockMatrix::from_blocks(signature, blocks).expect("shapes follow signature")
    }

    /// Projection with the given per-block ranks, in a random frame.
    pub fn projection<T: Real>(
        &mut self,
        signature: &AlgebraSignature,
        ranks: &[usize],
    ) -> BlockMatrix<T> {
        assert_eq!(ranks.len(), signature.num_blocks());
        let blocks = signature
            .blocks()
            .iter()
            .zip(ranks)
            .map(|(&n, &r)| {
                assert!(r <= n, "rank exceeds block size");
                let u = self.unitary::<T>(n);
                let frame: Vec<Vec<C<T>>> = (0..r).map(|j| u.column(j)).collect();
                let f = Mat::from_columns(n, &frame);
                &f * &f.adjoint()
            })
            .collect();
        BlockMatrix::from_blocks(signature, blocks).expect("shapes follow signature")
    }

    /// Projection with uniformly random per-block ranks.
    pub fn any_projection<T: Real>(&mut self, signature: &AlgebraSignature) -> BlockMatrix<T> {
        let ranks: Vec<usize> = signature
            .blocks()
            .iter()
            .map(|&n| self.index(n + 1))
            .collect();
        self.projection(signature, &ranks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Tolerance;

    #[test]
    fn same_seed_same_stream() {
        let s = AlgebraSignature::new(vec![3, 1]).unwrap();
        let a: BlockMatrix<f64> = Sampler::new(7).unit_element(&s);
        let b: BlockMatrix<f64> = Sampler::new(7).unit_element(&s);
        assert_eq!(a, b);
        assert!((a.operator_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitaries_and_projections_are_valid() {
        let tol = Tolerance::default();
        let mut s = Sampler::new(3);
        let u: Mat<f64> = s.unitary(4);
        assert!((&(&u.adjoint() * &u) - &Mat::identity(4)).max_abs() < 1e-12);
        let sig = AlgebraSignature::new(vec![3, 2]).unwrap();
        let p: BlockMatrix<f64> = s.projection(&sig, &[2, 0]);
        assert!(p.is_projection(&tol));
        assert_eq!(p.rank_of(&tol), vec![2, 0]);
    }
}
