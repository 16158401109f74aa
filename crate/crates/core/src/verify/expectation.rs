use crate::algebra::{BlockMatrix, Tolerance};
use crate::expectations::{range_selection, OperatorMap};
use crate::linalg::Mat;
use crate::sampling::Sampler;
use crate::scalar::{Real, C};

use super::certificate::{Certificate, Property, Reason, Witness};
use super::{hs_distance, relative};

/// Number of random unit-norm elements used by the contractivity check.
pub const CONTRACTIVITY_SAMPLES: usize = 128;

/// Smallest eigenvalue of the basis Choi matrix `[E(bᵢ* bⱼ)]`.
///
/// `bᵢ* bⱼ` vanishes unless both units sit in the same block and row, and
/// then equals `e_{ll'}`. Up to a permutation the Choi matrix is therefore a
/// direct sum, over input blocks `b` and output blocks `c`, of `n_b` copies of
/// `[E(e⁽ᵇ⁾_{ll'})_c]`, which is what gets diagonalized here.
#[derive(Clone, Debug)]
pub struct ChoiSpectrum<T: Real> {
    pub min_eigenvalue: f64,
    /// Largest eigenvalue magnitude over all pieces.
    pub scale: f64,
    pub input_block: usize,
    pub output_block: usize,
    /// Eigenvector of the worst piece, split into `n_b` vectors of length `n_c`.
    pub vector: Vec<Vec<C<T>>>,
}

pub fn choi_spectrum<T: Real>(map: &OperatorMap<T>) -> ChoiSpectrum<T> {
    let sig = map.signature();
    let mut out = ChoiSpectrum {
        min_eigenvalue: f64::INFINITY,
        scale: 0.0,
        input_block: 0,
        output_block: 0,
        vector: Vec::new(),
    };
    for (b, &nb) in sig.blocks().iter().enumerate() {
        let images: Vec<Vec<BlockMatrix<T>>> = (0..nb)
            .map(|l| (0..nb).map(|m| map.apply_basis(sig.index(b, l, m))).collect())
            .collect();
        for (c, &nc) in sig.blocks().iter().enumerate() {
            let choi = Mat::from_fn(nb * nc, nb * nc, |i, j| {
                images[i / nc][j / nc].block(c)[(i % nc, j % nc)]
            })
            .hermitian_part();
            let eig = choi.hermitian_eigen();
            let lo = eig.values[0].as_f64();
            let hi = eig.values[nb * nc - 1].as_f64();
            out.scale = out.scale.max(lo.abs()).max(hi.abs());
            if lo < out.min_eigenvalue {
                out.min_eigenvalue = lo;
                out.input_block = b;
                out.output_block = c;
                let v = eig.vectors.column(0);
                out.vector = v.chunks(nc).map(<[C<T>]>::to_vec).collect();
            }
        }
    }
    out
}

fn choi_witness<T: Real>(map: &OperatorMap<T>, spec: &ChoiSpectrum<T>) -> Witness {
    let sig = map.signature();
    let nc = sig.block_size(spec.output_block);
    let mut w = Witness::new()
        .value("min_eigenvalue", spec.min_eigenvalue)
        .value("input_block", spec.input_block as f64)
        .value("output_block", spec.output_block as f64);
    for (l, xi) in spec.vector.iter().enumerate() {
        let mut x = BlockMatrix::<T>::zeros(sig);
        let mut blocks = x.blocks().to_vec();
        for (r, v) in xi.iter().enumerate().take(nc) {
            blocks[spec.output_block][(r, 0)] = *v;
        }
        x = BlockMatrix::from_blocks(sig, blocks).expect("shape");
        w = w.element(&format!("xi_{l}"), &x);
    }
    w
}

/// Checks, in this order: idempotency, range closed under products, left and
/// right module properties on basis pairs, complete positivity, and sampled
/// contractivity. Every check runs; the first failure sets the reason.
pub fn verify_expectation<T: Real>(map: &OperatorMap<T>, tol: &Tolerance, seed: u64) -> Certificate {
    let mut cert = Certificate::new(Property::ConditionalExpectation, tol).with_seed(seed);
    let sig = map.signature();
    let d = sig.dim();
    let basis = BlockMatrix::<T>::basis(sig);
    let images: Vec<BlockMatrix<T>> = (0..d).map(|j| map.apply_basis(j)).collect();

    // E² = E
    let (res, bound) = map.idempotency_residual(tol);
    if !cert.check("idempotency", res, bound) {
        let (j, r) = images
            .iter()
            .enumerate()
            .map(|(j, e)| (j, hs_distance(&map.apply(e), e)))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let w = Witness::new().element("x", &basis[j]).value("residual", r);
        cert.fail(Reason::NotIdempotent, Some(w));
    }

    // range closed under multiplication
    let span = range_selection(map, tol);
    let range: Vec<BlockMatrix<T>> = span.picked.iter().map(|&j| images[j].clone()).collect();
    let mut worst = (0.0, 0, 0);
    for (i, s) in range.iter().enumerate() {
        for (j, t) in range.iter().enumerate() {
            let p = s * t;
            let r = span.residual(&p.to_vector()).as_f64()
                / (s.hs_norm() * t.hs_norm()).as_f64().max(f64::MIN_POSITIVE);
            if r > worst.0 {
                worst = (r, i, j);
            }
        }
    }
    let range_bound = tol.rank_tol.max(tol.eq_tol);
    if !cert.check("range_subalgebra", worst.0, range_bound) {
        let (r, i, j) = worst;
        let w = Witness::new()
            .element("x", &range[i])
            .element("y", &range[j])
            .value("relative_residual", r);
        cert.fail(Reason::RangeNotSubalgebra, Some(w));
    }

    // E(E(bᵢ)bⱼ) = E(bᵢ)E(bⱼ) and E(bᵢE(bⱼ)) = E(bᵢ)E(bⱼ)
    let mut left = (0.0, 0, 0);
    let mut right = (0.0, 0, 0);
    for i in 0..d {
        for j in 0..d {
            let prod = &images[i] * &images[j];
            let scale = images[i].hs_norm().as_f64() * images[j].hs_norm().as_f64()
                + images[i].hs_norm().as_f64().max(images[j].hs_norm().as_f64());
            let l = map.apply(&(&images[i] * &basis[j]));
            let rl = relative(hs_distance(&l, &prod), scale);
            if rl > left.0 {
                left = (rl, i, j);
            }
            let r = map.apply(&(&basis[i] * &images[j]));
            let rr = relative(hs_distance(&r, &prod), scale);
            if rr > right.0 {
                right = (rr, i, j);
            }
        }
    }
    for (name, (r, i, j), reason) in [
        ("left_module", left, Reason::LeftModule),
        ("right_module", right, Reason::RightModule),
    ] {
        if !cert.check(name, r, tol.eq_tol) {
            let w = Witness::new()
                .element("x", &basis[i])
                .element("y", &basis[j])
                .value("relative_residual", r);
            cert.fail(reason, Some(w));
        }
    }

    // [E(bᵢ*bⱼ)] ≥ 0
    let choi = choi_spectrum(map);
    let neg = (-choi.min_eigenvalue).max(0.0);
    if !cert.check("complete_positivity", neg, tol.psd_bound(choi.scale)) {
        let w = choi_witness(map, &choi);
        cert.fail(Reason::NotCompletelyPositive, Some(w));
    }

    // ‖E(x)‖ ≤ ‖x‖ on seeded samples
    let mut sampler = Sampler::new(seed);
    let mut best: Option<(f64, BlockMatrix<T>)> = None;
    for _ in 0..CONTRACTIVITY_SAMPLES {
        let x: BlockMatrix<T> = sampler.unit_element(sig);
        let ratio = (map.apply(&x).operator_norm() / x.operator_norm()).as_f64();
        if best.as_ref().map_or(true, |(b, _)| ratio > *b) {
            best = Some((ratio, x));
        }
    }
    let (ratio, x) = best.expect("at least one sample");
    if !cert.check("contractivity", ratio - 1.0, tol.eq_tol) {
        let w = Witness::new().element("x", &x).value("ratio", ratio);
        cert.fail(Reason::NotContractive, Some(w));
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSignature;
    use crate::expectations::{
        diagonal_pinching, graph_expectation, zero_diagonal_projection, BlockLinearMap,
    };
    use crate::scalar::c;

    fn sig(b: &[usize]) -> AlgebraSignature {
        AlgebraSignature::new(b.to_vec()).unwrap()
    }

    #[test]
    fn diagonal_pinching_is_an_expectation() {
        let cert = verify_expectation(&diagonal_pinching::<f64>(&sig(&[2])), &Tolerance::default(), 1);
        assert!(cert.holds(), "{cert:?}");
        assert_eq!(cert.checks.len(), 6);
        assert!(cert.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn zero_diagonal_range_is_not_a_subalgebra() {
        let cert = verify_expectation(&zero_diagonal_projection::<f64>(2).unwrap(), &Tolerance::default(), 1);
        assert!(!cert.holds());
        assert_eq!(cert.reason, Some(Reason::RangeNotSubalgebra));
        assert!(cert.failure(Reason::NotCompletelyPositive).is_some());
    }

    #[test]
    fn doubling_graph_fails_module_property_at_first_summand() {
        let one = sig(&[1]);
        let dbl = BlockLinearMap::<f64>::from_fn(&one, &one, |x| x.scale_real(2.0));
        let e = graph_expectation(&dbl);
        let cert = verify_expectation(&e, &Tolerance::default(), 1);
        assert!(!cert.holds());
        let f = cert.failure(Reason::LeftModule).expect("left module fails");
        let w = f.witness.as_ref().unwrap();
        let s = sig(&[1, 1]);
        let first = BlockMatrix::<f64>::from_vector(&s, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(w.get::<f64>("x", &s).unwrap().unwrap(), first);
        assert_eq!(w.get::<f64>("y", &s).unwrap().unwrap(), first);
    }

    #[test]
    fn transpose_is_positive_but_not_completely_positive() {
        let s = sig(&[2]);
        let t = OperatorMap::<f64>::from_fn(&s, crate::expectations::Provenance::Dense, |x| {
            BlockMatrix::from_blocks(&s, vec![Mat::from_fn(2, 2, |r, col| x.block(0)[(col, r)])]).unwrap()
        });
        let spec = choi_spectrum(&t);
        assert!((spec.min_eigenvalue + 1.0).abs() < 1e-12);
        let cert = verify_expectation(&t, &Tolerance::default(), 1);
        let f = cert.failure(Reason::NotCompletelyPositive).unwrap();
        let w = f.witness.as_ref().unwrap();
        // Σ ξ_l* T(e_{ll'}) ξ_l' reproduces the eigenvalue
        let xs: Vec<BlockMatrix<f64>> = (0..2)
            .map(|l| w.get::<f64>(&format!("xi_{l}"), &s).unwrap().unwrap())
            .collect();
        let mut acc = BlockMatrix::zeros(&s);
        for l in 0..2 {
            for m in 0..2 {
                let img = t.apply(&BlockMatrix::matrix_unit(&s, 0, l, m));
                acc = &acc + &(&(&xs[l].adjoint() * &img) * &xs[m]);
            }
        }
        assert!((acc.block(0)[(0, 0)].re + 1.0).abs() < 1e-12);
    }
}
