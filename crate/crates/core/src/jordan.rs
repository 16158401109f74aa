//! Jordan and triple structure induced on the range of a projection:
//! contractivity classification, the range products, and the triple and
//! Jordan homomorphism certificates.

use crate::algebra::{BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::{split_along, OperatorMap};
use crate::linalg::select_independent;
use crate::sampling::Sampler;
use crate::scalar::{Real, C};
use crate::verify::{choi_spectrum, hs_distance, relative, Certificate, Property, Reason, Witness};

/// Basis triples above this count are sampled instead of enumerated.
pub const TRIPLE_BUDGET: usize = 1_000_000;

/// Random self-adjoint elements tried by the Schwarz-square inequality check.
pub const SQUARE_INEQUALITY_SAMPLES: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub enum Contractivity {
    /// Completely positive with `‖P(1)‖ ≤ 1`, so `‖P‖ = ‖P(1)‖ ≤ 1`.
    CertifiedByCp,
    /// Not completely positive; no sampled element was stretched.
    SampledOnly { max_ratio: f64 },
    /// A sampled element with `‖P(x)‖ > ‖x‖`.
    NotContractive { ratio: f64, witness: Witness },
}

/// An idempotent map together with what is known about its norm, positivity
/// and unit.
#[derive(Clone, Debug)]
pub struct ProjectionOnAlgebra<T: Real> {
    pub map: OperatorMap<T>,
    pub contractivity: Contractivity,
    /// Certified through complete positivity.
    pub positive: bool,
    /// `P(1)` is a projection acting as the unit of the range.
    pub unital: bool,
    /// Choi witness when not completely positive.
    cp_witness: Option<(f64, usize, usize)>,
}

impl<T: Real> ProjectionOnAlgebra<T> {
    pub fn new(map: &OperatorMap<T>, tol: &Tolerance, seed: u64) -> Result<Self> {
        let (residual, bound) = map.idempotency_residual(tol);
        if residual > bound {
            return Err(Error::NotIdempotent { residual, bound });
        }
        let sig = map.signature();
        let one = BlockMatrix::<T>::identity(sig);
        let p1 = map.apply(&one);
        let choi = choi_spectrum(map);
        let cp = choi.min_eigenvalue >= -tol.psd_bound(choi.scale);
        let contractivity = if cp && p1.operator_norm().as_f64() <= 1.0 + tol.eq_tol {
            Contractivity::CertifiedByCp
        } else {
            let mut sampler = Sampler::new(seed);
            let mut worst = (0.0, BlockMatrix::zeros(sig));
            for _ in 0..crate::verify::CONTRACTIVITY_SAMPLES {
                let x: BlockMatrix<T> = sampler.unit_element(sig);
                let r = (map.apply(&x).operator_norm() / x.operator_norm()).as_f64();
                if r > worst.0 {
                    worst = (r, x);
                }
            }
            if worst.0 > 1.0 + tol.eq_tol {
                Contractivity::NotContractive {
                    ratio: worst.0,
                    witness: Witness::new().element("x", &worst.1).value("ratio", worst.0),
                }
            } else {
                Contractivity::SampledOnly { max_ratio: worst.0 }
            }
        };
        let unital = p1.is_projection(tol)
            && range_basis(map, tol).iter().all(|s| {
                let lhs = p1.jordan_product(s).expect("same signature");
                hs_distance(&lhs, s) <= tol.eq_bound(s.hs_norm().as_f64())
            });
        Ok(Self {
            map: map.clone(),
            contractivity,
            positive: cp,
            unital,
            cp_witness: (!cp).then_some((choi.min_eigenvalue, choi.input_block, choi.output_block)),
        })
    }

    pub fn is_contractive(&self) -> bool {
        !matches!(self.contractivity, Contractivity::NotContractive { .. })
    }
}

fn range_basis<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Vec<BlockMatrix<T>> {
    crate::expectations::range_selection(map, tol)
        .picked
        .iter()
        .map(|&j| map.apply_basis(j))
        .collect()
}

fn require_in_range<T: Real>(p: &OperatorMap<T>, a: &BlockMatrix<T>, tol: &Tolerance) -> Result<()> {
    let residual = crate::algebra::distance(&p.apply(a), a).as_f64();
    if residual > tol.eq_bound(a.operator_norm().as_f64()) {
        return Err(Error::NotInRange { residual });
    }
    Ok(())
}

/// `{abc}` in the range: `P({abc}_A)` for `a, b, c` in the range of `P`.
pub fn range_triple_product<T: Real>(
    p: &OperatorMap<T>,
    a: &BlockMatrix<T>,
    b: &BlockMatrix<T>,
    c: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<BlockMatrix<T>> {
    for x in [a, b, c] {
        require_in_range(p, x, tol)?;
    }
    Ok(p.apply(&a.triple_product(b, c)?))
}

/// `a * b = P(a∘b)` for `a, b` in the range of `P`.
pub fn range_jordan_product<T: Real>(
    p: &OperatorMap<T>,
    a: &BlockMatrix<T>,
    b: &BlockMatrix<T>,
    tol: &Tolerance,
) -> Result<BlockMatrix<T>> {
    require_in_range(p, a, tol)?;
    require_in_range(p, b, tol)?;
    Ok(p.apply(&a.jordan_product(b)?))
}

const UNITS4: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];

/// The eight elements `w = x + αy + βz`, `α⁴ = 1`, `β² = 1`, with weight `αβ`.
fn polarization_terms<T: Real>(
    x: &BlockMatrix<T>,
    y: &BlockMatrix<T>,
    z: &BlockMatrix<T>,
) -> Vec<(C<T>, BlockMatrix<T>)> {
    let mut out = Vec::with_capacity(8);
    for (re, im) in UNITS4 {
        let alpha = C::new(T::lit(re), T::lit(im));
        for beta in [1.0, -1.0] {
            let b = T::lit(beta);
            let w = &(x + &y.scale(alpha)) + &z.scale_real(b);
            out.push((alpha * b, w));
        }
    }
    out
}

/// `{xyz} = (1/16) Σ_{α⁴=1, β²=1} αβ {w w w}` with `w = x + αy + βz`.
///
/// Both `xy*z` and `zy*x` pick up weight 8 from the sum, hence 16 and not 8.
pub fn triple_polarization<T: Real>(
    x: &BlockMatrix<T>,
    y: &BlockMatrix<T>,
    z: &BlockMatrix<T>,
) -> BlockMatrix<T> {
    let mut acc = BlockMatrix::zeros(x.signature());
    for (weight, w) in polarization_terms(x, y, z) {
        let cube = w.triple_product(&w, &w).expect("same signature");
        acc = &acc + &cube.scale(weight);
    }
    acc.scale_real(T::lit(1.0 / 16.0))
}

/// Index triples to test: all of them, or a seeded stratified sample with
/// `TRIPLE_BUDGET / d` random `(j, k)` per first index when `d³` is too large.
fn basis_triples(d: usize, seed: u64) -> (Vec<(usize, usize, usize)>, bool) {
    if d.saturating_mul(d).saturating_mul(d) <= TRIPLE_BUDGET {
        let mut all = Vec::with_capacity(d * d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    all.push((i, j, k));
                }
            }
        }
        return (all, false);
    }
    let per = TRIPLE_BUDGET / d;
    let mut sampler = Sampler::new(seed);
    let mut out = Vec::with_capacity(per * d);
    for i in 0..d {
        for _ in 0..per {
            out.push((i, sampler.index(d), sampler.index(d)));
        }
    }
    (out, true)
}

/// Checks `P{x,Py,Pz} = P{Px,Py,Pz} = P{Px,y,Pz}` on basis triples and, for
/// positive unital `P`, `P(x∘Py) = P(Px∘Py)` on basis pairs.
pub fn expectation_formulas_check<T: Real>(map: &OperatorMap<T>, tol: &Tolerance, seed: u64) -> Certificate {
    let mut cert = Certificate::new(Property::ExpectationFormulas, tol).with_seed(seed);
    let proj = match ProjectionOnAlgebra::new(map, tol, seed) {
        Ok(p) => p,
        Err(e) => {
            cert.note(format!("not a projection: {e}"));
            cert.fail(Reason::HypothesisViolation, None);
            return cert;
        }
    };
    if let Contractivity::NotContractive { witness, .. } = &proj.contractivity {
        cert.note("hypothesis violated: projection is not contractive");
        cert.fail(Reason::HypothesisViolation, Some(witness.clone()));
    }
    let sig = map.signature();
    let d = sig.dim();
    let basis = BlockMatrix::<T>::basis(sig);
    let images: Vec<BlockMatrix<T>> = (0..d).map(|j| map.apply_basis(j)).collect();
    let norms: Vec<f64> = images.iter().map(|e| e.hs_norm().as_f64().max(1.0)).collect();

    let (triples, sampled) = basis_triples(d, seed);
    if sampled {
        cert.note(format!("triple chain checked on {} stratified samples", triples.len()));
    }
    let mut worst = (0.0, (0, 0, 0));
    for &(i, j, k) in &triples {
        let left = map.apply(&basis[i].triple_product(&images[j], &images[k]).expect("sig"));
        let mid = map.apply(&images[i].triple_product(&images[j], &images[k]).expect("sig"));
        let right = map.apply(&images[i].triple_product(&basis[j], &images[k]).expect("sig"));
        let r = hs_distance(&left, &mid).max(hs_distance(&right, &mid));
        let r = relative(r, norms[i] * norms[j] * norms[k]);
        if r > worst.0 {
            worst = (r, (i, j, k));
        }
    }
    if !cert.check("triple_chain", worst.0, tol.eq_tol) {
        let (i, j, k) = worst.1;
        let w = Witness::new()
            .element("x", &basis[i])
            .element("y", &basis[j])
            .element("z", &basis[k])
            .value("relative_residual", worst.0);
        cert.fail(Reason::TripleChain, Some(w));
    }

    if proj.positive && proj.unital {
        let mut worst = (0.0, (0, 0));
        for i in 0..d {
            for j in 0..d {
                let lhs = map.apply(&basis[i].jordan_product(&images[j]).expect("sig"));
                let rhs = map.apply(&images[i].jordan_product(&images[j]).expect("sig"));
                let r = relative(hs_distance(&lhs, &rhs), norms[i] * norms[j]);
                if r > worst.0 {
                    worst = (r, (i, j));
                }
            }
        }
        if !cert.check("jordan_chain", worst.0, tol.eq_tol) {
            let (i, j) = worst.1;
            let w = Witness::new()
                .element("x", &basis[i])
                .element("y", &basis[j])
                .value("relative_residual", worst.0);
            cert.fail(Reason::JordanChain, Some(w));
        }
    } else {
        cert.note("jordan chain skipped: projection is not positive and unital");
    }
    cert
}

fn triple_witness<T: Real>(names: [&str; 3], elems: [&BlockMatrix<T>; 3], residual: f64) -> Witness {
    let mut w = Witness::new().value("relative_residual", residual);
    for (n, e) in names.iter().zip(elems) {
        w = w.element(n, e);
    }
    w
}

/// Decides whether `P` is a triple homomorphism onto its range.
///
/// Sub-conditions, all reported: (a) the kernel is a triple ideal, (b) the
/// mixed products `{ker, ker, ran}` and `{ker, ran, ker}` lie in the kernel,
/// (c) the kernel is a subtriple, (d) `P{bᵢbⱼb_k} = P{Pbᵢ,Pbⱼ,Pb_k}` on basis
/// triples. The verdict requires all four and the equivalences (a)⇔(d) and
/// (b)∧(c)⇔(d) are cross-checked.
pub fn triple_homomorphism_certificate<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Certificate {
    let mut cert = Certificate::new(Property::TripleHomomorphism, tol);
    let split = match split_along(map, tol) {
        Ok(s) => s,
        Err(e) => {
            cert.note(format!("range/kernel split unavailable: {e}"));
            cert.fail(Reason::NotIdempotent, None);
            return cert;
        }
    };
    let sig = map.signature();
    let d = sig.dim();
    let basis = BlockMatrix::<T>::basis(sig);
    let images: Vec<BlockMatrix<T>> = (0..d).map(|j| map.apply_basis(j)).collect();
    let ker = &split.kernel_basis;
    let ran = &split.range_basis;
    let kn: Vec<f64> = ker.iter().map(|y| y.hs_norm().as_f64()).collect();
    let rn: Vec<f64> = ran.iter().map(|s| s.hs_norm().as_f64()).collect();
    let pt = |x: &BlockMatrix<T>, y: &BlockMatrix<T>, z: &BlockMatrix<T>| {
        map.apply(&x.triple_product(y, z).expect("sig")).hs_norm().as_f64()
    };

    // (a)
    let mut a = (0.0, [0usize; 3], false);
    for (yi, y) in ker.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                let r1 = relative(pt(y, &basis[i], &basis[j]), kn[yi]);
                if r1 > a.0 {
                    a = (r1, [yi, i, j], false);
                }
                let r2 = relative(pt(&basis[i], y, &basis[j]), kn[yi]);
                if r2 > a.0 {
                    a = (r2, [yi, i, j], true);
                }
            }
        }
    }
    let ideal = cert.check("triple_ideal", a.0, tol.eq_tol);

    // (b)
    let mut b = (0.0, [0usize; 3], false);
    for (j, yj) in ker.iter().enumerate() {
        for (k, yk) in ker.iter().enumerate() {
            for (s, rs) in ran.iter().enumerate() {
                let scale = kn[j] * kn[k] * rn[s];
                let r1 = relative(pt(yj, yk, rs), scale);
                if r1 > b.0 {
                    b = (r1, [j, k, s], false);
                }
                let r2 = relative(pt(yj, rs, yk), scale);
                if r2 > b.0 {
                    b = (r2, [j, k, s], true);
                }
            }
        }
    }
    let mixed = cert.check("mixed_kernel", b.0, tol.eq_tol);

    // (c)
    let mut c = (0.0, [0usize; 3]);
    for (j, yj) in ker.iter().enumerate() {
        for (k, yk) in ker.iter().enumerate() {
            for (l, yl) in ker.iter().enumerate() {
                let r = relative(pt(yj, yk, yl), kn[j] * kn[k] * kn[l]);
                if r > c.0 {
                    c = (r, [j, k, l]);
                }
            }
        }
    }
    let subtriple = cert.check("kernel_subtriple", c.0, tol.eq_tol);

    // (d)
    let mut dd = (0.0, [0usize; 3]);
    let norms: Vec<f64> = images.iter().map(|e| e.hs_norm().as_f64().max(1.0)).collect();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let lhs = map.apply(&basis[i].triple_product(&basis[j], &basis[k]).expect("sig"));
                let rhs = map.apply(&images[i].triple_product(&images[j], &images[k]).expect("sig"));
                let r = relative(hs_distance(&lhs, &rhs), norms[i] * norms[j] * norms[k]);
                if r > dd.0 {
                    dd = (r, [i, j, k]);
                }
            }
        }
    }
    let hom = cert.check("triple_multiplicativity", dd.0, tol.eq_tol);

    if ideal != hom || (mixed && subtriple) != hom {
        cert.note(format!(
            "sub-conditions disagree: ideal={ideal}, mixed={mixed}, subtriple={subtriple}, multiplicative={hom}"
        ));
        cert.fail(Reason::DecidersDisagree, None);
    }
    if !ideal {
        let [y, i, j] = a.1;
        let w = if a.2 {
            triple_witness(["x", "y", "z"], [&basis[i], &ker[y], &basis[j]], a.0)
        } else {
            triple_witness(["x", "y", "z"], [&ker[y], &basis[i], &basis[j]], a.0)
        };
        cert.fail(Reason::TripleIdeal, Some(w));
    }
    if !mixed {
        let [j, k, s] = b.1;
        let w = if b.2 {
            triple_witness(["x", "y", "z"], [&ker[j], &ran[s], &ker[k]], b.0)
        } else {
            triple_witness(["x", "y", "z"], [&ker[j], &ker[k], &ran[s]], b.0)
        };
        cert.fail(Reason::MixedKernel, Some(w));
    }
    if !subtriple {
        let [j, k, l] = c.1;
        cert.fail(Reason::KernelSubtriple, Some(cubic_witness(map, &ker[j], &ker[k], &ker[l])));
    }
    if !hom {
        let [i, j, k] = dd.1;
        let w = triple_witness(["x", "y", "z"], [&basis[i], &basis[j], &basis[k]], dd.0);
        cert.fail(Reason::TripleMultiplicativity, Some(w));
    }
    cert
}

/// Kernel element `x` with `‖P{xxx}‖ > 0 = ‖Px‖³`, from kernel elements with
/// `P{xyz} ≠ 0`. The eight polarization terms sum to `16 P{xyz}`, so the
/// largest has `‖P{www}‖ ≥ 2‖P{xyz}‖`.
fn cubic_witness<T: Real>(
    map: &OperatorMap<T>,
    x: &BlockMatrix<T>,
    y: &BlockMatrix<T>,
    z: &BlockMatrix<T>,
) -> Witness {
    let (norm, w) = polarization_terms(x, y, z)
        .into_iter()
        .map(|(_, w)| {
            let n = map.apply(&w.triple_product(&w, &w).expect("sig")).operator_norm().as_f64();
            (n, w)
        })
        .fold((-1.0, None), |best, (n, w)| if n > best.0 { (n, Some(w)) } else { best });
    let w = w.expect("eight terms");
    let px = map.apply(&w).operator_norm().as_f64();
    Witness::new()
        .element("x", &w)
        .value("norm_p_xxx", norm)
        .value("norm_px_cubed", px.powi(3))
}

/// Real basis of the self-adjoint part of the span of `ys`, built from
/// `y + y*` and `i(y − y*)` by Gram–Schmidt over the reals.
fn self_adjoint_basis<T: Real>(ys: &[BlockMatrix<T>], tol: &Tolerance) -> Vec<BlockMatrix<T>> {
    if ys.is_empty() {
        return Vec::new();
    }
    let i = C::new(T::zero(), T::one());
    let mut cands = Vec::with_capacity(2 * ys.len());
    for y in ys {
        let ys = y.adjoint();
        cands.push(y + &ys);
        cands.push((y - &ys).scale(i));
    }
    // embed each coordinate vector into a real vector of twice the length
    let real: Vec<Vec<C<T>>> = cands
        .iter()
        .map(|h| {
            h.to_vector()
                .iter()
                .flat_map(|z| [C::new(z.re, T::zero()), C::new(z.im, T::zero())])
                .collect()
        })
        .collect();
    let sel = select_independent(&real, T::lit(tol.rank_tol));
    sel.picked.iter().map(|&j| cands[j].clone()).collect()
}

/// Self-adjoint basis of `A`: `e_kk`, `e_kl + e_lk`, `i(e_kl − e_lk)`.
pub fn self_adjoint_units<T: Real>(sig: &crate::algebra::AlgebraSignature) -> Vec<BlockMatrix<T>> {
    let i = C::new(T::zero(), T::one());
    let mut out = Vec::with_capacity(sig.dim());
    for (b, &n) in sig.blocks().iter().enumerate() {
        for k in 0..n {
            out.push(BlockMatrix::matrix_unit(sig, b, k, k));
            for l in k + 1..n {
                let ekl = BlockMatrix::matrix_unit(sig, b, k, l);
                let elk = BlockMatrix::matrix_unit(sig, b, l, k);
                out.push(&ekl + &elk);
                out.push((&ekl - &elk).scale(i));
            }
        }
    }
    out
}

/// Self-adjoint `x` in the kernel with the largest `‖P(x²)‖` among the
/// basis elements and, when that is small, their pairwise sums and differences.
fn square_witness<T: Real>(map: &OperatorMap<T>, xs: &[BlockMatrix<T>], jordan: &dyn Fn(usize, usize) -> f64) -> Option<Witness> {
    if xs.is_empty() {
        return None;
    }
    let m = xs.len();
    let mut max = (0.0, 0, 0);
    for i in 0..m {
        for j in 0..m {
            let v = jordan(i, j);
            if v > max.0 {
                max = (v, i, j);
            }
        }
    }
    let (dmax, di) = (0..m).map(|i| (jordan(i, i), i)).fold((-1.0, 0), |b, c| if c.0 > b.0 { c } else { b });
    let x = if dmax >= max.0 / 2.0 {
        xs[di].clone()
    } else {
        let (_, i, j) = max;
        let plus = &xs[i] + &xs[j];
        let minus = &xs[i] - &xs[j];
        let sq = |x: &BlockMatrix<T>| map.apply(&(x * x)).operator_norm().as_f64();
        if sq(&plus) >= sq(&minus) {
            plus
        } else {
            minus
        }
    };
    let ex = map.apply(&x).operator_norm().as_f64();
    let exx = map.apply(&(&x * &x)).operator_norm().as_f64();
    Some(
        Witness::new()
            .element("x", &x)
            .value("norm_ex", ex)
            .value("norm_exx", exx)
            .value("gap", exx - ex * ex),
    )
}

/// Decides whether a conditional expectation is a Jordan homomorphism:
/// `E(x²) = 0` on self-adjoint kernel elements (checked by real polarization
/// over a self-adjoint kernel basis) cross-checked against
/// `E(bᵢ∘bⱼ) = E(bᵢ)∘E(bⱼ)` on basis pairs.
pub fn jordan_homomorphism_certificate_cstar<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Certificate {
    let mut cert = Certificate::new(Property::JordanHomomorphism, tol);
    let split = match split_along(map, tol) {
        Ok(s) => s,
        Err(e) => {
            cert.note(format!("range/kernel split unavailable: {e}"));
            cert.fail(Reason::NotIdempotent, None);
            return cert;
        }
    };
    let sig = map.signature();
    let xs = self_adjoint_basis(&split.kernel_basis, tol);
    cert.note(format!("self-adjoint kernel dimension {}", xs.len()));
    let norms: Vec<f64> = xs.iter().map(|x| x.operator_norm().as_f64()).collect();
    let table: Vec<Vec<f64>> = xs
        .iter()
        .map(|a| {
            xs.iter()
                .map(|b| map.apply(&a.jordan_product(b).expect("sig")).operator_norm().as_f64())
                .collect()
        })
        .collect();
    let mut kres = 0.0f64;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            kres = kres.max(relative(table[i][j], norms[i] * norms[j]));
        }
    }
    let kernel_ok = cert.check("jordan_kernel", kres, tol.eq_tol);

    let d = sig.dim();
    let basis = BlockMatrix::<T>::basis(sig);
    let images: Vec<BlockMatrix<T>> = (0..d).map(|j| map.apply_basis(j)).collect();
    let mut mres = (0.0, 0, 0);
    for i in 0..d {
        for j in 0..d {
            let lhs = map.apply(&basis[i].jordan_product(&basis[j]).expect("sig"));
            let rhs = images[i].jordan_product(&images[j]).expect("sig");
            let r = relative(hs_distance(&lhs, &rhs), images[i].hs_norm().as_f64() * images[j].hs_norm().as_f64());
            if r > mres.0 {
                mres = (r, i, j);
            }
        }
    }
    let mult_ok = cert.check("jordan_multiplicativity", mres.0, tol.eq_tol);

    if kernel_ok != mult_ok {
        cert.note(format!("deciders disagree: kernel={kernel_ok}, multiplicativity={mult_ok}"));
        cert.fail(Reason::DecidersDisagree, None);
    }
    if !kernel_ok {
        let w = square_witness(map, &xs, &|i, j| table[i][j]);
        cert.fail(Reason::JordanKernel, w);
    }
    if !mult_ok {
        let (r, i, j) = mres;
        let w = Witness::new()
            .element("x", &basis[i])
            .element("y", &basis[j])
            .value("relative_residual", r);
        cert.fail(Reason::JordanMultiplicativity, Some(w));
    }
    cert
}

/// For a positive projection whose `P(1)` is the unit of its range: checks
/// `P(a²) ≥ P(a)²`, then decides whether `P(a∘b) = P(Pa∘Pb)` (on a
/// self-adjoint basis) and whether `P(x∘y) = 0` on the self-adjoint kernel.
pub fn positive_unital_projection_certificate<T: Real>(
    map: &OperatorMap<T>,
    tol: &Tolerance,
    seed: u64,
) -> Certificate {
    let mut cert = Certificate::new(Property::PositiveUnitalJordan, tol).with_seed(seed);
    let proj = match ProjectionOnAlgebra::new(map, tol, seed) {
        Ok(p) => p,
        Err(e) => {
            cert.note(format!("not a projection: {e}"));
            cert.fail(Reason::NotIdempotent, None);
            return cert;
        }
    };
    if !proj.positive {
        let w = proj.cp_witness.map(|(lo, b, c)| {
            Witness::new()
                .value("min_eigenvalue", lo)
                .value("input_block", b as f64)
                .value("output_block", c as f64)
        });
        cert.fail(Reason::NotPositive, w);
    }
    if !proj.unital {
        let p1 = map.apply(&BlockMatrix::identity(map.signature()));
        cert.fail(Reason::NotUnital, Some(Witness::new().element("p_one", &p1)));
    }
    if !cert.holds() {
        return cert;
    }
    let sig = map.signature();
    let units = self_adjoint_units::<T>(sig);

    // P(a²) − P(a)² ≥ 0
    let mut sampler = Sampler::new(seed);
    let mut samples = units.clone();
    for _ in 0..SQUARE_INEQUALITY_SAMPLES {
        samples.push(sampler.self_adjoint(sig));
    }
    let mut worst = (0.0, 0);
    for (k, a) in samples.iter().enumerate() {
        let pa = map.apply(a);
        let defect = &map.apply(&(a * a)) - &(&pa * &pa);
        let neg = (-defect.min_eigenvalue().as_f64()).max(0.0) / a.operator_norm().as_f64().powi(2).max(1.0);
        if neg > worst.0 {
            worst = (neg, k);
        }
    }
    if !cert.check("square_inequality", worst.0, tol.psd_tol) {
        let w = Witness::new().element("a", &samples[worst.1]).value("negativity", worst.0);
        cert.fail(Reason::NotPositive, Some(w));
    }

    // P(a∘b) = P(Pa∘Pb) on the self-adjoint basis
    let images: Vec<BlockMatrix<T>> = units.iter().map(|a| map.apply(a)).collect();
    let mut mres = (0.0, 0, 0);
    for i in 0..units.len() {
        for j in i..units.len() {
            let lhs = map.apply(&units[i].jordan_product(&units[j]).expect("sig"));
            let rhs = map.apply(&images[i].jordan_product(&images[j]).expect("sig"));
            let r = relative(hs_distance(&lhs, &rhs), images[i].hs_norm().as_f64() * images[j].hs_norm().as_f64());
            if r > mres.0 {
                mres = (r, i, j);
            }
        }
    }
    let mult_ok = cert.check("range_jordan_multiplicativity", mres.0, tol.eq_tol);

    let kernel_ok = match split_along(map, tol) {
        Ok(split) => {
            let xs = self_adjoint_basis(&split.kernel_basis, tol);
            let norms: Vec<f64> = xs.iter().map(|x| x.operator_norm().as_f64()).collect();
            let table: Vec<Vec<f64>> = xs
                .iter()
                .map(|a| {
                    xs.iter()
                        .map(|b| map.apply(&a.jordan_product(b).expect("sig")).operator_norm().as_f64())
                        .collect()
                })
                .collect();
            let mut kres = 0.0f64;
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    kres = kres.max(relative(table[i][j], norms[i] * norms[j]));
                }
            }
            let ok = cert.check("jordan_kernel", kres, tol.eq_tol);
            if !ok {
                let w = square_witness(map, &xs, &|i, j| table[i][j]);
                cert.fail(Reason::JordanKernel, w);
            }
            ok
        }
        Err(e) => {
            cert.note(format!("range/kernel split unavailable: {e}"));
            false
        }
    };
    if kernel_ok != mult_ok {
        cert.note(format!("deciders disagree: kernel={kernel_ok}, multiplicativity={mult_ok}"));
        cert.fail(Reason::DecidersDisagree, None);
    }
    if !mult_ok {
        let (r, i, j) = mres;
        let w = Witness::new()
            .element("a", &units[i])
            .element("b", &units[j])
            .value("relative_residual", r);
        cert.fail(Reason::JordanMultiplicativity, Some(w));
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSignature;
    use crate::expectations::{
        central_projection_expectation, corner_compression, diagonal_pinching, zero_diagonal_projection,
    };
    use crate::scalar::c;

    type E = BlockMatrix<f64>;

    fn sig(b: &[usize]) -> AlgebraSignature {
        AlgebraSignature::new(b.to_vec()).unwrap()
    }

    fn central(tol: &Tolerance) -> OperatorMap<f64> {
        let s = sig(&[2, 1]);
        let p = E::block_scalars(&s, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        central_projection_expectation(&p, tol).unwrap()
    }

    #[test]
    fn range_products() {
        let tol = Tolerance::default();
        let s = sig(&[2]);
        let id = OperatorMap::<f64>::identity(&s);
        let x = E::matrix_unit(&s, 0, 0, 1);
        let y = E::matrix_unit(&s, 0, 1, 0);
        assert_eq!(range_triple_product(&id, &x, &y, &x, &tol).unwrap(), x.triple_product(&y, &x).unwrap());

        let pinch = diagonal_pinching::<f64>(&s);
        let e11 = E::matrix_unit(&s, 0, 0, 0);
        assert_eq!(range_jordan_product(&pinch, &e11, &e11, &tol).unwrap(), e11);
        assert!(matches!(
            range_jordan_product(&pinch, &x, &e11, &tol),
            Err(Error::NotInRange { .. })
        ));

        let corner = corner_compression(&e11, &tol).unwrap();
        assert_eq!(range_triple_product(&corner, &e11, &e11, &e11, &tol).unwrap(), e11);
    }

    #[test]
    fn polarization_recovers_triple_product() {
        let s = sig(&[2, 1]);
        let mut smp = Sampler::new(11);
        for _ in 0..20 {
            let x: E = smp.element(&s);
            let y: E = smp.element(&s);
            let z: E = smp.element(&s);
            let err = crate::algebra::distance(&triple_polarization(&x, &y, &z), &x.triple_product(&y, &z).unwrap());
            assert!(err < 1e-12 * (1.0 + x.operator_norm() * y.operator_norm() * z.operator_norm()));
        }
    }

    #[test]
    fn formulas_hold_for_expectations_and_zero_diagonal() {
        let tol = Tolerance::default();
        assert!(expectation_formulas_check(&diagonal_pinching::<f64>(&sig(&[2])), &tol, 1).holds());
        assert!(expectation_formulas_check(&central(&tol), &tol, 1).holds());
        let zd = expectation_formulas_check(&zero_diagonal_projection::<f64>(2).unwrap(), &tol, 1);
        assert!(zd.holds(), "{zd:?}");
        assert!(zd.find_check("jordan_chain").is_none());
    }

    #[test]
    fn triple_certificate_examples() {
        let tol = Tolerance::default();
        let cert = triple_homomorphism_certificate(&central(&tol), &tol);
        assert!(cert.holds(), "{cert:?}");
        assert_eq!(cert.checks.len(), 4);
        assert!(triple_homomorphism_certificate(&OperatorMap::<f64>::identity(&sig(&[3])), &tol).holds());

        let s = sig(&[2]);
        let cert = triple_homomorphism_certificate(&diagonal_pinching::<f64>(&s), &tol);
        assert_eq!(cert.reason, Some(Reason::TripleIdeal));
        let mixed = cert.failure(Reason::MixedKernel).unwrap().witness.as_ref().unwrap();
        let get = |n: &str| mixed.get::<f64>(n, &s).unwrap().unwrap();
        // {e12, e12, e11} = ½e11, untouched by the pinching
        assert_eq!(get("x"), E::matrix_unit(&s, 0, 0, 1));
        assert_eq!(get("y"), E::matrix_unit(&s, 0, 0, 1));
        assert_eq!(get("z"), E::matrix_unit(&s, 0, 0, 0));
        assert!(cert.failure(Reason::KernelSubtriple).is_none());
        assert!(cert.failure(Reason::TripleMultiplicativity).is_some());
    }

    #[test]
    fn jordan_certificate_examples() {
        let tol = Tolerance::default();
        assert!(jordan_homomorphism_certificate_cstar(&central(&tol), &tol).holds());
        let s = sig(&[2]);
        let cert = jordan_homomorphism_certificate_cstar(&diagonal_pinching::<f64>(&s), &tol);
        assert_eq!(cert.reason, Some(Reason::JordanKernel));
        let w = cert.witness.as_ref().unwrap();
        let x = w.get::<f64>("x", &s).unwrap().unwrap();
        assert_eq!(x, &E::matrix_unit(&s, 0, 0, 1) + &E::matrix_unit(&s, 0, 1, 0));
        assert!((w.values["norm_exx"] - 1.0).abs() < 1e-12);
        assert!(w.values["norm_ex"].abs() < 1e-12);
    }

    #[test]
    fn positive_unital_examples() {
        let tol = Tolerance::default();
        let cert = positive_unital_projection_certificate(&central(&tol), &tol, 3);
        assert!(cert.holds(), "{cert:?}");
        assert!(positive_unital_projection_certificate(&OperatorMap::<f64>::identity(&sig(&[2, 1])), &tol, 3).holds());

        let s = sig(&[2]);
        let pinch = diagonal_pinching::<f64>(&s);
        let cert = positive_unital_projection_certificate(&pinch, &tol, 3);
        assert!(cert.find_check("square_inequality").unwrap().passed);
        assert_eq!(cert.reason, Some(Reason::JordanKernel));
        let a = &E::matrix_unit(&s, 0, 0, 1) + &E::matrix_unit(&s, 0, 1, 0);
        assert_eq!(pinch.apply(&(&a * &a)), E::identity(&s));
        assert_eq!(pinch.apply(&a), E::zeros(&s));

        let zd = positive_unital_projection_certificate(&zero_diagonal_projection::<f64>(2).unwrap(), &tol, 3);
        assert_eq!(zd.reason, Some(Reason::NotPositive));
        assert!(zd.failure(Reason::NotUnital).is_some());
    }

    #[test]
    fn contractivity_classification() {
        let tol = Tolerance::default();
        let p = ProjectionOnAlgebra::new(&diagonal_pinching::<f64>(&sig(&[2])), &tol, 1).unwrap();
        assert_eq!(p.contractivity, Contractivity::CertifiedByCp);
        assert!(p.positive && p.unital);
        let zd = ProjectionOnAlgebra::new(&zero_diagonal_projection::<f64>(2).unwrap(), &tol, 1).unwrap();
        assert!(matches!(zd.contractivity, Contractivity::SampledOnly { .. }));
        assert!(!zd.positive && !zd.unital);
    }
}
