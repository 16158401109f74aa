//! Commutative layer: functions on a finite space, expectations induced by
//! retractions, and recovery of the retraction from a homomorphic
//! expectation, including the one-point compactification route.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSignature, BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::{OperatorMap, Provenance};
use crate::linalg::Mat;
use crate::scalar::{Real, C};
use crate::verify::homomorphic_certificate;

/// Label given to the added point of a one-point compactification.
pub const INFINITY_LABEL: &str = "omega";

/// Finite discrete space with labelled points and an optional basepoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSpace {
    labels: Vec<String>,
    basepoint: Option<usize>,
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, basepoint: Option<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSize("a space needs at least one point".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Parse(format!("duplicate point label {l:?}")));
            }
        }
        if let Some(w) = basepoint {
            if w >= labels.len() {
                return Err(Error::Parse(format!("basepoint index {w} out of range")));
            }
        }
        Ok(Self { labels, basepoint })
    }

    /// Points labelled `1..=n`.
    pub fn points(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| i.to_string()).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, t: usize) -> &str {
        &self.labels[t]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn basepoint(&self) -> Option<usize> {
        self.basepoint
    }

    /// The all-ones signature `ℂ ⊕ … ⊕ ℂ` modelling functions on the space.
    pub fn signature(&self) -> AlgebraSignature {
        AlgebraSignature::functions(self.len()).expect("nonempty space")
    }

    /// `X* = X ∪ {ω}` with `ω` as basepoint.
    pub fn compactify(&self) -> Self {
        let mut labels = self.labels.clone();
        let mut name = INFINITY_LABEL.to_string();
        while labels.contains(&name) {
            name.push('\'');
        }
        labels.push(name);
        let n = labels.len();
        Self {
            labels,
            basepoint: Some(n - 1),
        }
    }
}

/// Total map between finite spaces, given by a table of point indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceMap {
    domain: FiniteSpace,
    codomain: FiniteSpace,
    table: Vec<usize>,
}

impl SpaceMap {
    pub fn new(domain: FiniteSpace, codomain: FiniteSpace, table: Vec<usize>) -> Result<Self> {
        if table.len() != domain.len() {
            return Err(Error::Shape(format!(
                "map table has {} entries for {} points",
                table.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&t| t >= codomain.len()) {
            return Err(Error::Shape(format!("map target {bad} outside codomain")));
        }
        Ok(Self {
            domain,
            codomain,
            table,
        })
    }

    /// Self-map of `space`.
    pub fn on(space: &FiniteSpace, table: Vec<usize>) -> Result<Self> {
        Self::new(space.clone(), space.clone(), table)
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        Self::on(space, (0..space.len()).collect()).expect("identity table")
    }

    pub fn domain(&self) -> &FiniteSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteSpace {
        &self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, t: usize) -> usize {
        self.table[t]
    }

    /// `τ∘τ = τ` for a self-map.
    pub fn is_retraction(&self) -> bool {
        self.domain == self.codomain && self.table.iter().all(|&t| self.table[t] == t)
    }

    /// Targets as labels, in domain order.
    pub fn label_table(&self) -> Vec<String> {
        self.table.iter().map(|&t| self.codomain.label(t).to_string()).collect()
    }
}

/// Function on the space as an element of the all-ones signature.
pub fn function<T: Real>(values: &[C<T>]) -> Result<BlockMatrix<T>> {
    let sig = AlgebraSignature::functions(values.len())?;
    BlockMatrix::from_vector(&sig, values)
}

pub fn function_values<T: Real>(f: &BlockMatrix<T>) -> Vec<C<T>> {
    f.to_vector()
}

/// `δ_s` on `n` points.
pub fn delta<T: Real>(n: usize, s: usize) -> BlockMatrix<T> {
    let sig = AlgebraSignature::functions(n).expect("n >= 1");
    BlockMatrix::basis_element(&sig, s)
}

/// Characteristic function of `set` on `n` points.
pub fn indicator<T: Real>(n: usize, set: &[usize]) -> BlockMatrix<T> {
    let sig = AlgebraSignature::functions(n).expect("n >= 1");
    let mut v = vec![C::new(T::zero(), T::zero()); n];
    for &t in set {
        v[t] = C::new(T::one(), T::zero());
    }
    BlockMatrix::from_vector(&sig, &v).expect("length")
}

fn partial_matrix<T: Real>(n: usize, targets: &[Option<usize>]) -> Mat<T> {
    Mat::from_fn(n, n, |t, s| {
        if targets[t] == Some(s) {
            C::new(T::one(), T::zero())
        } else {
            C::new(T::zero(), T::zero())
        }
    })
}

/// `E_τ(f) = f∘τ`.
pub fn expectation_from_retraction<T: Real>(tau: &SpaceMap) -> Result<OperatorMap<T>> {
    if tau.domain != tau.codomain {
        return Err(Error::NotRetraction("domain and codomain differ".into()));
    }
    if let Some(t) = (0..tau.table.len()).find(|&t| tau.table[tau.table[t]] != tau.table[t]) {
        return Err(Error::NotRetraction(format!(
            "τ(τ({0})) ≠ τ({0})",
            tau.domain.label(t)
        )));
    }
    if let Some(w) = tau.domain.basepoint {
        if tau.table[w] != w {
            return Err(Error::BasepointNotFixed);
        }
    }
    let n = tau.domain.len();
    let targets: Vec<Option<usize>> = tau.table.iter().map(|&s| Some(s)).collect();
    let sig = tau.domain.signature();
    Ok(OperatorMap::from_matrix(&sig, partial_matrix(n, &targets))?
        .with_provenance(Provenance::FromSpaceMap(tau.clone())))
}

/// `E(f)(t) = f(τ(t))` on `L` and `0` off `L`, for a retraction of `L`
/// given as optional targets.
pub fn expectation_from_partial<T: Real>(targets: &[Option<usize>]) -> Result<OperatorMap<T>> {
    let n = targets.len();
    let sig = AlgebraSignature::functions(n)?;
    OperatorMap::from_matrix(&sig, partial_matrix(n, targets))
}

/// `E(f)(t) = (f(t) + f(t + m)) / 2` on `2m` points.
pub fn antipodal_average<T: Real>(size: usize) -> Result<OperatorMap<T>> {
    if size < 2 || size % 2 != 0 {
        return Err(Error::InvalidSize(format!(
            "antipodal averaging needs an even size >= 2, got {size}"
        )));
    }
    let m = size / 2;
    let sig = AlgebraSignature::functions(size)?;
    let half = C::new(T::lit(0.5), T::zero());
    let matrix = Mat::from_fn(size, size, |t, s| {
        if s == t || s == (t + m) % size {
            half
        } else {
            C::new(T::zero(), T::zero())
        }
    });
    Ok(OperatorMap::from_matrix(&sig, matrix)?.with_provenance(Provenance::Antipodal(size)))
}

/// The clopen support `L` and the retraction of `L` recovered from `E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    /// Points with `E(1)(t) = 1`.
    pub support: Vec<usize>,
    /// `τ(t)` for `t` in the support, `None` elsewhere.
    pub targets: Vec<Option<usize>>,
}

impl Extraction {
    /// The retraction on the whole space, when the support is everything.
    pub fn retraction(&self, space: &FiniteSpace) -> Option<SpaceMap> {
        let table: Option<Vec<usize>> = self.targets.iter().copied().collect();
        SpaceMap::on(space, table?).ok()
    }
}

fn near<T: Real>(z: C<T>, v: f64, tol: &Tolerance) -> bool {
    let d = ((z.re.as_f64() - v).powi(2) + z.im.as_f64().powi(2)).sqrt();
    d <= tol.eq_bound(1.0)
}

fn binary<T: Real>(z: C<T>, point: usize, tol: &Tolerance) -> Result<bool> {
    if near(z, 1.0, tol) {
        Ok(true)
    } else if near(z, 0.0, tol) {
        Ok(false)
    } else {
        Err(Error::NonBinaryIdempotent {
            point,
            value: z.re.as_f64(),
        })
    }
}

/// Recovers `L = {t : E(1)(t) = 1}` and `τ` on `L` from a homomorphic
/// expectation on functions, so that `E(f)(t) = f(τ(t))` on `L` and `0` off it.
pub fn extract_retraction<T: Real>(map: &OperatorMap<T>, tol: &Tolerance) -> Result<Extraction> {
    let sig = map.signature();
    if !sig.is_commutative() {
        return Err(Error::Shape(format!("extraction needs a function algebra, got {sig}")));
    }
    let (residual, bound) = map.idempotency_residual(tol);
    if residual > bound {
        return Err(Error::NotIdempotent { residual, bound });
    }
    let cert = homomorphic_certificate(map, tol);
    if !cert.holds() {
        let gap = cert
            .witness
            .as_ref()
            .and_then(|w| w.values.get("gap").copied())
            .unwrap_or(f64::NAN);
        return Err(Error::NotHomomorphic {
            gap,
            certificate: Box::new(cert),
        });
    }
    let n = sig.dim();
    let m = map.matrix();
    let one = map.apply(&BlockMatrix::identity(sig)).to_vector();
    let mut support = Vec::new();
    for (t, &v) in one.iter().enumerate() {
        if binary(v, t, tol)? {
            support.push(t);
        }
    }
    let mut targets = vec![None; n];
    for t in 0..n {
        let mut hits = Vec::new();
        for s in 0..n {
            if binary(m[(t, s)], t, tol)? && m[(t, s)].re.as_f64() > 0.5 {
                hits.push(s);
            }
        }
        let in_support = support.binary_search(&t).is_ok();
        match (in_support, hits.as_slice()) {
            (true, [s]) => targets[t] = Some(*s),
            (false, []) => {}
            _ => return Err(Error::AmbiguousTarget { point: t }),
        }
    }
    for t in 0..n {
        if let Some(s) = targets[t] {
            if targets[s] != Some(s) {
                return Err(Error::NotRetraction(format!("τ(τ({t})) ≠ τ({t})")));
            }
        }
    }
    let rebuilt = expectation_from_partial::<T>(&targets)?;
    let err = (rebuilt.matrix() - m).max_abs().as_f64();
    if err > tol.eq_bound(1.0) {
        return Err(Error::NotRetraction(format!(
            "round trip differs by {err:.3e}"
        )));
    }
    Ok(Extraction { support, targets })
}

/// `E♯` on functions over `X* = X ∪ {ω}`: `E♯(g)|_X = E(g|_X − g(ω)) + g(ω)`
/// and `E♯(g)(ω) = g(ω)`, the unitisation `E♯(h, α) = (E(h), α)` read
/// through `g ↦ (g|_X − g(ω), g(ω))`.
pub fn unitise<T: Real>(map: &OperatorMap<T>, space: &FiniteSpace) -> Result<(FiniteSpace, OperatorMap<T>)> {
    let sig = map.signature();
    if sig != &space.signature() {
        return Err(Error::SignatureMismatch {
            left: sig.blocks().to_vec(),
            right: space.signature().blocks().to_vec(),
        });
    }
    let n = space.len();
    let star = space.compactify();
    let m = map.matrix();
    let e_one: Vec<C<T>> = map.apply(&BlockMatrix::identity(sig)).to_vector();
    let one = C::new(T::one(), T::zero());
    let zero = C::new(T::zero(), T::zero());
    let matrix = Mat::from_fn(n + 1, n + 1, |t, s| match (t < n, s < n) {
        (true, true) => m[(t, s)],
        (true, false) => one - e_one[t],
        (false, true) => zero,
        (false, false) => one,
    });
    let sharp = OperatorMap::from_matrix(&star.signature(), matrix)?;
    Ok((star, sharp))
}

/// Result of extracting through the one-point compactification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitisedRetraction {
    pub space: FiniteSpace,
    /// Retraction of `X*` fixing `ω`.
    pub rho: SpaceMap,
    pub support: Vec<usize>,
}

/// Forms `E♯`, extracts its retraction `ρ` of `X*`, and checks `ρ(ω) = ω`
/// and `E(f) = (f̃∘ρ)|_X` with `f̃` the extension of `f` by `f̃(ω) = 0`.
pub fn unitise_and_extract<T: Real>(
    map: &OperatorMap<T>,
    space: &FiniteSpace,
    tol: &Tolerance,
) -> Result<UnitisedRetraction> {
    let (star, sharp) = unitise(map, space)?;
    let ext = extract_retraction(&sharp, tol)?;
    let omega = star.basepoint().expect("compactified space has a basepoint");
    let table: Vec<usize> = ext.targets.iter().map(|t| t.unwrap_or(omega)).collect();
    if table[omega] != omega {
        return Err(Error::BasepointNotFixed);
    }
    let rho = SpaceMap::on(&star, table)?;
    let n = space.len();
    let restricted: Vec<Option<usize>> = (0..n)
        .map(|t| Some(rho.apply(t)).filter(|&s| s != omega))
        .collect();
    let back = expectation_from_partial::<T>(&restricted)?;
    let err = (back.matrix() - map.matrix()).max_abs().as_f64();
    if err > tol.eq_bound(1.0) {
        return Err(Error::NotRetraction(format!(
            "restriction to X differs by {err:.3e}"
        )));
    }
    Ok(UnitisedRetraction {
        space: star,
        rho,
        support: ext.support,
    })
}

/// Every retraction of an `n`-point space, in lexicographic table order.
pub fn all_retractions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut table = vec![0usize; n];
    loop {
        if (0..n).all(|t| table[table[t]] == table[t]) {
            out.push(table.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            table[i] += 1;
            if table[i] < n {
                break;
            }
            table[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use crate::verify::{homomorphic_certificate, verify_expectation, Reason};

    fn three() -> FiniteSpace {
        FiniteSpace::points(3).unwrap()
    }

    #[test]
    fn retraction_expectation_examples() {
        let x = three();
        let tau = SpaceMap::on(&x, vec![0, 0, 2]).unwrap();
        let e = expectation_from_retraction::<f64>(&tau).unwrap();
        assert_eq!(
            function_values(&e.apply(&delta(3, 0))),
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
        );
        let tol = Tolerance::default();
        assert!(verify_expectation(&e, &tol, 1).holds());
        assert!(homomorphic_certificate(&e, &tol).holds());

        let id = expectation_from_retraction::<f64>(&SpaceMap::identity(&x)).unwrap();
        assert_eq!(id.matrix(), &Mat::identity(3));

        let constant = expectation_from_retraction::<f64>(&SpaceMap::on(&x, vec![0, 0, 0]).unwrap()).unwrap();
        let f = function(&[c(4.0, 1.0), c(2.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(function_values(&constant.apply(&f)), vec![c(4.0, 1.0); 3]);
    }

    #[test]
    fn rejects_non_retractions_and_moved_basepoints() {
        let x = three();
        let swap = SpaceMap::on(&x, vec![1, 0, 2]).unwrap();
        assert!(matches!(expectation_from_retraction::<f64>(&swap), Err(Error::NotRetraction(_))));
        let based = FiniteSpace::new(vec!["a".into(), "b".into()], Some(1)).unwrap();
        let tau = SpaceMap::on(&based, vec![0, 0]).unwrap();
        assert!(matches!(expectation_from_retraction::<f64>(&tau), Err(Error::BasepointNotFixed)));
    }

    #[test]
    fn extraction_round_trip_and_zero_map() {
        let tol = Tolerance::default();
        let x = three();
        let tau = SpaceMap::on(&x, vec![0, 0, 2]).unwrap();
        let ext = extract_retraction(&expectation_from_retraction::<f64>(&tau).unwrap(), &tol).unwrap();
        assert_eq!(ext.support, vec![0, 1, 2]);
        assert_eq!(ext.retraction(&x).unwrap(), tau);

        let zero = OperatorMap::<f64>::zero(&x.signature());
        let ext = extract_retraction(&zero, &tol).unwrap();
        assert!(ext.support.is_empty());
        assert_eq!(ext.targets, vec![None; 3]);
    }

    #[test]
    fn antipodal_examples() {
        let tol = Tolerance::default();
        let e = antipodal_average::<f64>(4).unwrap();
        assert_eq!(
            function_values(&e.apply(&delta(4, 0))),
            vec![c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]
        );
        assert!(verify_expectation(&e, &tol, 1).holds());
        let cert = homomorphic_certificate(&e, &tol);
        assert_eq!(cert.reason, Some(Reason::GramNonzero));
        let w = cert.witness.as_ref().unwrap();
        assert!((w.values["gap"] - 0.25).abs() < 1e-12);
        let x = w.get::<f64>("x", e.signature()).unwrap().unwrap();
        assert_eq!(function_values(&x), vec![c(0.5, 0.0), c(0.0, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]);
        match extract_retraction(&e, &tol) {
            Err(Error::NotHomomorphic { gap, .. }) => assert!((gap - 0.25).abs() < 1e-12),
            other => panic!("expected NotHomomorphic, got {other:?}"),
        }

        let two = antipodal_average::<f64>(2).unwrap();
        let f = function(&[c(1.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(function_values(&two.apply(&f)), vec![c(2.0, 0.0); 2]);
        assert!(matches!(extract_retraction(&two, &tol), Err(Error::NotHomomorphic { .. })));
        assert!(antipodal_average::<f64>(3).is_err());
    }

    #[test]
    fn unitisation_examples() {
        let tol = Tolerance::default();
        let x = three();
        let tau = SpaceMap::on(&x, vec![0, 0, 2]).unwrap();
        let u = unitise_and_extract(&expectation_from_retraction::<f64>(&tau).unwrap(), &x, &tol).unwrap();
        assert_eq!(&u.rho.table()[..3], tau.table());
        assert_eq!(u.rho.apply(3), 3);

        let zero = OperatorMap::<f64>::zero(&x.signature());
        let u = unitise_and_extract(&zero, &x, &tol).unwrap();
        assert_eq!(u.rho.table(), &[3, 3, 3, 3]);

        // E(f) = f∘τ on L = {0, 1}, zero on {2, 3}
        let four = FiniteSpace::points(4).unwrap();
        let partial = expectation_from_partial::<f64>(&[Some(1), Some(1), None, None]).unwrap();
        let u = unitise_and_extract(&partial, &four, &tol).unwrap();
        assert_eq!(u.rho.table(), &[1, 1, 4, 4, 4]);
        let ext = extract_retraction(&partial, &tol).unwrap();
        assert_eq!(ext.support, vec![0, 1]);
    }

    #[test]
    fn retraction_counts() {
        // idempotent self-maps of an n-set: 1, 3, 10, 41
        let counts: Vec<usize> = (1..=4).map(|n| all_retractions(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 10, 41]);
    }
}
