//! Deterministic instance corpora: the standard mixed corpus used by the
//! test suites and the per-kind generator behind `ncretract generate`.
//!
//! Expected verdicts are filled in only where the construction decides them.

use std::str::FromStr;

use crate::algebra::{AlgebraSignature, BlockMatrix, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::{
    central_projection_expectation, diagonal_pinching, BlockLinearMap, OperatorMap, Provenance,
};
use crate::gelfand::FiniteSpace;
use crate::instance::{Instance, MapSpec};
use crate::linalg::Mat;
use crate::sampling::Sampler;
use crate::scalar::{c, C};
use crate::verify::Property;

pub const DEFAULT_SEED: u64 = 42;

/// Entry-wise noise added by the `dense-perturbed` kind.
pub const PERTURBATION: f64 = 1e-5;

/// Signatures swept by [`standard_corpus`].
pub const STANDARD_SIGNATURES: [&[usize]; 8] = [
    &[2],
    &[3],
    &[1, 1],
    &[2, 1],
    &[1, 1, 1],
    &[2, 2],
    &[3, 1],
    &[4, 3, 2, 1, 1],
];

type E = BlockMatrix<f64>;

fn sig(blocks: &[usize]) -> AlgebraSignature {
    AlgebraSignature::new(blocks.to_vec()).expect("nonempty positive blocks")
}

fn sig_name(s: &AlgebraSignature) -> String {
    s.blocks().iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
}

fn block_diagonal(s: &AlgebraSignature, ranks: &[usize]) -> E {
    let blocks = s
        .blocks()
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| Mat::from_fn(n, n, |i, j| if i == j && i < r { c(1.0, 0.0) } else { c(0.0, 0.0) }))
        .collect();
    E::from_blocks(s, blocks).expect("shapes follow signature")
}

fn central(s: &AlgebraSignature, on: &[bool]) -> E {
    let ranks: Vec<usize> = s.blocks().iter().zip(on).map(|(&n, &b)| if b { n } else { 0 }).collect();
    block_diagonal(s, &ranks)
}

fn full_or_empty(s: &AlgebraSignature, ranks: &[usize]) -> bool {
    s.blocks().iter().zip(ranks).all(|(&n, &r)| r == 0 || r == n)
}

/// Random pinching family: in each block a random unitary frame with its
/// diagonal positions grouped into between one and `n` parts. Returns the
/// family and the number of parts per block.
fn random_pinching_family(s: &AlgebraSignature, sampler: &mut Sampler) -> (Vec<E>, Vec<usize>) {
    let mut family = Vec::new();
    let mut parts = Vec::new();
    for (b, &n) in s.blocks().iter().enumerate() {
        let u: Mat<f64> = sampler.unitary(n);
        let groups = 1 + sampler.index(n);
        let mut group_of: Vec<usize> = (0..n).map(|k| if k < groups { k } else { sampler.index(groups) }).collect();
        // shuffle which positions seed the groups
        for k in (1..n).rev() {
            let j = sampler.index(k + 1);
            group_of.swap(k, j);
        }
        for g in 0..groups {
            let frame: Vec<Vec<C<f64>>> = (0..n).filter(|&k| group_of[k] == g).map(|k| u.column(k)).collect();
            let f = Mat::from_columns(n, &frame);
            let blocks = s
                .blocks()
                .iter()
                .enumerate()
                .map(|(bb, &m)| if bb == b { &f * &f.adjoint() } else { Mat::zeros(m, m) })
                .collect();
            family.push(E::from_blocks(s, blocks).expect("shapes follow signature"));
        }
        parts.push(groups);
    }
    (family, parts)
}

fn random_central_support(s: &AlgebraSignature, sampler: &mut Sampler) -> Vec<bool> {
    let mut on: Vec<bool> = (0..s.num_blocks()).map(|_| sampler.coin()).collect();
    if !on.iter().any(|&b| b) {
        let k = sampler.index(on.len());
        on[k] = true;
    }
    on
}

fn random_ranks(s: &AlgebraSignature, sampler: &mut Sampler) -> Vec<usize> {
    s.blocks().iter().map(|&n| sampler.index(n + 1)).collect()
}

fn pinching_instance(s: &AlgebraSignature, name: String, family: &[E], parts: &[usize]) -> Instance {
    Instance::new(Some(s), MapSpec::pinching(family))
        .named(name)
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, parts.iter().all(|&g| g == 1))
}

fn corner_instance(s: &AlgebraSignature, name: String, e: &E, ranks: &[usize]) -> Instance {
    let hom = full_or_empty(s, ranks);
    Instance::new(Some(s), MapSpec::corner(e))
        .named(name)
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, hom)
        .expecting(Property::Central, hom)
}

fn central_instance(s: &AlgebraSignature, name: String, p: &E) -> Instance {
    Instance::new(Some(s), MapSpec::central(p))
        .named(name)
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, true)
        .expecting(Property::Central, true)
}

fn clock_and_shift(n: usize) -> (Mat<f64>, Mat<f64>) {
    let theta = 2.0 * std::f64::consts::PI / n as f64;
    let z = Mat::from_fn(n, n, |i, j| {
        if i == j {
            let a = theta * i as f64;
            c(a.cos(), a.sin())
        } else {
            c(0.0, 0.0)
        }
    });
    let x = Mat::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) });
    (z, x)
}

fn powers(m: &Mat<f64>, k: usize) -> Mat<f64> {
    (0..k).fold(Mat::identity(m.rows()), |acc, _| &acc * m)
}

fn single_block(s: &AlgebraSignature, m: Mat<f64>) -> E {
    E::from_blocks(s, vec![m]).expect("single block")
}

/// `{Zᵏ}`: averaging gives the diagonal pinching of `M_n`.
fn clock_group(n: usize) -> Vec<E> {
    let s = sig(&[n]);
    let (z, _) = clock_and_shift(n);
    (0..n).map(|k| single_block(&s, powers(&z, k))).collect()
}

/// `{XᵃZᵇ}`: averaging gives the normalised trace times `1`.
fn weyl_group(n: usize) -> Vec<E> {
    let s = sig(&[n]);
    let (z, x) = clock_and_shift(n);
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            out.push(single_block(&s, &powers(&x, a) * &powers(&z, b)));
        }
    }
    out
}

/// `x ↦ φ(x)·1` for the state `φ(x) = Σ_b Σ_k w_{b,k} x_b[k,k]`.
fn weighted_state(s: &AlgebraSignature, weights: &[Vec<f64>]) -> OperatorMap<f64> {
    let w = weights.to_vec();
    OperatorMap::from_fn(s, Provenance::Dense, move |x| {
        let mut v = c(0.0, 0.0);
        for (b, wb) in w.iter().enumerate() {
            for (k, &wk) in wb.iter().enumerate() {
                v += x.block(b)[(k, k)] * wk;
            }
        }
        E::identity(x.signature()).scale(v)
    })
}

/// `m` placed in the top-left corner of block `b`, zero elsewhere.
fn embed_block(cod: &AlgebraSignature, b: usize, m: &Mat<f64>) -> E {
    let blocks = cod
        .blocks()
        .iter()
        .enumerate()
        .map(|(bb, &n)| {
            if bb != b {
                return Mat::zeros(n, n);
            }
            Mat::from_fn(n, n, |i, j| if i < m.rows() && j < m.cols() { m[(i, j)] } else { c(0.0, 0.0) })
        })
        .collect();
    E::from_blocks(cod, blocks).expect("shapes follow signature")
}

/// Graphs of `*`-homomorphisms, each of which gives a homomorphic expectation.
fn homomorphism_graphs(sampler: &mut Sampler) -> Vec<(String, BlockLinearMap<f64>)> {
    let c1 = sig(&[1]);
    let c2 = sig(&[1, 1]);
    let m2 = sig(&[2]);
    let m3 = sig(&[3]);
    let u: Mat<f64> = sampler.unitary(2);
    let ut = u.adjoint();
    vec![
        ("graph-identity-C".into(), BlockLinearMap::from_fn(&c1, &c1, |x| x.clone())),
        (
            "graph-unital-C-M2".into(),
            BlockLinearMap::from_fn(&c1, &m2, |x| E::identity(&m2).scale(x.block(0)[(0, 0)])),
        ),
        (
            "graph-conjugation-M2".into(),
            BlockLinearMap::from_fn(&m2, &m2, |x| single_block(&m2, &(&u * x.block(0)) * &ut)),
        ),
        (
            "graph-diagonal-C2-M2".into(),
            BlockLinearMap::from_fn(&c2, &m2, |x| {
                let d = Mat::from_fn(2, 2, |i, j| if i == j { x.block(i)[(0, 0)] } else { c(0.0, 0.0) });
                single_block(&m2, d)
            }),
        ),
        (
            "graph-corner-M2-M3".into(),
            BlockLinearMap::from_fn(&m2, &m3, |x| embed_block(&m3, 0, x.block(0))),
        ),
    ]
}

fn retraction_instance(name: String, n: usize, table: &[usize]) -> Instance {
    let space = FiniteSpace::points(n).expect("n > 0");
    let labels = table.iter().map(|&t| space.label(t).to_string()).collect();
    Instance::new(None, MapSpec::Retraction { table: labels })
        .with_space(&space)
        .named(name)
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, true)
        .expecting(Property::Retraction, true)
}

fn antipodal_instance(size: usize) -> Instance {
    Instance::new(None, MapSpec::Antipodal { size })
        .named(format!("antipodal-{size}"))
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, false)
        .expecting(Property::Retraction, false)
}

fn perturbed(s: &AlgebraSignature, name: String, map: &OperatorMap<f64>, sampler: &mut Sampler) -> Instance {
    let d = s.dim();
    let m = Mat::from_fn(d, d, |i, j| map.matrix()[(i, j)] + c(PERTURBATION * sampler.gaussian(), 0.0));
    let noisy = OperatorMap::from_matrix(s, m).expect("same dimension");
    Instance::new(Some(s), MapSpec::dense(&noisy))
        .named(name)
        .expecting(Property::ConditionalExpectation, false)
}

/// The mixed corpus: every standard construction on every signature in
/// [`STANDARD_SIGNATURES`], plus group averages, graphs, retractions,
/// antipodal averages, states, and a handful of maps that are not
/// conditional expectations.
pub fn standard_corpus(seed: u64) -> Vec<Instance> {
    let mut sampler = Sampler::new(seed);
    let tol = Tolerance::default();
    let mut out = Vec::new();

    for blocks in STANDARD_SIGNATURES {
        let s = sig(blocks);
        let tag = sig_name(&s);

        let parts: Vec<usize> = s.blocks().to_vec();
        let mut units = Vec::new();
        for (b, &n) in s.blocks().iter().enumerate() {
            for k in 0..n {
                units.push(E::matrix_unit(&s, b, k, k));
            }
        }
        out.push(pinching_instance(&s, format!("diagonal-pinching-{tag}"), &units, &parts));

        let (family, parts) = random_pinching_family(&s, &mut sampler);
        out.push(pinching_instance(&s, format!("random-pinching-{tag}"), &family, &parts));

        let ranks: Vec<usize> = s
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, &n)| if b % 2 == 0 { n.div_ceil(2) } else { n / 2 })
            .collect();
        let e = block_diagonal(&s, &ranks);
        out.push(corner_instance(&s, format!("diagonal-corner-{tag}"), &e, &ranks));

        let ranks = random_ranks(&s, &mut sampler);
        let e: E = sampler.projection(&s, &ranks);
        out.push(corner_instance(&s, format!("random-corner-{tag}"), &e, &ranks));

        let on = random_central_support(&s, &mut sampler);
        let p = central(&s, &on);
        out.push(central_instance(&s, format!("central-{tag}"), &p));

        let (family, parts) = random_pinching_family(&s, &mut sampler);
        let pinch = crate::expectations::pinching(&s, &family, &tol).expect("valid family");
        let ep = central_projection_expectation(&p, &tol).expect("central projection");
        let composed = ep.compose(&pinch).expect("same algebra");
        let hom = parts.iter().zip(&on).all(|(&g, &b)| !b || g == 1);
        out.push(
            Instance::new(Some(&s), MapSpec::dense(&composed))
                .named(format!("central-pinching-{tag}"))
                .expecting(Property::ConditionalExpectation, true)
                .expecting(Property::Homomorphic, hom),
        );
    }

    for n in [2, 3] {
        let s = sig(&[n]);
        for (kind, group) in [("clock", clock_group(n)), ("weyl", weyl_group(n))] {
            out.push(
                Instance::new(Some(&s), MapSpec::group_average(&group))
                    .named(format!("{kind}-average-{n}"))
                    .expecting(Property::ConditionalExpectation, true)
                    .expecting(Property::Homomorphic, false),
            );
        }
    }

    for (name, phi) in homomorphism_graphs(&mut sampler) {
        let s = phi.domain().direct_sum(phi.codomain());
        out.push(
            Instance::new(Some(&s), MapSpec::graph(&phi))
                .named(name)
                .expecting(Property::ConditionalExpectation, true)
                .expecting(Property::Homomorphic, true),
        );
    }

    for (n, table) in [
        (2, vec![0, 1]),
        (3, vec![0, 0, 2]),
        (4, vec![0, 0, 2, 2]),
        (4, vec![3, 3, 3, 3]),
        (5, vec![1, 1, 1, 4, 4]),
    ] {
        let name = format!(
            "retraction-{}",
            table.iter().map(|t| (t + 1).to_string()).collect::<Vec<_>>().join("")
        );
        out.push(retraction_instance(name, n, &table));
    }

    for size in [2, 4, 6] {
        out.push(antipodal_instance(size));
    }

    let s21 = sig(&[2, 1]);
    out.push(
        Instance::new(Some(&s21), MapSpec::dense(&weighted_state(&s21, &[vec![0.3, 0.2], vec![0.5]])))
            .named("state-2-1")
            .expecting(Property::ConditionalExpectation, true)
            .expecting(Property::Homomorphic, false),
    );
    let s111 = sig(&[1, 1, 1]);
    out.push(
        Instance::new(
            Some(&s111),
            MapSpec::dense(&weighted_state(&s111, &[vec![0.5], vec![0.25], vec![0.25]])),
        )
        .named("state-1-1-1")
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, false),
    );
    out.push(
        Instance::new(
            Some(&s111),
            MapSpec::dense(&weighted_state(&s111, &[vec![0.0], vec![1.0], vec![0.0]])),
        )
        .named("character-1-1-1")
        .expecting(Property::ConditionalExpectation, true)
        .expecting(Property::Homomorphic, true)
        .expecting(Property::Retraction, true),
    );
    out.push(
        central_instance(&s111, "central-commutative-1-1-1".into(), &central(&s111, &[true, false, true]))
            .expecting(Property::Retraction, true),
    );

    for n in [2, 3] {
        out.push(
            Instance::new(None, MapSpec::ZeroDiagonal { n })
                .named(format!("zero-diagonal-{n}"))
                .expecting(Property::ConditionalExpectation, false),
        );
    }
    let s11 = sig(&[1, 1]);
    let bases: [(String, AlgebraSignature, OperatorMap<f64>); 3] = [
        (
            "perturbed-central-2-1".into(),
            s21.clone(),
            central_projection_expectation(&central(&s21, &[true, false]), &tol).expect("central"),
        ),
        (
            "perturbed-retraction-3".into(),
            s111.clone(),
            crate::gelfand::expectation_from_partial(&[Some(0), Some(0), Some(2)]).expect("retraction"),
        ),
        ("perturbed-identity-1-1".into(), s11.clone(), diagonal_pinching(&s11)),
    ];
    for (name, s, map) in bases {
        out.push(perturbed(&s, name, &map, &mut sampler));
    }
    let c1 = sig(&[1]);
    let doubling = BlockLinearMap::from_fn(&c1, &c1, |x| x.scale_real(2.0));
    out.push(
        Instance::new(Some(&s11), MapSpec::graph(&doubling))
            .named("graph-doubling-C")
            .expecting(Property::ConditionalExpectation, false),
    );

    for inst in &mut out {
        inst.seed = Some(seed);
    }
    out
}

/// What `ncretract generate` can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenerateKind {
    Pinching,
    Central,
    Corner,
    Graph,
    Retraction,
    Antipodal,
    DensePerturbed,
}

impl FromStr for GenerateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pinching" => GenerateKind::Pinching,
            "central" => GenerateKind::Central,
            "corner" => GenerateKind::Corner,
            "graph" => GenerateKind::Graph,
            "retraction" => GenerateKind::Retraction,
            "antipodal" => GenerateKind::Antipodal,
            "dense-perturbed" => GenerateKind::DensePerturbed,
            other => return Err(Error::InvalidSize(format!("unknown corpus kind {other:?}"))),
        })
    }
}

/// Size parameters for [`generate`]; which ones are needed depends on the kind.
#[derive(Clone, Debug, Default)]
pub struct GenerateParams {
    pub blocks: Option<Vec<usize>>,
    pub points: Option<usize>,
    pub size: Option<usize>,
}

impl GenerateParams {
    fn signature(&self) -> Result<AlgebraSignature> {
        let blocks = self
            .blocks
            .clone()
            .ok_or_else(|| Error::InvalidSize("this kind needs --blocks".into()))?;
        AlgebraSignature::new(blocks).map_err(|e| Error::InvalidSize(e.to_string()))
    }
}

fn all_rank_tuples(s: &AlgebraSignature) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in s.blocks() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=n).map(move |r| {
                    let mut t = prefix.clone();
                    t.push(r);
                    t
                })
            })
            .collect();
    }
    out
}

fn random_retraction(n: usize, sampler: &mut Sampler) -> Vec<usize> {
    let mut fixed: Vec<bool> = (0..n).map(|_| sampler.coin()).collect();
    if !fixed.iter().any(|&f| f) {
        let k = sampler.index(n);
        fixed[k] = true;
    }
    let image: Vec<usize> = (0..n).filter(|&t| fixed[t]).collect();
    (0..n)
        .map(|t| if fixed[t] { t } else { image[sampler.index(image.len())] })
        .collect()
}

/// Generates `count` instances of one kind. Corners enumerate every rank
/// tuple (`count` frames each, the first diagonal) and antipodal gives a
/// single instance.
pub fn generate(kind: GenerateKind, params: &GenerateParams, count: usize, seed: u64) -> Result<Vec<Instance>> {
    if count == 0 {
        return Err(Error::InvalidSize("count must be positive".into()));
    }
    let mut sampler = Sampler::new(seed);
    let tol = Tolerance::default();
    let mut out = Vec::new();
    match kind {
        GenerateKind::Pinching => {
            let s = params.signature()?;
            for i in 0..count {
                let (family, parts) = random_pinching_family(&s, &mut sampler);
                out.push(pinching_instance(&s, format!("pinching-{i:03}"), &family, &parts));
            }
        }
        GenerateKind::Central => {
            let s = params.signature()?;
            for i in 0..count {
                let p = central(&s, &random_central_support(&s, &mut sampler));
                out.push(central_instance(&s, format!("central-{i:03}"), &p));
            }
        }
        GenerateKind::Corner => {
            let s = params.signature()?;
            for ranks in all_rank_tuples(&s) {
                let tag = ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("-");
                for i in 0..count {
                    let e = if i == 0 {
                        block_diagonal(&s, &ranks)
                    } else {
                        sampler.projection(&s, &ranks)
                    };
                    out.push(corner_instance(&s, format!("corner-{tag}-{i:03}"), &e, &ranks));
                }
            }
        }
        GenerateKind::Graph => {
            let s = params.signature()?;
            for i in 0..count {
                let u = sampler.block_unitary::<f64>(&s);
                let ua = u.adjoint();
                let phi = BlockLinearMap::from_fn(&s, &s, |x| &(&u * x) * &ua);
                let sum = s.direct_sum(&s);
                out.push(
                    Instance::new(Some(&sum), MapSpec::graph(&phi))
                        .named(format!("graph-{i:03}"))
                        .expecting(Property::ConditionalExpectation, true)
                        .expecting(Property::Homomorphic, true),
                );
            }
        }
        GenerateKind::Retraction => {
            let n = params
                .points
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::InvalidSize("retraction needs --points > 0".into()))?;
            for i in 0..count {
                let table = random_retraction(n, &mut sampler);
                out.push(retraction_instance(format!("retraction-{i:03}"), n, &table));
            }
        }
        GenerateKind::Antipodal => {
            let size = params
                .size
                .ok_or_else(|| Error::InvalidSize("antipodal needs --size".into()))?;
            crate::gelfand::antipodal_average::<f64>(size)?;
            out.push(antipodal_instance(size));
        }
        GenerateKind::DensePerturbed => {
            let s = params.signature()?;
            for i in 0..count {
                let p = central(&s, &random_central_support(&s, &mut sampler));
                let map = central_projection_expectation(&p, &tol)?;
                out.push(perturbed(&s, format!("dense-perturbed-{i:03}"), &map, &mut sampler));
            }
        }
    }
    for inst in &mut out {
        inst.seed = Some(seed);
    }
    Ok(out)
}
