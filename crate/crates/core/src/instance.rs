//! TOML instance files: an algebra or finite space, a map specification,
//! optional tolerance overrides, a seed and expected verdicts.
//!
//! ```toml
//! version = 1
//! name = "pinching-m2"
//! signature = [2]
//!
//! [map]
//! kind = "pinching"
//! projections = [
//!   [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]],
//!   [[[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]],
//! ]
//!
//! [expect]
//! homomorphic = false
//! ```
//!
//! Elements are nested as blocks → rows → `[re, im]`; dense matrices are
//! row-major lists of `[re, im]` pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSignature, BlockMatrix, ElementRepr, Tolerance};
use crate::error::{Error, Result};
use crate::expectations::{
    central_projection_expectation, corner_compression, graph_expectation, group_average, pinching,
    zero_diagonal_projection, BlockLinearMap, OperatorMap,
};
use crate::gelfand::{antipodal_average, expectation_from_retraction, FiniteSpace, SpaceMap};
use crate::linalg::Mat;
use crate::scalar::{c, Real};
use crate::verify::Property;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceSpec>,
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
}

impl ToleranceSpec {
    pub fn apply(&self, base: &Tolerance) -> Result<Tolerance> {
        Tolerance::new(
            self.eq_tol.unwrap_or(base.eq_tol),
            self.psd_tol.unwrap_or(base.psd_tol),
            self.rank_tol.unwrap_or(base.rank_tol),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Pinching {
        projections: Vec<ElementRepr>,
    },
    GroupAverage {
        unitaries: Vec<ElementRepr>,
    },
    Central {
        projection: ElementRepr,
    },
    Corner {
        projection: ElementRepr,
    },
    /// Graph of `φ: domain → codomain`, a `dim(codomain) × dim(domain)` matrix.
    Graph {
        domain: Vec<usize>,
        codomain: Vec<usize>,
        matrix: Vec<[f64; 2]>,
    },
    /// Targets of each point of `[space]`, by label.
    Retraction {
        table: Vec<String>,
    },
    Antipodal {
        size: usize,
    },
    ZeroDiagonal {
        n: usize,
    },
    Dense {
        matrix: Vec<[f64; 2]>,
    },
}

impl MapSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MapSpec::Pinching { .. } => "pinching",
            MapSpec::GroupAverage { .. } => "group_average",
            MapSpec::Central { .. } => "central",
            MapSpec::Corner { .. } => "corner",
            MapSpec::Graph { .. } => "graph",
            MapSpec::Retraction { .. } => "retraction",
            MapSpec::Antipodal { .. } => "antipodal",
            MapSpec::ZeroDiagonal { .. } => "zero_diagonal",
            MapSpec::Dense { .. } => "dense",
        }
    }

    pub fn pinching<T: Real>(projections: &[BlockMatrix<T>]) -> Self {
        MapSpec::Pinching {
            projections: projections.iter().map(BlockMatrix::to_repr).collect(),
        }
    }

    pub fn group_average<T: Real>(unitaries: &[BlockMatrix<T>]) -> Self {
        MapSpec::GroupAverage {
            unitaries: unitaries.iter().map(BlockMatrix::to_repr).collect(),
        }
    }

    pub fn central<T: Real>(p: &BlockMatrix<T>) -> Self {
        MapSpec::Central { projection: p.to_repr() }
    }

    pub fn corner<T: Real>(e: &BlockMatrix<T>) -> Self {
        MapSpec::Corner { projection: e.to_repr() }
    }

    pub fn graph<T: Real>(phi: &BlockLinearMap<T>) -> Self {
        MapSpec::Graph {
            domain: phi.domain().blocks().to_vec(),
            codomain: phi.codomain().blocks().to_vec(),
            matrix: row_major(phi.matrix()),
        }
    }

    pub fn dense<T: Real>(map: &OperatorMap<T>) -> Self {
        MapSpec::Dense {
            matrix: row_major(map.matrix()),
        }
    }
}

fn row_major<T: Real>(m: &Mat<T>) -> Vec<[f64; 2]> {
    m.as_slice().iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()
}

fn from_row_major(rows: usize, cols: usize, data: &[[f64; 2]]) -> Result<Mat<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Shape(format!(
            "matrix has {} entries, expected {rows}x{cols} = {}",
            data.len(),
            rows * cols
        )));
    }
    Ok(Mat::from_fn(rows, cols, |r, col| {
        let [re, im] = data[r * cols + col];
        c(re, im)
    }))
}

/// A parsed instance turned into concrete objects.
#[derive(Clone, Debug)]
pub struct BuiltInstance {
    pub signature: AlgebraSignature,
    pub map: OperatorMap<f64>,
    pub space: Option<FiniteSpace>,
    /// Projection defining a central or corner map.
    pub projection: Option<BlockMatrix<f64>>,
}

impl Instance {
    pub fn new(signature: Option<&AlgebraSignature>, map: MapSpec) -> Self {
        Self {
            version: FORMAT_VERSION,
            name: None,
            seed: None,
            signature: signature.map(|s| s.blocks().to_vec()),
            space: None,
            tolerance: None,
            map,
            expect: BTreeMap::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_space(mut self, space: &FiniteSpace) -> Self {
        self.space = Some(SpaceSpec {
            points: space.labels().to_vec(),
            basepoint: space.basepoint().map(|w| space.label(w).to_string()),
        });
        self
    }

    pub fn expecting(mut self, property: Property, holds: bool) -> Self {
        self.expect.insert(property.key().to_string(), holds);
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let inst: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if inst.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported instance version {} (expected {FORMAT_VERSION})",
                inst.version
            )));
        }
        for key in inst.expect.keys() {
            if Property::from_key(key).is_none() {
                return Err(Error::Parse(format!("unknown expectation key {key:?}")));
            }
        }
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn tolerance(&self, base: &Tolerance) -> Result<Tolerance> {
        match &self.tolerance {
            Some(spec) => spec.apply(base),
            None => Ok(*base),
        }
    }

    fn space(&self) -> Result<Option<FiniteSpace>> {
        let Some(spec) = &self.space else {
            return Ok(None);
        };
        let basepoint = match &spec.basepoint {
            Some(label) => Some(
                spec.points
                    .iter()
                    .position(|p| p == label)
                    .ok_or_else(|| Error::Parse(format!("basepoint {label:?} is not a point")))?,
            ),
            None => None,
        };
        FiniteSpace::new(spec.points.clone(), basepoint).map(Some)
    }

    fn declared_signature(&self) -> Result<Option<AlgebraSignature>> {
        self.signature.clone().map(AlgebraSignature::new).transpose()
    }

    fn require_signature(&self) -> Result<AlgebraSignature> {
        self.declared_signature()?
            .ok_or_else(|| Error::Parse(format!("map kind {:?} needs a signature", self.map.kind())))
    }

    fn check_declared(&self, actual: &AlgebraSignature) -> Result<()> {
        match self.declared_signature()? {
            Some(s) if &s != actual => Err(Error::Shape(format!(
                "declared signature {s} does not match the map's algebra {actual}"
            ))),
            _ => Ok(()),
        }
    }

    /// Builds the map. Malformed input gives parse or shape errors;
    /// constructor preconditions (projection, centrality, unitarity,
    /// retraction) give their own errors.
    pub fn build(&self, tol: &Tolerance) -> Result<BuiltInstance> {
        let space = self.space()?;
        let elements = |sig: &AlgebraSignature, reprs: &[ElementRepr]| -> Result<Vec<BlockMatrix<f64>>> {
            reprs.iter().map(|r| BlockMatrix::from_repr(sig, r)).collect()
        };
        let mut projection = None;
        let (signature, map) = match &self.map {
            MapSpec::Pinching { projections } => {
                let sig = self.require_signature()?;
                let ps = elements(&sig, projections)?;
                let map = pinching(&sig, &ps, tol)?;
                (sig, map)
            }
            MapSpec::GroupAverage { unitaries } => {
                let sig = self.require_signature()?;
                let us = elements(&sig, unitaries)?;
                let map = group_average(&sig, &us, tol)?;
                (sig, map)
            }
            MapSpec::Central { projection: p } => {
                let sig = self.require_signature()?;
                let p = BlockMatrix::from_repr(&sig, p)?;
                let map = central_projection_expectation(&p, tol)?;
                projection = Some(p);
                (sig, map)
            }
            MapSpec::Corner { projection: e } => {
                let sig = self.require_signature()?;
                let e = BlockMatrix::from_repr(&sig, e)?;
                let map = corner_compression(&e, tol)?;
                projection = Some(e);
                (sig, map)
            }
            MapSpec::Graph {
                domain,
                codomain,
                matrix,
            } => {
                let dom = AlgebraSignature::new(domain.clone())?;
                let cod = AlgebraSignature::new(codomain.clone())?;
                let m = from_row_major(cod.dim(), dom.dim(), matrix)?;
                let phi = BlockLinearMap::from_matrix(&dom, &cod, m)?;
                let map = graph_expectation(&phi);
                let sig = map.signature().clone();
                self.check_declared(&sig)?;
                (sig, map)
            }
            MapSpec::Retraction { table } => {
                let space = space
                    .clone()
                    .ok_or_else(|| Error::Parse("retraction needs a [space] table".into()))?;
                let idx: Vec<usize> = table
                    .iter()
                    .map(|l| {
                        space
                            .position(l)
                            .ok_or_else(|| Error::Parse(format!("unknown point {l:?} in retraction table")))
                    })
                    .collect::<Result<_>>()?;
                let tau = SpaceMap::on(&space, idx)?;
                let map = expectation_from_retraction(&tau)?;
                let sig = space.signature();
                self.check_declared(&sig)?;
                (sig, map)
            }
            MapSpec::Antipodal { size } => {
                let map = antipodal_average(*size)?;
                let sig = map.signature().clone();
                self.check_declared(&sig)?;
                if let Some(s) = &space {
                    if s.len() != *size {
                        return Err(Error::Shape(format!("space has {} points, size is {size}", s.len())));
                    }
                }
                (sig, map)
            }
            MapSpec::ZeroDiagonal { n } => {
                let map = zero_diagonal_projection(*n)?;
                let sig = map.signature().clone();
                self.check_declared(&sig)?;
                (sig, map)
            }
            MapSpec::Dense { matrix } => {
                let sig = self.require_signature()?;
                let m = from_row_major(sig.dim(), sig.dim(), matrix)?;
                (sig.clone(), OperatorMap::from_matrix(&sig, m)?)
            }
        };
        if let Some(s) = &space {
            if s.signature() != signature {
                return Err(Error::Shape(format!(
                    "space has {} points but the algebra is {signature}",
                    s.len()
                )));
            }
        }
        Ok(BuiltInstance {
            signature,
            map,
            space,
            projection,
        })
    }
}
