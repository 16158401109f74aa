use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSignature, BlockMatrix, ElementRepr, Tolerance};
use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// The statement a certificate is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    ConditionalExpectation,
    Homomorphic,
    Central,
    ExpectationFormulas,
    TripleHomomorphism,
    JordanHomomorphism,
    PositiveUnitalJordan,
    Retraction,
}

impl Property {
    pub fn key(self) -> &'static str {
        match self {
            Property::ConditionalExpectation => "expectation",
            Property::Homomorphic => "homomorphic",
            Property::Central => "central",
            Property::ExpectationFormulas => "formulas",
            Property::TripleHomomorphism => "triple",
            Property::JordanHomomorphism => "jordan",
            Property::PositiveUnitalJordan => "positive_jordan",
            Property::Retraction => "retraction",
        }
    }

    pub const ALL: [Property; 8] = [
        Property::ConditionalExpectation,
        Property::Homomorphic,
        Property::Central,
        Property::ExpectationFormulas,
        Property::TripleHomomorphism,
        Property::JordanHomomorphism,
        Property::PositiveUnitalJordan,
        Property::Retraction,
    ];

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == key)
    }
}

/// Why a certificate fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    NotIdempotent,
    RangeNotSubalgebra,
    LeftModule,
    RightModule,
    NotCompletelyPositive,
    NotContractive,
    GramNonzero,
    DecidersDisagree,
    NotCentral,
    TripleChain,
    JordanChain,
    TripleIdeal,
    MixedKernel,
    KernelSubtriple,
    TripleMultiplicativity,
    JordanKernel,
    JordanMultiplicativity,
    NotPositive,
    NotUnital,
    HypothesisViolation,
    NotHomomorphic,
    NonBinaryIdempotent,
    AmbiguousTarget,
}

/// One numerical sub-check: `passed` iff `residual <= threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedElement {
    pub name: String,
    pub value: ElementRepr,
}

/// Explicit elements plus the quantities computed from them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub elements: Vec<NamedElement>,
    pub values: BTreeMap<String, f64>,
}

impl Witness {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn element<T: Real>(mut self, name: &str, x: &BlockMatrix<T>) -> Self {
        self.elements.push(NamedElement {
            name: name.to_string(),
            value: x.to_repr(),
        });
        self
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    /// Decodes the element recorded under `name`.
    pub fn get<T: Real>(&self, name: &str, signature: &AlgebraSignature) -> Option<Result<BlockMatrix<T>>> {
        self.elements
            .iter()
            .find(|e| e.name == name)
            .map(|e| BlockMatrix::from_repr(signature, &e.value))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub reason: Reason,
    pub witness: Option<Witness>,
}

/// Structured verdict with every sub-check and, on failure, a witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    pub reason: Option<Reason>,
    /// Every failure in check order, each with its own witness.
    pub failures: Vec<Failure>,
    pub witness: Option<Witness>,
    pub checks: Vec<Check>,
    pub tolerance: Tolerance,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(property: Property, tolerance: &Tolerance) -> Self {
        Self {
            property,
            verdict: Verdict::Holds,
            reason: None,
            failures: Vec::new(),
            witness: None,
            checks: Vec::new(),
            tolerance: *tolerance,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// Records a sub-check and returns whether it passed.
    pub fn check(&mut self, name: &str, residual: f64, threshold: f64) -> bool {
        let passed = residual <= threshold;
        self.checks.push(Check {
            name: name.to_string(),
            residual,
            threshold,
            passed,
        });
        passed
    }

    /// Records a failure; the first one fixes `reason` and `witness`.
    pub fn fail(&mut self, reason: Reason, witness: Option<Witness>) {
        self.verdict = Verdict::Fails;
        if self.reason.is_none() {
            self.reason = Some(reason);
            self.witness = witness.clone();
        }
        self.failures.push(Failure { reason, witness });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn failure(&self, reason: Reason) -> Option<&Failure> {
        self.failures.iter().find(|f| f.reason == reason)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
