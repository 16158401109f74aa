//! Per-instance evaluation and the machine-readable batch report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::Tolerance;
use crate::error::Error;
use crate::gelfand::extract_retraction;
use crate::instance::{BuiltInstance, Instance, ToleranceSpec};
use crate::jordan::{
    expectation_formulas_check, jordan_homomorphism_certificate_cstar, positive_unital_projection_certificate,
    triple_homomorphism_certificate,
};
use crate::verify::{
    central_test, homomorphic_certificate, verify_expectation, Certificate, Property, Reason, Witness,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Optional checks beyond the expectation and homomorphism certificates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckSelection {
    /// Jordan homomorphism, positive-unital Jordan and the expectation formulas.
    pub jordan: bool,
    pub triple: bool,
    /// Centrality of the projection behind a central or corner map.
    pub central: bool,
    /// Retraction extraction on function algebras.
    pub retraction: bool,
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    /// Base tolerance (default or a named profile).
    pub tolerance: Tolerance,
    /// Applied after the instance's own overrides.
    pub overrides: ToleranceSpec,
    /// Overrides the instance seed.
    pub seed: Option<u64>,
    /// Expected verdicts that override the instance's `[expect]` table.
    pub expect: BTreeMap<String, bool>,
    pub checks: CheckSelection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    PropertyFailure,
    HypothesisViolation,
    ParseError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::PropertyFailure => 1,
            Status::ParseError => 2,
            Status::HypothesisViolation => 3,
        }
    }
}

/// A requested property and how it came out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub expected: bool,
    /// `None` when the property was not evaluated.
    pub actual: Option<bool>,
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub support: Vec<String>,
    /// `t -> τ(t)` for points of the support.
    pub table: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: Option<String>,
    pub source: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_kind: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    pub certificates: Vec<Certificate>,
    pub outcomes: BTreeMap<String, Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionReport>,
    pub notes: Vec<String>,
}

impl InstanceReport {
    /// Report for an instance that could not be evaluated.
    pub fn failed(source: &str, name: Option<String>, seed: u64, status: Status, err: &Error) -> Self {
        Self {
            name,
            source: source.to_string(),
            status,
            error: Some(err.to_string()),
            signature: None,
            map_kind: None,
            seed,
            tolerance: None,
            certificates: Vec::new(),
            outcomes: BTreeMap::new(),
            extraction: None,
            notes: Vec::new(),
        }
    }

    pub fn certificate(&self, property: Property) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.property == property)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub ok: usize,
    pub property_failures: usize,
    pub hypothesis_violations: usize,
    pub parse_errors: usize,
    pub certificates_holding: usize,
    pub certificates_failing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub per_instance_ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub seed: u64,
    pub instances: Vec<InstanceReport>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(seed: u64, instances: Vec<InstanceReport>, timing: Option<Timing>) -> Self {
        let mut summary = Summary {
            instances: instances.len(),
            ..Default::default()
        };
        for r in &instances {
            match r.status {
                Status::Ok => summary.ok += 1,
                Status::PropertyFailure => summary.property_failures += 1,
                Status::HypothesisViolation => summary.hypothesis_violations += 1,
                Status::ParseError => summary.parse_errors += 1,
            }
            for c in &r.certificates {
                if c.holds() {
                    summary.certificates_holding += 1;
                } else {
                    summary.certificates_failing += 1;
                }
            }
        }
        Self {
            tool_version: TOOL_VERSION.to_string(),
            seed,
            instances,
            summary,
            timing,
        }
    }

    /// Worst status over all instances: parse errors, then hypothesis
    /// violations, then property failures.
    pub fn status(&self) -> Status {
        self.instances.iter().map(|r| r.status).max().unwrap_or(Status::Ok)
    }

    pub fn exit_code(&self) -> i32 {
        self.status().exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without timing, which is identical across runs with the
    /// same inputs and seed.
    pub fn body_json(&self) -> String {
        let mut body = self.clone();
        body.timing = None;
        body.to_json()
    }
}

/// Parses, builds and evaluates one instance.
pub fn evaluate_text(text: &str, source: &str, options: &EvalOptions) -> InstanceReport {
    match Instance::parse(text) {
        Ok(inst) => evaluate(&inst, source, options),
        Err(e) => InstanceReport::failed(source, None, options.seed.unwrap_or(crate::corpus::DEFAULT_SEED), Status::ParseError, &e),
    }
}

/// Evaluates the requested properties: flags request `true`, `[expect]`
/// entries and `options.expect` request the given value. The expectation
/// and homomorphism certificates are always computed.
pub fn evaluate(inst: &Instance, source: &str, options: &EvalOptions) -> InstanceReport {
    let seed = options.seed.or(inst.seed).unwrap_or(crate::corpus::DEFAULT_SEED);
    let tol = inst
        .tolerance(&options.tolerance)
        .and_then(|t| options.overrides.apply(&t));
    let tol = match tol {
        Ok(t) => t,
        Err(e) => return InstanceReport::failed(source, inst.name.clone(), seed, Status::ParseError, &e),
    };
    let built = match inst.build(&tol) {
        Ok(b) => b,
        Err(e) => {
            let status = if e.is_parse() {
                Status::ParseError
            } else {
                Status::HypothesisViolation
            };
            let mut r = InstanceReport::failed(source, inst.name.clone(), seed, status, &e);
            r.map_kind = Some(inst.map.kind().to_string());
            return r;
        }
    };

    let mut requested: BTreeMap<Property, bool> = BTreeMap::new();
    let flags = options.checks;
    for (on, p) in [
        (flags.jordan, Property::JordanHomomorphism),
        (flags.jordan, Property::PositiveUnitalJordan),
        (flags.jordan, Property::ExpectationFormulas),
        (flags.triple, Property::TripleHomomorphism),
        (flags.central, Property::Central),
        (flags.retraction, Property::Retraction),
    ] {
        if on {
            requested.insert(p, true);
        }
    }
    for (k, &v) in inst.expect.iter().chain(&options.expect) {
        if let Some(p) = Property::from_key(k) {
            requested.insert(p, v);
        }
    }

    let mut report = InstanceReport {
        name: inst.name.clone(),
        source: source.to_string(),
        status: Status::Ok,
        error: None,
        signature: Some(built.signature.blocks().to_vec()),
        map_kind: Some(inst.map.kind().to_string()),
        seed,
        tolerance: Some(tol),
        certificates: Vec::new(),
        outcomes: BTreeMap::new(),
        extraction: None,
        notes: Vec::new(),
    };

    let ce = verify_expectation(&built.map, &tol, seed);
    let is_ce = ce.holds();
    report.certificates.push(ce);

    let mut hypothesis = false;
    if is_ce {
        report.certificates.push(homomorphic_certificate(&built.map, &tol));
        run_optional(&built, &requested, &tol, seed, &mut report, &mut hypothesis);
    } else {
        let dependent: Vec<&str> = requested
            .keys()
            .filter(|p| **p != Property::ConditionalExpectation)
            .map(|p| p.key())
            .collect();
        if !dependent.is_empty() {
            report.notes.push(format!(
                "not a conditional expectation; skipped {}",
                dependent.join(", ")
            ));
        }
        if requested.get(&Property::ConditionalExpectation) != Some(&false) {
            hypothesis = true;
            report.notes.push("map is not a conditional expectation".into());
        }
    }

    let mut mismatch = false;
    for (p, expected) in &requested {
        let actual = report.certificate(*p).map(Certificate::holds);
        let matched = actual == Some(*expected) || (actual.is_none() && !is_ce);
        if actual.is_some() && !matched {
            mismatch = true;
        }
        report.outcomes.insert(
            p.key().to_string(),
            Outcome {
                expected: *expected,
                actual,
                matched,
            },
        );
    }
    report.status = if hypothesis {
        Status::HypothesisViolation
    } else if mismatch {
        Status::PropertyFailure
    } else {
        Status::Ok
    };
    report
}

fn run_optional(
    built: &BuiltInstance,
    requested: &BTreeMap<Property, bool>,
    tol: &Tolerance,
    seed: u64,
    report: &mut InstanceReport,
    hypothesis: &mut bool,
) {
    let map = &built.map;
    let wants = |p: Property| requested.contains_key(&p);
    if wants(Property::ExpectationFormulas) {
        report.certificates.push(expectation_formulas_check(map, tol, seed));
    }
    if wants(Property::TripleHomomorphism) {
        report.certificates.push(triple_homomorphism_certificate(map, tol));
    }
    if wants(Property::JordanHomomorphism) {
        report.certificates.push(jordan_homomorphism_certificate_cstar(map, tol));
    }
    if wants(Property::PositiveUnitalJordan) {
        report.certificates.push(positive_unital_projection_certificate(map, tol, seed));
    }
    if wants(Property::Central) {
        match &built.projection {
            Some(e) => match central_test(e, tol, seed) {
                Ok(c) => report.certificates.push(c),
                Err(err) => {
                    *hypothesis = true;
                    report.notes.push(format!("central test: {err}"));
                }
            },
            None => {
                *hypothesis = true;
                report
                    .notes
                    .push("central test needs a central or corner instance".into());
            }
        }
    }
    if wants(Property::Retraction) {
        if !built.signature.is_commutative() {
            *hypothesis = true;
            report.notes.push("retraction extraction needs a commutative algebra".into());
            return;
        }
        let mut cert = Certificate::new(Property::Retraction, tol);
        match extract_retraction(map, tol) {
            Ok(ext) => {
                let label = |t: usize| match &built.space {
                    Some(s) => s.label(t).to_string(),
                    None => (t + 1).to_string(),
                };
                report.extraction = Some(ExtractionReport {
                    support: ext.support.iter().map(|&t| label(t)).collect(),
                    table: ext
                        .targets
                        .iter()
                        .enumerate()
                        .filter_map(|(t, s)| s.map(|s| (label(t), label(s))))
                        .collect(),
                });
            }
            Err(Error::NotHomomorphic { certificate, .. }) => {
                cert.fail(Reason::NotHomomorphic, certificate.witness.clone());
            }
            Err(Error::NonBinaryIdempotent { point, value }) => {
                let w = Witness::new().value("point", point as f64).value("value", value);
                cert.fail(Reason::NonBinaryIdempotent, Some(w));
            }
            Err(Error::AmbiguousTarget { point }) => {
                let w = Witness::new().value("point", point as f64);
                cert.fail(Reason::AmbiguousTarget, Some(w));
            }
            Err(e) => {
                cert.note(e.to_string());
                cert.fail(Reason::HypothesisViolation, None);
            }
        }
        report.certificates.push(cert);
    }
}
