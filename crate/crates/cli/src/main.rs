use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use ncretract::corpus::{generate, standard_corpus, GenerateKind, GenerateParams, DEFAULT_SEED};
use ncretract::gelfand::{extract_retraction, unitise_and_extract, FiniteSpace};
use ncretract::instance::{BuiltInstance, Instance, ToleranceSpec};
use ncretract::report::{evaluate_text, CheckSelection, EvalOptions, InstanceReport, Report, Status, Timing};
use ncretract::verify::{central_test, homomorphic_certificate, Reason};
use ncretract::{Error, Property, Tolerance};

const PROFILE_VAR: &str = "NCRETRACT_TOL_PROFILE";

#[derive(Parser)]
#[command(name = "ncretract", version, about = "Certificates for conditional expectations on finite-dimensional C*-algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct TolArgs {
    /// Relative equality tolerance (overrides the profile and the instance file).
    #[arg(long = "tol-eq", global = true)]
    tol_eq: Option<f64>,
    /// Positive-semidefiniteness tolerance.
    #[arg(long = "tol-psd", global = true)]
    tol_psd: Option<f64>,
    /// Tolerance profile: default, strict, loose or single.
    #[arg(long, env = PROFILE_VAR, global = true)]
    profile: Option<String>,
}

impl TolArgs {
    fn base(&self) -> Result<Tolerance, Error> {
        match self.profile.as_deref() {
            None => Ok(Tolerance::default()),
            Some(name) => Tolerance::profile(name)
                .ok_or_else(|| Error::Parse(format!("unknown tolerance profile {name:?}"))),
        }
    }

    fn overrides(&self) -> ToleranceSpec {
        ToleranceSpec {
            eq_tol: self.tol_eq,
            psd_tol: self.tol_psd,
            rank_tol: None,
        }
    }

    fn resolve(&self, inst: &Instance) -> Result<Tolerance, Error> {
        let t = inst.tolerance(&self.base()?)?;
        self.overrides().apply(&t)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verify instance files (or directories of them) and print a JSON report.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
        /// Seed for sampled checks; overrides instance seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Expected verdict, e.g. `homomorphic=false`. Repeatable.
        #[arg(long = "expect", value_name = "KEY=BOOL")]
        expect: Vec<String>,
        /// Also check the Jordan homomorphism, positive-unital and formula certificates.
        #[arg(long)]
        jordan: bool,
        /// Also check the triple homomorphism certificate.
        #[arg(long)]
        triple: bool,
        /// Also test centrality of the projection of central/corner instances.
        #[arg(long)]
        central: bool,
        /// Also extract a retraction on function algebras.
        #[arg(long)]
        retraction: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall-clock timings out of the report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write a reproducible corpus of instance files.
    Generate {
        /// pinching, central, corner, graph, retraction, antipodal, dense-perturbed or standard.
        #[arg(long)]
        kind: String,
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
        /// Number of points for retractions.
        #[arg(long)]
        points: Option<usize>,
        /// Size of the antipodal space.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Recover the support and retraction table of a homomorphic expectation on functions.
    ExtractRetraction {
        path: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        /// Treat the map as acting on functions vanishing at infinity and
        /// extract through the one-point compactification.
        #[arg(long)]
        unitise: bool,
    },
    /// Decide whether the projection of a central or corner instance is central.
    CentralTest {
        path: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report the norm gap ‖E(x*x)‖ − ‖E(x)‖² certifying non-homomorphy.
    Gap {
        path: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        /// Include the witness element.
        #[arg(long)]
        witness: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_parse() { 2 } else { 3 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify {
            paths,
            tol,
            seed,
            expect,
            jordan,
            triple,
            central,
            retraction,
            out,
            no_timing,
        } => {
            let checks = CheckSelection {
                jordan,
                triple,
                central,
                retraction,
            };
            cmd_verify(&paths, &tol, seed, &expect, checks, out.as_deref(), no_timing)
        }
        Command::Generate {
            kind,
            blocks,
            points,
            size,
            count,
            seed,
            out_dir,
        } => {
            let params = GenerateParams { blocks, points, size };
            cmd_generate(&kind, &params, count, seed, &out_dir)
        }
        Command::ExtractRetraction { path, tol, unitise } => cmd_extract(&path, &tol, unitise),
        Command::CentralTest { path, tol, seed } => cmd_central(&path, &tol, seed),
        Command::Gap { path, tol, witness } => cmd_gap(&path, &tol, witness),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_expectations(items: &[String]) -> Result<BTreeMap<String, bool>, Error> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--expect needs KEY=BOOL, got {item:?}")))?;
        if Property::from_key(k).is_none() {
            return Err(Error::Parse(format!("unknown property {k:?}")));
        }
        let v: bool = v
            .parse()
            .map_err(|_| Error::Parse(format!("--expect value must be true or false, got {v:?}")))?;
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

/// Files named on the command line, plus `*.toml` files in named
/// directories in sorted order.
fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Error> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Writes to stdout, treating a closed pipe as success.
fn print_text(text: &str) -> Result<(), Error> {
    let mut stdout = io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(Error::from),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))?,
        None => print_text(text)?,
    }
    Ok(())
}

fn cmd_verify(
    paths: &[PathBuf],
    tol: &TolArgs,
    seed: Option<u64>,
    expect: &[String],
    checks: CheckSelection,
    out: Option<&Path>,
    no_timing: bool,
) -> CliResult {
    let options = EvalOptions {
        tolerance: tol.base()?,
        overrides: tol.overrides(),
        seed,
        expect: parse_expectations(expect)?,
        checks,
    };
    // fail early on bad flag values rather than once per instance
    options.overrides.apply(&options.tolerance)?;
    let inputs = collect_inputs(paths)?;
    let start = Instant::now();
    let results: Vec<_> = inputs
        .par_iter()
        .map(|path| {
            let t = Instant::now();
            let source = path.display().to_string();
            let report = match fs::read_to_string(path) {
                Ok(text) => evaluate_text(&text, &source, &options),
                Err(e) => InstanceReport::failed(
                    &source,
                    None,
                    seed.unwrap_or(DEFAULT_SEED),
                    Status::ParseError,
                    &Error::Io(e),
                ),
            };
            (report, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let (instances, per_instance_ms): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let timing = (!no_timing).then(|| Timing {
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        per_instance_ms,
    });
    let report = Report::new(seed.unwrap_or(DEFAULT_SEED), instances, timing);
    emit(&report.to_json(), out)?;
    Ok(report.exit_code() as u8)
}

fn cmd_generate(kind: &str, params: &GenerateParams, count: usize, seed: u64, dir: &Path) -> CliResult {
    let instances = if kind == "standard" {
        standard_corpus(seed)
    } else {
        let kind: GenerateKind = kind.parse()?;
        generate(kind, params, count, seed)?
    };
    fs::create_dir_all(dir).map_err(Error::from)?;
    for (i, inst) in instances.iter().enumerate() {
        let name = inst.name.clone().unwrap_or_else(|| format!("instance-{i:03}"));
        let path = dir.join(format!("{name}.toml"));
        fs::write(&path, inst.to_toml()?).map_err(Error::from)?;
    }
    print_text(&format!("wrote {} instance files to {}", instances.len(), dir.display()))?;
    Ok(0)
}

fn load(path: &Path, tol: &TolArgs) -> Result<(Instance, BuiltInstance, Tolerance), Error> {
    let inst = Instance::load(path)?;
    let t = tol.resolve(&inst)?;
    let built = inst.build(&t)?;
    Ok((inst, built, t))
}

fn labels(built: &BuiltInstance) -> FiniteSpace {
    built
        .space
        .clone()
        .unwrap_or_else(|| FiniteSpace::points(built.signature.dim()).expect("nonempty algebra"))
}

fn print_json(v: &Value) -> Result<(), Error> {
    print_text(&serde_json::to_string_pretty(v).expect("json"))
}

fn cmd_extract(path: &Path, tol: &TolArgs, unitise: bool) -> CliResult {
    let (_, built, t) = load(path, tol)?;
    let space = labels(&built);
    if unitise {
        let u = unitise_and_extract(&built.map, &space, &t)?;
        let table: BTreeMap<&str, &str> = (0..u.space.len())
            .map(|p| (u.space.label(p), u.space.label(u.rho.apply(p))))
            .collect();
        let support: Vec<&str> = u.support.iter().map(|&p| u.space.label(p)).collect();
        print_json(&json!({ "space": u.space.labels(), "support": support, "rho": table }))?;
        return Ok(0);
    }
    match extract_retraction(&built.map, &t) {
        Ok(ext) => {
            let support: Vec<&str> = ext.support.iter().map(|&p| space.label(p)).collect();
            let table: BTreeMap<&str, &str> = ext
                .targets
                .iter()
                .enumerate()
                .filter_map(|(p, s)| s.map(|s| (space.label(p), space.label(s))))
                .collect();
            print_json(&json!({ "homomorphic": true, "support": support, "table": table }))?;
            Ok(0)
        }
        Err(Error::NotHomomorphic { gap, certificate }) => {
            print_json(&json!({
                "homomorphic": false,
                "error": "not_homomorphic",
                "gap": gap,
                "witness": certificate.witness,
            }))?;
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_central(path: &Path, tol: &TolArgs, seed: Option<u64>) -> CliResult {
    let (inst, built, t) = load(path, tol)?;
    let e = built.projection.ok_or_else(|| Failure {
        code: 3,
        message: "central-test needs a central or corner instance".into(),
    })?;
    let seed = seed.or(inst.seed).unwrap_or(DEFAULT_SEED);
    let cert = central_test(&e, &t, seed)?;
    print_json(&serde_json::to_value(&cert).expect("json"))?;
    Ok(if cert.holds() { 0 } else { 1 })
}

fn cmd_gap(path: &Path, tol: &TolArgs, witness: bool) -> CliResult {
    let (_, built, t) = load(path, tol)?;
    if !built.map.is_idempotent(&t) {
        return Err(Error::NotIdempotent {
            residual: built.map.idempotency_residual(&t).0,
            bound: built.map.idempotency_residual(&t).1,
        }
        .into());
    }
    let cert = homomorphic_certificate(&built.map, &t);
    if cert.holds() {
        print_json(&json!({ "homomorphic": true, "gap": 0.0 }))?;
        return Ok(0);
    }
    let w = cert
        .failure(Reason::GramNonzero)
        .and_then(|f| f.witness.clone())
        .or_else(|| cert.witness.clone());
    let value = |k: &str| w.as_ref().and_then(|w| w.values.get(k).copied());
    let mut out = json!({
        "homomorphic": false,
        "reason": cert.reason,
        "gap": value("gap"),
        "norm_ex": value("norm_ex"),
        "norm_exx": value("norm_exx"),
    });
    if witness {
        out["witness"] = serde_json::to_value(&w).expect("json");
    }
    print_json(&out)?;
    Ok(1)
}
