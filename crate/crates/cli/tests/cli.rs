use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ncretract"));
    c.env_remove("NCRETRACT_TOL_PROFILE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&o.stdout))
    })
}

const PINCHING: &str = r#"
version = 1
signature = [2]

[map]
kind = "pinching"
projections = [
  [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]],
  [[[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]],
]
"#;

const CENTRAL: &str = r#"
version = 1
signature = [2, 1]

[map]
kind = "central"
projection = [
  [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
  [[[0.0, 0.0]]],
]
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn expected_failure_exits_zero_with_gap_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "pinching.toml", PINCHING);
    let o = run(&["verify", &p, "--expect", "homomorphic=false", "--no-timing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let hom = r["instances"][0]["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["property"] == "homomorphic")
        .unwrap()
        .clone();
    assert_eq!(hom["verdict"], "fails");
    assert_eq!(hom["witness"]["values"]["gap"], 1.0);

    let o = run(&["verify", &p, "--expect", "homomorphic=true"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn central_projection_is_homomorphic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "central.toml", CENTRAL);
    let o = run(&["verify", &p, "--expect", "homomorphic=true", "--central"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(&["central-test", &p]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "holds");
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let entries = vec!["[1.0, 0.0]"; 9].join(", ");
    let dense = format!("version = 1\nsignature = [2]\n[map]\nkind = \"dense\"\nmatrix = [{entries}]\n");
    let p = write(dir.path(), "dense.toml", &dense);
    assert_eq!(code(&run(&["verify", &p])), 2);

    let p = write(dir.path(), "junk.toml", "version = 1\nsurprise = true\n");
    assert_eq!(code(&run(&["verify", &p])), 2);

    let p = write(dir.path(), "pinching.toml", PINCHING);
    assert_eq!(code(&run(&["verify", &p, "--expect", "homomorphism=true"])), 2);
    let o = bin().env("NCRETRACT_TOL_PROFILE", "bogus").args(["verify", &p]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn non_expectation_is_a_hypothesis_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "zd.toml", "version = 1\n[map]\nkind = \"zero_diagonal\"\nn = 2\n");
    assert_eq!(code(&run(&["verify", &p])), 3);
    let o = run(&["verify", &p, "--expect", "expectation=false"]);
    assert_eq!(code(&o), 0);
    let cert = &json(&o)["instances"][0]["certificates"][0];
    assert_eq!(cert["reason"], "range_not_subalgebra");

    let not_projection = "version = 1\nsignature = [2]\n[map]\nkind = \"corner\"\nprojection = [[[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]]\n";
    let p = write(dir.path(), "corner.toml", not_projection);
    assert_eq!(code(&run(&["verify", &p])), 3);
}

#[test]
fn profile_from_environment_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "pinching.toml", PINCHING);
    let o = bin()
        .env("NCRETRACT_TOL_PROFILE", "loose")
        .args(["verify", &p, "--tol-psd", "1e-7"])
        .output()
        .unwrap();
    let tol = &json(&o)["instances"][0]["tolerance"];
    assert_eq!(tol["eq_tol"], 1e-6);
    assert_eq!(tol["psd_tol"], 1e-7);
}

fn read_all(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = run(&[
            "generate", "--kind", "retraction", "--points", "5", "--count", "10", "--seed", "7", "--out-dir",
            d.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    let fa = read_all(&a);
    assert_eq!(fa.len(), 10);
    assert_eq!(fa, read_all(&b));

    let c = dir.path().join("corner");
    let o = run(&["generate", "--kind", "corner", "--blocks", "2,3", "--out-dir", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_all(&c).len(), 12);

    let s = dir.path().join("anti");
    let o = run(&["generate", "--kind", "antipodal", "--size", "6", "--out-dir", s.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_all(&s).len(), 1);

    let o = run(&["generate", "--kind", "antipodal", "--size", "5", "--out-dir", s.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = run(&["generate", "--kind", "spiral", "--out-dir", s.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn batch_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = run(&["generate", "--kind", "standard", "--out-dir", corpus.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let reports: Vec<String> = ["r1.json", "r2.json"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = run(&[
                "verify",
                corpus.to_str().unwrap(),
                "--seed",
                "42",
                "--no-timing",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    let r: Value = serde_json::from_str(&reports[0]).unwrap();
    assert!(r["summary"]["instances"].as_u64().unwrap() >= 60);
    assert_eq!(r["summary"]["ok"], r["summary"]["instances"]);
}

#[test]
fn extraction_round_trips_and_rejects_antipodal() {
    let dir = tempfile::tempdir().unwrap();
    let retraction = "version = 1\n[space]\npoints = [\"a\", \"b\", \"c\"]\n[map]\nkind = \"retraction\"\ntable = [\"a\", \"a\", \"c\"]\n";
    let p = write(dir.path(), "r.toml", retraction);
    let o = run(&["extract-retraction", &p]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["table"]["b"], "a");
    assert_eq!(v["table"]["c"], "c");

    let p = write(dir.path(), "anti.toml", "version = 1\n[map]\nkind = \"antipodal\"\nsize = 4\n");
    let o = run(&["extract-retraction", &p]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["error"], "not_homomorphic");
    assert!((v["gap"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    let zero = format!(
        "version = 1\nsignature = [1, 1, 1]\n[map]\nkind = \"dense\"\nmatrix = [{}]\n",
        vec!["[0.0, 0.0]"; 9].join(", ")
    );
    let p = write(dir.path(), "zero.toml", &zero);
    let o = run(&["extract-retraction", &p]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["support"].as_array().unwrap().len(), 0);

    let o = run(&["extract-retraction", &p, "--unitise"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["rho"]["1"], "omega");
}

#[test]
fn gap_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "pinching.toml", PINCHING);
    let o = run(&["gap", "--witness", &p]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["gap"], 1.0);
    assert_eq!(v["norm_ex"], 0.0);
    assert!(v["witness"]["elements"][0]["value"].is_array());

    let p = write(dir.path(), "central.toml", CENTRAL);
    let o = run(&["gap", &p]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["homomorphic"], true);
}
