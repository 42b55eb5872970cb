//! End-to-end checks of the binary: the documented command examples, the
//! exit-code contract on malformed inputs, report placement, and byte-level
//! determinism of emitted certificates.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radnf"));
    // keep the environment from redirecting reports
    cmd.env_remove("RADNF_OUT_DIR");
    cmd
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const RADIAL_SYM: &str = "n = 2\norder = 1\ncaps = 6 4\n[1]\n1 z\n";
const NONRADIAL_SYM: &str = "n = 2\norder = 1\ncaps = 6 4\n[1]\n1 theta1\n";

#[test]
fn check_radial_accepts_the_model_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(dir.path(), "z.sym", RADIAL_SYM);
    let out_json = dir.path().join("r.json");
    let out = run(&["check-radial", sym.to_str().unwrap(), "--out", out_json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("in_class: true, lambda: 1"));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(doc["in_class"], serde_json::Value::Bool(true));
    // the text sibling sits next to the json and mirrors stdout
    assert_eq!(fs::read_to_string(dir.path().join("r.txt")).unwrap(), stdout(&out));
}

#[test]
fn check_radial_flags_the_theta_symbol_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(dir.path(), "t.sym", NONRADIAL_SYM);
    let out_json = dir.path().join("r.json");
    let out = run(&["check-radial", sym.to_str().unwrap(), "--out", out_json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("in_class: false"));
    assert!(text.contains("∂_θ p|_Λ = 0 violated"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(doc["in_class"], serde_json::Value::Bool(false));
    assert!(!doc["failures"].as_array().unwrap().is_empty());
}

#[test]
fn verify_hamilton_matches_all_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out_json = dir.path().join("vh.json");
    let out = run(&[
        "verify-hamilton",
        "--n",
        "2",
        "--degree",
        "3",
        "--trials",
        "20",
        "--seed",
        "7",
        "--out",
        out_json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("oracle matches: 20/20"));
}

#[test]
fn exit_codes_on_the_malformed_input_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out_arg = dir.path().join("o.json");
    let out_arg = out_arg.to_str().unwrap();

    // 1: missing file
    let out = run(&["check-radial", dir.path().join("absent.sym").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read"));

    // 1: unknown monomial token, with position
    let bad = write(dir.path(), "bad.sym", "n = 2\norder = 1\ncaps = 6 4\n[1]\n1 w\n");
    let out = run(&["check-radial", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));

    // 1: dimension mismatch in a token
    let bad = write(dir.path(), "dim.sym", "n = 2\norder = 1\ncaps = 6 4\n[1]\n1 theta2\n");
    let out = run(&["check-radial", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("theta2"));

    // 1: malformed flow file
    let bad = write(dir.path(), "bad.flow", "dim = 2\nA = 1 2 3\n");
    let out = run(&["flow-linearize", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // 1: usage errors from the argument parser
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["check-radial"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["verify-hamilton", "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));

    // 2: not radial where the normalization requires it
    let sym = write(dir.path(), "t.sym", NONRADIAL_SYM);
    let out = run(&["normalize-principal", sym.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("radial class"), "{}", stderr(&out));

    // 2: flow spec violation (nonzero column over a null coordinate)
    let bad = write(dir.path(), "col.flow", "dim = 2\nA = -1 0 0 -1\nL = 1\n");
    let out = run(&["flow-linearize", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // 2: transport without transport data
    let lin = write(dir.path(), "lin.flow", "dim = 1\nA = -1\n");
    let out = run(&["transport-solve", lin.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("g:"), "{}", stderr(&out));

    // 3: horizon too short for the doubling limit to settle
    let slow = write(
        dir.path(),
        "slow.flow",
        "dim = 1\nA = -1\nradius = 1\nperturb x1: 0.3 x1^9\nbase = 0.3\n",
    );
    let out = run(&["flow-linearize", slow.to_str().unwrap(), "--T", "1.5", "--out", out_arg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("horizon"), "{}", stderr(&out));
}

#[test]
fn reports_default_into_the_out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(dir.path(), "z.sym", RADIAL_SYM);
    let out = bin()
        .args(["check-radial", sym.to_str().unwrap()])
        .env("RADNF_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("check-radial.json").is_file());
    assert!(dir.path().join("check-radial.txt").is_file());
}

#[test]
fn certificates_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(
        dir.path(),
        "full.sym",
        "n = 2\norder = 1\ncaps = 6 4\n[1]\n2 z\n1/3 z y1\n-1 z^2 theta1\n[0]\n1 theta1 y1\n1 y1^2\n[-1]\n-2/5 theta1^2 y1^2\n",
    );
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let run = run(&[
            "normalize-full",
            sym.to_str().unwrap(),
            "--stages",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let (c, d) = (dir.path().join("c.json"), dir.path().join("d.json"));
    for out in [&c, &d] {
        let run = run(&["verify-hamilton", "--seed", "41", "--out", out.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(0));
    }
    assert_eq!(fs::read(&c).unwrap(), fs::read(&d).unwrap());
}

#[test]
fn emitted_canonical_symbol_normalizes_to_the_same_certificate() {
    // the symbol block inside the report is itself a valid input file and
    // produces the same certificate: parse ∘ emit is the identity
    let dir = tempfile::tempdir().unwrap();
    let sym = write(
        dir.path(),
        "s.sym",
        "# scrambled term order and redundant factors\nn = 2\norder = 1\ncaps = 6 4\n[1]\n1/3 z y1\n2 z\n-1 z z theta1\n[0]\n1 y1^2\n",
    );
    let first = dir.path().join("first.json");
    let out = run(&["normalize-full", sym.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&first).unwrap()).unwrap();
    let canonical = doc["symbol"].as_str().unwrap();

    let resym = write(dir.path(), "canonical.sym", canonical);
    let second = dir.path().join("second.json");
    let out = run(&["normalize-full", resym.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let redoc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&second).unwrap()).unwrap();

    assert_eq!(redoc["symbol"], doc["symbol"]);
    assert_eq!(redoc["certificate"], doc["certificate"]);
    assert_eq!(redoc["replay"], doc["replay"]);
}

#[test]
fn transport_and_probe_reports_carry_their_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let tr = write(dir.path(), "tr.flow", "dim = 1\nA = -1\ng: 1 x1^4\nbase = 0.4\n");
    let out_json = dir.path().join("ts.json");
    let out = run(&[
        "transport-solve",
        tr.to_str().unwrap(),
        "--c",
        "1",
        "--out",
        out_json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert!(doc["residual"].as_f64().unwrap() < 1e-6);
    assert!(doc["value"].as_f64().unwrap() < 0.0);

    let pr = write(
        dir.path(),
        "probe.flow",
        "dim = 2\nA = 0 0 0 -1\nL = 1\nradius = 0.25\nperturb x2: 1 x2^10\nbase = 0.05 0\ndirection = 0 1\nh0 = 0.05\n",
    );
    let out_json = dir.path().join("lp.json");
    let out = run(&["limit-probe", pr.to_str().unwrap(), "--out", out_json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(doc["stabilized"], serde_json::Value::Bool(true));
    assert_eq!(doc["first_derivative"].as_array().unwrap().len(), 3);
}
