use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use qfiopt::linalg::{c, BipartiteDims, CMatrix};
use qfiopt::states::{save_state, special_separable_compose};
use qfiopt::DensityMatrix;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_qfiopt");

fn validator() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("report.schema.json")).unwrap();
        jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
    })
}

struct Run {
    code: i32,
    report: Value,
    stderr: String,
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("QFIOPT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("bad report for {args:?}: {e}\n{stdout}"));
    let errors: Vec<String> = validator().iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "report for {args:?} violates the schema: {errors:?}");
    Run { code: out.status.code().unwrap(), report, stderr: String::from_utf8(out.stderr).unwrap() }
}

fn run(args: &[&str]) -> Run {
    run_env(args, &[])
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut v = v;
    for p in path {
        v = &v[*p];
    }
    v.as_f64().unwrap_or_else(|| panic!("{path:?} is not a number: {v}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SZ_SZ: &str = r#"{"h1": [[[1,0],[0,0]],[[0,0],[-1,0]]], "h2": [[[1,0],[0,0]],[[0,0],[-1,0]]]}"#;

fn isotropic_qfi(p: f64) -> f64 {
    32.0 * (1.0 - p).powi(2) / (2.0 - p)
}

#[test]
fn qfi_of_collective_z_on_isotropic_state() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", SZ_SZ);
    let r = run(&["qfi", "--builtin", "isotropic:0.1:2", "--hamiltonian", &h]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = &r.report["results"];
    assert!((num(res, &["qfi"]) - isotropic_qfi(0.1)).abs() < 1e-4);
    assert!(num(res, &["qfi"]) <= num(res, &["four_variance"]) + 1e-9);
    assert!((num(res, &["delta_squared"]) - 16.0).abs() < 1e-12);
    assert!((num(res, &["separable_bound"]) - 8.0).abs() < 1e-12);
    assert_eq!(res["sld_saturation"]["saturated"], Value::Bool(true));
    assert_eq!(r.report["input"]["descriptor"], "isotropic:0.1:2");
}

#[test]
fn qfi_accepts_a_full_operator() {
    let dir = tempfile::tempdir().unwrap();
    let diag = r#"{"matrix": [[[2,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[-2,0]]]}"#;
    let h = write(dir.path(), "h.json", diag);
    let r = run(&["qfi", "--builtin", "isotropic:0.1:2", "--hamiltonian", &h]);
    assert_eq!(r.code, 0);
    assert!((num(&r.report["results"], &["qfi"]) - isotropic_qfi(0.1)).abs() < 1e-10);
    assert!(r.report["results"]["separable_bound"].is_null());
}

#[test]
fn qfi_of_maximally_mixed_state_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", SZ_SZ);
    let r = run(&["qfi", "--builtin", "maximally-mixed:2:2", "--hamiltonian", &h]);
    assert_eq!(r.code, 0);
    assert!(num(&r.report["results"], &["qfi"]).abs() < 1e-12);
    assert!(r.report["results"]["sld_saturation"].is_null());
}

#[test]
fn mismatched_dimensions_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", SZ_SZ);
    let r = run(&["qfi", "--builtin", "horodecki:0.3", "--hamiltonian", &h]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("dimension mismatch"), "{}", r.stderr);
    assert_eq!(r.report["status"], "error");
    assert!(r.report["error"]["message"].as_str().unwrap().contains("3 x 3"));
}

#[test]
fn input_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", SZ_SZ);
    let bad = write(dir.path(), "bad.json", r#"{"dims": [2, 2], "matrix": [[[1,0]]]}"#);
    for args in [
        vec!["qfi", "--builtin", "nonsense:1", "--hamiltonian", &h],
        vec!["qfi", "--state", &bad, "--hamiltonian", &h],
        vec!["qfi", "--state", "/nonexistent/state.json", "--hamiltonian", &h],
        vec!["gain", "--builtin", "isotropic:1.5:2"],
        vec!["relax", "--builtin", "isotropic:0.1:2", "--caps", "1"],
        vec!["relax", "--builtin", "isotropic:0.1:2", "--trace-pinning", "5,0"],
        vec!["state", "gen", "horodecki"],
    ] {
        let r = run(&args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert_eq!(r.report["error"]["kind"], "input");
    }
}

#[test]
fn gain_example_for_isotropic_state() {
    let r = run(&["gain", "--builtin", "isotropic:0.1:2", "--c1", "1", "--c2", "1", "--restarts", "50", "--seed", "7"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = &r.report["results"];
    assert!((num(res, &["qfi"]) - 13.6421).abs() < 1e-3);
    assert!((num(res, &["gain"]) - 1.7053).abs() < 2e-4);
    // separable bound for caps (1, 1) is 4 (c1^2 + c2^2)
    assert!((num(res, &["sep_bound"]) - 8.0).abs() < 1e-9);
    assert_eq!(r.report["config"]["seesaw"]["seed"], 7);
    assert_eq!(r.report["config"]["seesaw"]["restarts"], 50);
}

#[test]
fn certificate_state_has_no_gain() {
    let r = run(&["gain", "--builtin", "ccnr-bes-4x4", "--scan-theta"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(num(&r.report["results"], &["gain"]) <= 1.0 + 1e-6);
}

#[test]
fn same_seed_gives_identical_numbers() {
    let args = ["gain", "--builtin", "horodecki:0.3", "--restarts", "8", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.report["results"], b.report["results"]);
    assert_eq!(a.report["config"], b.report["config"]);
    let c = run(&["ccnr", "--d1", "3", "--d2", "3", "--restarts", "2", "--seed", "5"]);
    let d = run(&["ccnr", "--d1", "3", "--d2", "3", "--restarts", "2", "--seed", "5"]);
    assert_eq!(c.report["results"], d.report["results"]);
}

#[test]
fn seed_comes_from_environment_unless_given() {
    let args = ["wy", "--builtin", "isotropic:0.1:2", "--restarts", "2"];
    assert_eq!(run(&args).report["config"]["seesaw"]["seed"], 0);
    assert_eq!(run_env(&args, &[("QFIOPT_SEED", "3")]).report["config"]["seesaw"]["seed"], 3);
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "9"]);
    assert_eq!(run_env(&flagged, &[("QFIOPT_SEED", "3")]).report["config"]["seesaw"]["seed"], 9);
}

#[test]
fn wy_examples() {
    let r = run(&["wy", "--builtin", "isotropic:0.1:2"]);
    assert_eq!(r.code, 0);
    assert!((num(&r.report["results"], &["four_wy"]) - 10.3338).abs() < 1e-3);

    let bell_wy = run(&["wy", "--builtin", "isotropic:0:2"]);
    let bell_qfi = run(&["gain", "--builtin", "isotropic:0:2"]);
    let (w, f) = (num(&bell_wy.report["results"], &["four_wy"]), num(&bell_qfi.report["results"], &["qfi"]));
    assert!((w - f).abs() < 1e-8, "{w} vs {f}");

    let mixed = run(&["wy", "--builtin", "maximally-mixed:3:3"]);
    assert!(num(&mixed.report["results"], &["four_wy"]).abs() < 1e-12);
}

#[test]
fn relaxation_examples() {
    let h = run(&["relax", "--builtin", "horodecki:0.3"]);
    assert_eq!(h.code, 0);
    assert!((num(&h.report["results"], &["upper_bound"]) - 5.1280).abs() < 2e-3);
    let u = run(&["relax", "--builtin", "upb-tiles"]);
    assert!((num(&u.report["results"], &["upper_bound"]) - 6.1667).abs() < 2e-3);

    let iso = run(&["relax", "--builtin", "isotropic:0.1:2"]);
    let res = &iso.report["results"];
    assert_eq!(res["tight"], Value::Bool(true));
    let seesaw = run(&["gain", "--builtin", "isotropic:0.1:2"]);
    let f = num(&seesaw.report["results"], &["qfi"]);
    assert!((num(res, &["upper_bound"]) - f).abs() < 1e-6);
    assert!((num(res, &["extracted", "value"]) - f).abs() < 1e-6);
}

#[test]
fn relaxation_options() {
    let scan = run(&["relax", "--builtin", "upb-tiles", "--trace-pinning", "scan"]);
    let plain = run(&["relax", "--builtin", "upb-tiles"]);
    assert_eq!(scan.code, 0);
    let (b_scan, b_plain) = (num(&scan.report["results"], &["upper_bound"]), num(&plain.report["results"], &["upper_bound"]));
    assert!(b_scan <= b_plain + 1e-6);
    assert!(!scan.report["results"]["scan"].as_array().unwrap().is_empty());

    // a pinned bound never sits below a Hamiltonian extracted under the same pinning
    let pinned = run(&["relax", "--builtin", "isotropic:0.1:2", "--trace-pinning", "2,0"]);
    let res = &pinned.report["results"];
    assert!(num(res, &["extracted", "value"]) <= num(res, &["upper_bound"]) + 1e-6);

    for mode in ["sum", "trace"] {
        let r = run(&["relax", "--builtin", "isotropic:0.1:2", "--mode", mode]);
        assert_eq!(r.code, 0);
        assert_eq!(r.report["config"]["mode"], mode);
        assert!(r.report["results"]["extracted"].is_null());
    }
}

#[test]
fn ccnr_examples() {
    let two = run(&["ccnr", "--d1", "2", "--d2", "2", "--restarts", "4"]);
    assert_eq!(two.code, 0, "{}", two.stderr);
    assert!((num(&two.report["results"], &["trace_norm"]) - 1.0).abs() < 1e-6);
    assert_eq!(two.report["results"]["ppt"]["ppt"], Value::Bool(true));

    let three = run(&["ccnr", "--d1", "3", "--d2", "3", "--restarts", "20"]);
    assert!((num(&three.report["results"], &["trace_norm"]) - 1.1890).abs() < 2e-3);

    let bes = run(&["ccnr", "--builtin", "ccnr-bes-4x4"]);
    assert_eq!(bes.code, 0);
    assert!((num(&bes.report["results"], &["trace_norm"]) - 1.5).abs() < 1e-9);
    assert_eq!(bes.report["results"]["bound_entangled"], Value::Bool(true));
}

#[test]
fn state_gen_then_info() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("iso.json");
    let path = path.to_str().unwrap();
    let g = run(&["state", "gen", "isotropic", "--p", "0.1", "--d", "2", "-o", path]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    let info = run(&["state", "info", path]);
    assert_eq!(info.code, 0);
    let spectrum: Vec<f64> =
        info.report["results"]["spectrum"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let want = [0.925, 0.025, 0.025, 0.025];
    assert_eq!(spectrum.len(), 4);
    assert!(spectrum.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{spectrum:?}");
    assert_eq!(info.report["input"]["kind"], "file");
    assert_eq!(info.report["input"]["sha256"], g.report["results"]["output"]["sha256"]);
    assert_eq!(info.report["results"]["ppt"]["ppt"], Value::Bool(false));
}

#[test]
fn special_separable_check() {
    let dir = tempfile::tempdir().unwrap();
    let dims = BipartiteDims::new(2, 3).unwrap();
    let rho1 = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]), None)
        .unwrap();
    let rho2 = DensityMatrix::new(
        CMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.2].map(|x| c(x, 0.0))),
        None,
    )
    .unwrap();
    let p = 0.4;
    let rho = special_separable_compose(&rho1, &rho2, p, dims).unwrap();
    let path = dir.path().join("composed.json");
    save_state(&rho, Some("composed"), &path).unwrap();
    let r = run(&["state", "check-special-separable", path.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    let res = &r.report["results"];
    assert_eq!(res["member"], Value::Bool(true));
    // reduced states are p rho1 + (1 - p) 1/d1 and (1 - p) rho2 + p 1/d2
    let (min1, min2) = (rho1.eigenvalues().last().copied().unwrap(), 0.2);
    let low = p * (1.0 - 2.0 * min1);
    let high = p + 3.0 * (1.0 - p) * min2;
    let interval = res["p_interval"].as_array().unwrap();
    assert!((interval[0].as_f64().unwrap() - low).abs() < 1e-9, "{interval:?} vs {low}");
    assert!((interval[1].as_f64().unwrap() - high).abs() < 1e-9, "{interval:?} vs {high}");

    let bell = run(&["state", "check-special-separable", "--builtin", "isotropic:0:2"]);
    assert_eq!(bell.code, 0);
    assert_eq!(bell.report["results"]["member"], Value::Bool(false));
}

#[test]
fn reports_echo_the_command_line() {
    let r = run(&["--threads", "1", "ccnr", "--builtin", "ccnr-bes-4x4"]);
    let argv: Vec<&str> = r.report["command"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(&argv[1..], ["--threads", "1", "ccnr", "--builtin", "ccnr-bes-4x4"]);
    assert_eq!(r.report["subcommand"], "ccnr");
    assert!(r.report["version"].as_str().unwrap().starts_with("qfiopt "));
    assert!(num(&r.report, &["duration_seconds"]) >= 0.0);
}
