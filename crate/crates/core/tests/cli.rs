use std::fs;
use std::path::Path;

use embolic::cli::{main_with_args, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK, EXIT_RESOURCE};

struct Outcome {
    code: u8,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["embolic"];
    argv.extend_from_slice(args);
    let code = main_with_args(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_run_homology_report() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("s.space");
    let out = cli(&["generate", "sphere2", "--m", "300", "--out", p(&space)]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.contains("\"generator\": \"sphere2:300\""));
    let meta = dir.path().join("s.space.meta");
    assert!(meta.exists());

    let report = dir.path().join("r.json");
    let complex = dir.path().join("r.cx");
    let out = cli(&[
        "run", "--in", p(&space), "--truth", p(&meta), "--r0", "0.24inj",
        "--out", p(&report), "--complex-out", p(&complex), "--threads", "2",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["betti_match"], true);
    assert_eq!(json["T"], json["t"][1]);
    for key in ["theta", "alpha", "beta_n", "R0", "N", "bound_T", "Cn", "Dnprime", "main_inequality_ok"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }

    let out = cli(&["homology", "--complex", p(&complex), "--field", "3"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout.trim(), "1 0 1 0");

    let out = cli(&["report", p(&report)]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.lines().any(|l| l.starts_with("betti_match") && l.ends_with("true")));
}

#[test]
fn binary_and_text_inputs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for binary in [false, true] {
        let space = dir.path().join(format!("c{binary}.space"));
        let mut args = vec!["generate", "circle", "--m", "200", "--out", p(&space)];
        if binary {
            args.push("--binary");
        }
        assert_eq!(cli(&args).code, EXIT_OK);
        let report = dir.path().join(format!("r{binary}.json"));
        let out = cli(&["run", "--in", p(&space), "--r0", "0.5", "--out", p(&report)]);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        reports.push(fs::read(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn corrupt_space_is_rejected_at_validate() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("bad.space");
    // d(0,2) = 5 > d(0,1) + d(1,2) = 2.
    fs::write(&space, "3 1 1.0\n1 1 1\n0 1 5\n1 0 1\n5 1 0\n").unwrap();
    let out = cli(&["run", "--in", p(&space), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("validate"), "{}", out.stderr);
    assert!(out.stderr.contains("triangle"), "{}", out.stderr);
}

#[test]
fn malformed_space_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("bad.space");
    fs::write(&space, "2 1 1.0\n1 1\n0 1\n1 x\n").unwrap();
    let out = cli(&["run", "--in", p(&space), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("line 4"), "{}", out.stderr);
}

#[test]
fn complex_missing_face_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cx = dir.path().join("x.cx");
    fs::write(&cx, "2 3 2 1\n0\n1\n2\n0 1\n1 2\n0 1 2\n").unwrap();
    let out = cli(&["homology", "--complex", p(&cx)]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("not downward closed"), "{}", out.stderr);
}

#[test]
fn betti_mismatch_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    // At R0 = inj/2 the doubled arcs wrap past the antipode and the nerve
    // collapses to a point, so the circle's loop is lost.
    let out = cli(&["run", "--gen", "circle:400", "--out", p(&report)]);
    assert_eq!(out.code, EXIT_CHECK_FAILED, "{}", out.stderr);
    assert!(out.stderr.contains("betti_match"), "{}", out.stderr);
    assert!(report.exists());
}

#[test]
fn multiplicity_cap_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "run", "--gen", "sphere2:300", "--r0", "0.24inj", "--cap", "1",
        "--out", p(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.code, EXIT_RESOURCE, "{}", out.stderr);
    assert!(out.stderr.contains("nerve"), "{}", out.stderr);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "gen = \"flat-torus:1,1,30,30\"\nr0 = \"0.5\"\nfield = 3\nout = \"{}\"\n",
            p(&report)
        ),
    )
    .unwrap();
    let out = cli(&["run", "--config", p(&config), "--r0", "0.12"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["field"], 3);
    assert_eq!(json["R0"].as_f64(), Some(0.12));
    assert_eq!(json["b"], serde_json::json!([1, 2, 1, 0]));

    fs::write(&config, "gen = \"circle:100\"\nbogus = 1\n").unwrap();
    let out = cli(&["run", "--config", p(&config)]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("config"), "{}", out.stderr);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(cli(&["run"]).code, EXIT_INVALID);
    assert_eq!(cli(&["run", "--gen", "circle:50", "--field", "4"]).code, EXIT_INVALID);
    assert_eq!(cli(&["run", "--gen", "circle:50", "--r0", "3"]).code, EXIT_INVALID);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_INVALID);
    let out = cli(&["run", "--gen", "circle:50", "--r0", "0.01"]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("croke_estimate"), "{}", out.stderr);
}
