use std::process::{Command, Output};

use serde_json::Value;

fn qverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qverify"))
        .args(args)
        .env_remove("QVERIFY_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn list_shows_whole_registry() {
    let o = qverify(&["list", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    let ids: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 18);
    for id in [
        "G1", "G2", "G3", "H1", "H2", "K1", "K5", "D1", "D2", "C1", "C2", "B1", "X1",
    ] {
        assert!(ids.contains(&id), "{id}");
    }
    let text = stdout(&qverify(&["list"]));
    assert!(text.contains("X1") && text.contains("EXPERIMENTAL"));
}

#[test]
fn list_single_entry() {
    let o = qverify(&["list", "G2", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v.as_array().unwrap().len(), 1);
    let constraints: Vec<&str> = v[0]["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert!(constraints.contains(&"|λ| < 1"), "{constraints:?}");
}

#[test]
fn verify_passes_and_reports_points() {
    let o = qverify(&[
        "verify",
        "G2",
        "--samples",
        "25",
        "--precision-bits",
        "192",
        "--tolerance",
        "1e-30",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let points = v["results"][0]["points"].as_array().unwrap();
    assert_eq!(points.len(), 25);
    for key in [
        "params",
        "lhs",
        "rhs",
        "rel_error",
        "terms_lhs",
        "terms_rhs",
        "bits",
        "pass",
    ] {
        assert!(points[0].get(key).is_some(), "{key}");
    }
    assert!(points[0]["lhs"].is_string());
    assert_eq!(v["run_config"]["seed"], 7);
    assert_eq!(v["summary"]["pass"], true);
}

#[test]
fn unknown_identity_is_usage_error() {
    assert_eq!(qverify(&["verify", "NOPE"]).status.code(), Some(2));
    assert_eq!(qverify(&["list", "NOPE"]).status.code(), Some(2));
    assert_eq!(qverify(&["certify", "thm9"]).status.code(), Some(2));
    assert_eq!(qverify(&["limit", "G9:G1"]).status.code(), Some(2));
}

#[test]
fn invalid_config_values_are_usage_errors() {
    assert_eq!(
        qverify(&["verify", "G1", "--tolerance", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qverify(&["verify", "G1", "--samples", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qverify(&["verify", "G1", "--precision-bits", "32"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qverify(&["verify", "G1", "--format", "xml"]).status.code(),
        Some(2)
    );
}

#[test]
fn experimental_entries_never_gate() {
    let o = qverify(&["verify", "X1", "--perturb-rhs", "1.001"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("EXPERIMENTAL") && text.contains("FAIL"),
        "{text}"
    );
}

#[test]
fn perturbed_right_side_fails() {
    let o = qverify(&[
        "verify",
        "K1",
        "--samples",
        "5",
        "--perturb-rhs",
        "1.000001",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_grid_with_skipped_cells() {
    let o = qverify(&[
        "sweep",
        "G2",
        "--param",
        "a=0.5:3:0.5",
        "--param",
        "b=0.5:3:0.5",
        "--param",
        "q=0.5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["summary"]["cells"], 36);
    assert_eq!(v["summary"]["pass"], true);

    // |λ| ≥ 1 for these a at q = 0.9.
    let o = qverify(&[
        "sweep",
        "G2",
        "--param",
        "a=-0.5:0:0.25",
        "--param",
        "b=0.5",
        "--param",
        "q=0.9",
    ]);
    let text = stdout(&o);
    assert!(text.contains("skip"));
    assert!(text.trim_end().ends_with("PASS"), "{text}");
}

#[test]
fn malformed_grids_are_usage_errors() {
    for bad in [
        vec![
            "sweep", "G2", "--param", "a=1:2", "--param", "b=1", "--param", "q=0.5",
        ],
        vec![
            "sweep", "G2", "--param", "a=1:2:0", "--param", "b=1", "--param", "q=0.5",
        ],
        vec!["sweep", "G2", "--param", "a=1", "--param", "q=0.5"],
        vec![
            "sweep", "G2", "--param", "a=1", "--param", "b=1", "--param", "q=0.5", "--param", "z=1",
        ],
    ] {
        assert_eq!(qverify(&bad).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn limit_pairs_from_the_command_line() {
    let o = qverify(&["limit", "G2:G1", "--a", "3", "--b", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = qverify(&["limit", "G3:G1", "--a", "2", "--b", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["result"]["pass"], true);
    let o = qverify(&["limit", "C2:C1"]);
    let text = stdout(&o);
    assert!(text.contains("ratio") && text.contains("STABLE"), "{text}");
    assert_eq!(
        qverify(&["limit", "G2:G1", "--c", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn certify_prints_solver_coefficients() {
    let o = qverify(&[
        "certify",
        "thm2.2",
        "--seed",
        "3",
        "--samples",
        "1",
        "--verbose",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in ["a1 =", "a2 =", "t* ="] {
        assert!(text.contains(key), "{text}");
    }
    assert_eq!(
        qverify(&["certify", "thm2.1", "--samples", "10"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        qverify(&["certify", "variant2", "--samples", "10"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        qverify(&[
            "certify",
            "gauss",
            "--samples",
            "2",
            "--perturb-claim",
            "1.000001"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn csv_output_is_one_row_per_point() {
    let o = qverify(&["verify", "G1", "H1", "--samples", "3", "--format", "csv"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "id");
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    // Point fields contain commas and so must come back quoted.
    assert!(rows[0][2].contains(','));
}

#[test]
fn config_file_and_environment() {
    let dir = std::env::temp_dir().join(format!("qverify-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    let out = dir.join("report.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"ids": ["G1"], "samples": 2, "seed": 4, "format": "json", "output": {:?}}}"#,
            out
        ),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qverify"))
        .args(["--config", cfg.to_str().unwrap(), "verify"])
        .env("QVERIFY_PRECISION_BITS", "256")
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["run_config"]["samples"], 2);
    assert_eq!(v["run_config"]["precision_bits"], 256);
    assert_eq!(v["results"][0]["points"].as_array().unwrap().len(), 2);

    std::fs::write(&cfg, r#"{"sample": 2}"#).unwrap();
    assert_eq!(
        qverify(&["--config", cfg.to_str().unwrap(), "verify", "G1"])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).ok();
}
