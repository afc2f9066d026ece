use std::fs;
use std::process::{Command, Output};

fn pcdesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcdesign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn dims_and_usage_errors() {
    let out = pcdesign(&["dims", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "4 6 4 1 15\n");
    assert_eq!(pcdesign(&["dims", "--k", "3"]).status.code(), Some(2));
    assert_eq!(pcdesign(&["dims"]).status.code(), Some(2));
    assert_eq!(pcdesign(&["tables", "4"]).status.code(), Some(2));
    assert_eq!(
        pcdesign(&["optimize", "--k", "5", "--s", "3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn tables_check_against_printed_values() {
    for which in ["1", "2", "3"] {
        let out = pcdesign(&["tables", which, "--check"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "table {which}: {}",
            stdout(&out)
        );
        assert!(stdout(&out).contains("matches the printed values"));
    }
}

#[test]
fn optimize_is_deterministic() {
    let a = pcdesign(&["optimize", "--k", "7", "--s", "6", "--json"]);
    let b = pcdesign(&["optimize", "--k", "7", "--s", "6", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["K"], 7);
    assert_eq!(doc["S"], 6);
}

#[test]
fn export_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("plan.csv");
    let out = pcdesign(&[
        "optimize",
        "--k",
        "4",
        "--s",
        "4",
        "--export",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pair_id,i_1,i_2,i_3,i_4,j_1,j_2,j_3,j_4,weight"
    );
    // 16 profiles, each paired with 15 others
    assert_eq!(lines.count(), 240);

    let out = pcdesign(&["verify", csv.to_str().unwrap(), "--oracle"]);
    let report = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert!(report.contains("verdict: D-optimal"), "{report}");
    assert!(report.contains("oracle: agrees"));

    let json = dir.path().join("plan.json");
    let out = pcdesign(&[
        "optimize",
        "--k",
        "5",
        "--s",
        "5",
        "--export",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = pcdesign(&["verify", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn verify_reports_singular_and_suboptimal_designs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.csv");
    let out = pcdesign(&["enumerate", "--k", "4", "--s", "4", "--d", "2"]);
    assert_eq!(out.status.code(), Some(0));
    fs::write(&path, &out.stdout).unwrap();
    let out = pcdesign(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not identifiable"), "{err}");

    let doc = r#"{"K":4,"S":4,"depth_weights":[
        {"depth":1,"fraction":"1/2","decimal":0.5},
        {"depth":2,"fraction":"1/2","decimal":0.5}]}"#;
    let path = dir.path().join("half.json");
    fs::write(&path, doc).unwrap();
    let out = pcdesign(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("not optimal"), "{}", stdout(&out));
}

#[test]
fn enumerate_lists_one_orbit() {
    let out = pcdesign(&["enumerate", "--k", "5", "--s", "4", "--d", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // N_1 = 2^4 * C(5,4) * C(4,1)
    assert_eq!(text.lines().count(), 1 + 320);
}

#[test]
fn hvalues_json_uses_exact_fractions() {
    let out = pcdesign(&["hvalues", "--k", "4", "--s", "4", "--d", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["d"], 2);
    let rec = &v[0]["h"];
    assert_eq!(rec["h1"], "2");
    assert_eq!(rec["h2"], "8/3");
    assert_eq!(rec["h4"], "0");
}
