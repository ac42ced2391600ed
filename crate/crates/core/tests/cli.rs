use std::process::{Command, Output};

use serde_json::Value;

fn knotpot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knotpot"))
        .args(args)
        .env_remove("KNOTPOT_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn re(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn complete_table() {
    let o = knotpot(&["--spec", "builtin:5_2", "complete"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("volume              2.82812208833078"), "{text}");
    assert!(text.contains("-0.662358978622373 + 0.562279512062301i"));
}

#[test]
fn complete_json_schema() {
    let o = knotpot(&["--spec", "builtin:5_2", "complete", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["schema"], 1);
    for key in ["x", "y", "shapes", "volume", "volume_from_shapes", "eta", "residual"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert!((re(&doc["volume"]) - 2.82812208833).abs() < 1e-8);
    assert!((re(&doc["volume_from_shapes"]) - re(&doc["volume"])).abs() < 1e-9);
    assert!((re(&doc["eta"]["re"]) - 1.0).abs() < 1e-10);
    assert_eq!(doc["shapes"].as_object().unwrap().len(), 5);
}

#[test]
fn missing_spec_file() {
    let o = knotpot(&["--spec", "missing.json", "complete"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("five_two.json");
    std::fs::write(&path, knotpot::potential::builtin_five_two().to_json()).unwrap();
    let o = knotpot(&["--spec", path.to_str().unwrap(), "complete", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((re(&json(&o)["volume"]) - 2.82812208833).abs() < 1e-8);
}

#[test]
fn malformed_spec_file_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"k\",\n  \"variables\": [\"x\",\n}\n").unwrap();
    let o = knotpot(&["--spec", path.to_str().unwrap(), "complete"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn fill_seven_and_minus_seven() {
    let a = json(&knotpot(&["fill", "--slope", "7", "--format", "json"]));
    assert_eq!(a["converged"], true);
    let vol = re(&a["volume"]);
    assert!(vol > 0.0 && vol < 2.8282, "{vol}");
    assert!(re(&a["filling_residual"]) <= 1e-9);
    assert_eq!((a["p"].as_i64(), a["q"].as_i64(), a["r"].as_i64(), a["s"].as_i64()), (Some(7), Some(1), Some(-1), Some(0)));

    let b = knotpot(&["fill", "--slope", "-7", "--format", "json"]);
    assert_eq!(b.status.code(), Some(0));
    let b = json(&b);
    assert_eq!(b["slope"], "-7/1");
    // the two fillings are different manifolds: 5_2 is not amphichiral
    assert!((re(&b["volume"]) - 1.75712602918845).abs() < 1e-9);
}

#[test]
fn fill_bad_slopes() {
    for bad in ["0/0", "3/0", "x", "1/2/3"] {
        let o = knotpot(&["fill", "--slope", bad]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
    }
}

#[test]
fn fill_exceptional_slope_is_an_obstruction() {
    let o = knotpot(&["fill", "--slope", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("possibly exceptional slope"));
    let o = knotpot(&["fill", "--slope", "-2/1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["converged"], false);
}

#[test]
fn scan_small() {
    let o = knotpot(&["scan", "--pmax", "1", "--qmax", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,q,r,s,converged,volume,cs_mod_half,length,torsion,residual,steps");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-1,1,"));
    assert!(lines[2].starts_with("0,1,-1,0,false"));
    assert!(lines[3].starts_with("1,1,-1,0,true"));
}

#[test]
fn scan_respects_volume_bound_and_is_deterministic() {
    let args = ["scan", "--pmax", "8", "--qmax", "2", "--format", "csv"];
    let a = knotpot(&args);
    let b = knotpot(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut converged = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[4] == "true" {
            converged += 1;
            let v: f64 = rec[5].parse().unwrap();
            assert!(v > 0.0 && v < 2.8282, "{rec:?}");
        } else {
            assert!(rec[5].is_empty());
        }
    }
    assert_eq!(converged, 20);
}

#[test]
fn scan_json_rows() {
    let o = knotpot(&["scan", "--pmax", "2", "--qmax", "2", "--format", "json"]);
    let doc = json(&o);
    assert_eq!(doc["schema"], 1);
    let rows = doc["rows"].as_array().unwrap();
    let pq: Vec<(i64, i64)> = rows.iter().map(|r| (r["p"].as_i64().unwrap(), r["q"].as_i64().unwrap())).collect();
    assert_eq!(pq, [(-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1), (-1, 2), (1, 2)]);
}

#[test]
fn scan_bounds_must_be_positive() {
    assert_eq!(knotpot(&["scan", "--pmax", "0", "--qmax", "1"]).status.code(), Some(1));
}

#[test]
fn trace_empty_path_matches_complete() {
    let o = knotpot(&["trace", "--u-end", "0+0i", "--samples", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    let samples = doc["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 1);
    let c = json(&knotpot(&["complete", "--format", "json"]));
    assert_eq!(samples[0]["x_re"], c["x"]["re"]);
    assert_eq!(samples[0]["x_im"], c["x"]["im"]);
    assert_eq!(samples[0]["y_im"], c["y"]["im"]);
}

#[test]
fn trace_small_loop() {
    let o = knotpot(&["trace", "--u-end", "0.05i", "--samples", "8", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "residual").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert!(r[col].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn trace_far_out_is_obstructed() {
    let o = knotpot(&["trace", "--u-end", "10+0i", "--samples", "4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(3));
    let rows = stdout(&o).lines().count() - 1;
    assert!((1..4).contains(&rows), "{rows}");
}

#[test]
fn selftest_passes() {
    let o = knotpot(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc = json(&knotpot(&["selftest", "--format", "json"]));
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["groups"].as_array().unwrap().len(), 3);
}

#[test]
fn selftest_catches_a_broken_bloch_wigner_sign() {
    let o = knotpot(&["selftest", "--fault", "negate-d"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("dilog-identities"));
}

#[test]
fn tolerance_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_knotpot"))
        .args(["complete"])
        .env("KNOTPOT_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_knotpot"))
        .args(["fill", "--slope", "7"])
        .env("KNOTPOT_TOL", "1e-9")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let o = knotpot(&["scan", "--pmax", "1", "--qmax", "1", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("p,q,r,s,"));
}

#[test]
fn numbers_have_fifteen_significant_digits() {
    let text = stdout(&knotpot(&["fill", "--slope", "7", "--format", "csv"]));
    let row = text.lines().nth(1).unwrap();
    let volume = row.split(',').nth(5).unwrap();
    assert_eq!(volume, "2.53772525630352");
}

#[test]
fn spec_without_a_geometric_root() {
    let mut spec = knotpot::potential::builtin_five_two();
    spec.dilog_terms[0].sign = -spec.dilog_terms[0].sign;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flipped.json");
    std::fs::write(&path, spec.to_json()).unwrap();
    let o = knotpot(&["--spec", path.to_str().unwrap(), "complete"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("complete structure not found"));
}
