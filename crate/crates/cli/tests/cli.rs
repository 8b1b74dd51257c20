use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use structcalc::pixel::corpus::{place, render, Figure};
use structcalc::rules::synth::{planted_log, PlantedSpec};
use structcalc::solver::blocks::{block_problem, Block};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data(name: &str) -> PathBuf {
    root().join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn validator() -> jsonschema::JSONSchema {
    let text = fs::read_to_string(root().join("schemas/report.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft202012)
        .compile(&schema)
        .expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let schema = validator();
    if let Err(errs) = schema.validate(v) {
        let msgs: Vec<String> = errs.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    };
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn iso_exit_codes() {
    let c3 = data("cycle3.struct");
    let same = run(&["iso", path(&c3), path(&c3)]);
    assert_eq!(same.status.code(), Some(0));
    let rep = report(&same);
    assert_valid(&rep);
    assert_eq!(rep["result"]["isomorphic"], true);
    assert_eq!(rep["result"]["witness"].as_object().unwrap().len(), 3);

    let diff = run(&["iso", path(&c3), path(&data("path3.struct"))]);
    assert_eq!(diff.status.code(), Some(1));
    assert_eq!(report(&diff)["result"]["isomorphic"], false);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.struct");
    fs::write(&bad, "part a x\nrel a\n").unwrap();
    let out = run(&["iso", path(&c3), path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["iso", "only-one"]).status.code(), Some(2));
    assert_eq!(run(&["iso", "/no/such/a", "/no/such/b"]).status.code(), Some(2));
    assert_eq!(run(&["demo-polygons"]).status.code(), Some(2));
}

#[test]
fn derive_records_lineage() {
    let out = run(&[
        "derive",
        path(&data("cycle3.struct")),
        "--sidecar",
        path(&data("pair.sidecar")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_valid(&rep);
    let kinds: Vec<&str> = rep["result"]["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["quotient", "morphism"]);
    let text = rep["result"]["output"].as_str().unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("part")).count(), 2);
    assert!(!text.contains("count="));

    let portion = run(&["derive", path(&data("cycle3.struct")), "--portion", "a,b"]);
    assert_eq!(portion.status.code(), Some(0));
    assert_eq!(report(&portion)["result"]["records"][0]["kind"], "portion");
    let apart = run(&["derive", path(&data("path3.struct")), "--portion", "a,c"]);
    assert_eq!(apart.status.code(), Some(2));
}

#[test]
fn analyze_triangle_and_blank() {
    let out = run(&["analyze", path(&data("triangle.pbm"))]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_valid(&rep);
    let assertions = rep["result"]["assertions"].as_array().unwrap();
    let whole = |f: &str| {
        assertions
            .iter()
            .find(|a| a["target"]["kind"] == "whole" && a["feature"] == f)
            .map(|a| a["value"].clone())
    };
    assert_eq!(whole("side_count"), Some(serde_json::json!({"bin": 3})));
    assert_eq!(whole("closed"), Some(serde_json::json!({"bool": true})));

    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pbm");
    fs::write(&blank, "P1\n5 4\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n").unwrap();
    let out = run(&["analyze", path(&blank)]);
    assert_eq!(out.status.code(), Some(1));
    let rep = report(&out);
    assert_valid(&rep);
    assert_eq!(rep["result"]["regions"]["count"], 1);
    assert!(rep["result"]["chains"].as_array().unwrap().is_empty());

    let junk = dir.path().join("junk.pbm");
    fs::write(&junk, "P7\n1 1\n0\n").unwrap();
    assert_eq!(run(&["analyze", path(&junk)]).status.code(), Some(2));
}

#[test]
fn hexagon_at_two_scales_fires_alike() {
    let dir = tempfile::tempdir().unwrap();
    let mut fired = Vec::new();
    for u in [16.0, 32.0] {
        let file = dir.path().join(format!("hex{u}.pbm"));
        fs::write(&file, render(&place(Figure::RegularHexagon, u, 0.0), 3).to_pbm()).unwrap();
        let rep = report(&run(&["analyze", path(&file)]));
        fired.push(rep["result"]["firings"].clone());
    }
    assert_eq!(fired[0], fired[1]);
}

#[test]
fn mine_recovers_planted_rule() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("planted.log");
    fs::write(&log, planted_log(&PlantedSpec::default(), 3).to_text()).unwrap();
    let out = run(&["mine", path(&log), "--min-support", "30", "--min-p", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_valid(&rep);
    assert_eq!(rep["config"]["mine"]["min_support"], 30);
    let plain = rep["result"]["rules"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| {
            let m = r["condition"]["members"].as_array().unwrap();
            m.len() == 1 && m[0]["subject"] == "A" && m[0]["polarity"] == "positive"
        })
        .expect("A => X mined");
    assert_eq!(plain["consequent"][0]["subject"], "X");
    assert!((plain["p"].as_f64().unwrap() - 0.8).abs() <= 0.05);

    let none = run(&["mine", path(&log), "--min-p", "1.0"]);
    assert_eq!(none.status.code(), Some(1));
    assert_eq!(run(&["mine", path(&log), "--horizon", "0"]).status.code(), Some(2));
}

#[test]
fn solve_plans_and_trivial_problem() {
    let out = run(&["solve", path(&data("blocks.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_valid(&rep);
    assert_eq!(rep["result"]["cost"], 3);

    let trivial = report(&run(&["solve", path(&data("trivial.json"))]));
    assert_eq!(trivial["result"]["status"], "solved");
    assert!(trivial["result"]["plan"].as_array().unwrap().is_empty());

    let tight = run(&["solve", path(&data("blocks.json")), "--budget", "1"]);
    assert_eq!(tight.status.code(), Some(1));
    assert_eq!(report(&tight)["result"]["status"], "budget-exhausted");
}

#[test]
fn solve_reuses_cache_for_scaled_twin() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.json");
    let first = run(&[
        "solve",
        path(&data("blocks.json")),
        "--cache",
        path(&cache),
        "--cache-mask",
        path(&data("size.mask")),
    ]);
    assert_eq!(report(&first)["result"]["replayed"], false);
    let twin = report(&run(&["solve", path(&data("blocks-twin.json")), "--cache", path(&cache)]));
    assert_eq!(twin["result"]["replayed"], true);
    assert_eq!(twin["result"]["expanded"], 0);
    assert!(twin["result"]["plan"][0].as_str().unwrap().contains("big_"));
}

#[test]
fn unsolvable_problem_exits_1() {
    let blocks = [Block::new("a", "red", 1), Block::new("b", "green", 1)];
    let p = block_problem(&blocks, &[vec!["a"], vec!["b"]], &[vec!["red", "red"]]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    fs::write(&file, serde_json::to_string(&p).unwrap()).unwrap();
    let out = run(&["solve", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["status"], "unsolvable");
}

#[test]
fn config_file_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"budget": 7, "pixel": {"angle_bin_deg": 15.0}}"#).unwrap();
    let rep = report(&run(&["--config", path(&cfg), "iso", path(&data("cycle3.struct")), path(&data("cycle3.struct"))]));
    assert_eq!(rep["config"]["budget"], 7);
    assert_eq!(rep["config"]["pixel"]["angle_bin_deg"], 15.0);
    assert_eq!(rep["config"]["pixel"]["orientation_bins"], 16);
    fs::write(&cfg, r#"{"budjet": 7}"#).unwrap();
    let bad = run(&["--config", path(&cfg), "iso", path(&data("cycle3.struct")), path(&data("cycle3.struct"))]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sub/iso.json");
    let out = run(&["--out", path(&file), "iso", path(&data("cycle3.struct")), path(&data("path3.struct"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let rep: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(rep["command"], "iso");
}

#[test]
fn schema_rejects_malformed_reports() {
    let mut rep = report(&run(&["solve", path(&data("trivial.json"))]));
    assert_valid(&rep);
    rep["result"]["status"] = "done".into();
    assert!(!validator().is_valid(&rep));
    let mut rep = report(&run(&["iso", path(&data("cycle3.struct")), path(&data("path3.struct"))]));
    rep["extra"] = 1.into();
    assert!(!validator().is_valid(&rep));
}

#[test]
fn demo_is_deterministic_and_valid() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["demo-polygons", "--seed", "42", "--out", path(d.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert_valid(&summary);
    assert_eq!(summary["result"]["summary"]["correct"], 60);
    let reports: Vec<PathBuf> = fs::read_dir(a.path().join("reports"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(reports.len(), 60);
    for r in &reports {
        let v: Value = serde_json::from_str(&fs::read_to_string(r).unwrap()).unwrap();
        assert_valid(&v);
        let twin = b.path().join("reports").join(r.file_name().unwrap());
        assert_eq!(fs::read(r).unwrap(), fs::read(twin).unwrap());
    }
    assert_eq!(fs::read_dir(a.path().join("corpus")).unwrap().count(), 60);
}
