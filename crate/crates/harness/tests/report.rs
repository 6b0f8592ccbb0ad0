use dnls_harness::report::SCHEMA_VERSION;
use dnls_harness::{experiments, ExperimentConfig, ExperimentKind, Report};
use serde_json::Value;

const SMALL: &str = r#"{
  "model": { "kind": "gauged" },
  "grid": { "length": 32.0, "modes": 64 },
  "solver": { "dt": 0.005, "t_final": 0.2, "sample_every": 4 },
  "data": { "recipe": { "name": "gaussian", "width": 3.0 }, "target_mass": 5.089380098815465 },
  "symbols": { "s": 0.6, "thresholds": [4.0] }
}"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_json(SMALL).unwrap()
}

#[test]
fn empty_report_has_header_only_csv() {
    let r = Report::new(ExperimentKind::Conservation, &small(), &["dt", "t", "mass"]);
    assert_eq!(r.to_csv(), "dt,t,mass\n");
    assert_eq!(r.to_jsonl().lines().count(), 1);
}

#[test]
fn jsonl_round_trips() {
    let r = experiments::run(&small(), ExperimentKind::Conservation).unwrap();
    assert!(!r.rows.is_empty());
    let back = Report::from_jsonl(&r.to_jsonl()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn every_record_carries_the_schema_version() {
    let r = experiments::run(&small(), ExperimentKind::Conservation).unwrap();
    for line in r.to_jsonl().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
    }
}

#[test]
fn csv_has_one_line_per_row() {
    let r = experiments::run(&small(), ExperimentKind::Conservation).unwrap();
    let text = r.to_csv();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), r.columns.join(","));
    assert_eq!(lines.count(), r.rows.len());
}

#[test]
fn wrong_schema_version_is_rejected() {
    let r = Report::new(ExperimentKind::Conservation, &small(), &["t"]);
    let mut text = r.to_jsonl();
    text.push_str(&format!("{{\"schema_version\":{},\"record\":\"metric\",\"name\":\"x\",\"value\":1.0}}\n", SCHEMA_VERSION + 1));
    assert!(Report::from_jsonl(&text).is_err());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let text = SMALL.replacen("\"model\"", "\"modle\": 1, \"model\"", 1);
    assert!(ExperimentConfig::from_json(&text).is_err());
}

#[test]
fn config_hash_tracks_content() {
    let a = small();
    let mut b = small();
    assert_eq!(a.hash(), b.hash());
    b.seed = Some(3);
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn scan_needs_three_octaves() {
    let mut cfg = small();
    cfg.symbols.thresholds = vec![4.0, 8.0, 16.0];
    let err = experiments::run(&cfg, ExperimentKind::Nscan).unwrap_err();
    assert!(err.to_string().contains("octave"), "{err}");
}
