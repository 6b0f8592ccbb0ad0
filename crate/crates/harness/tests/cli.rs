use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dnls-harness");

fn config(dir: &Path, dt: f64, width: f64) -> std::path::PathBuf {
    let text = format!(
        r#"{{
  "experiment": "conservation",
  "model": {{ "kind": "gauged" }},
  "grid": {{ "length": 32.0, "modes": 128 }},
  "solver": {{ "dt": {dt}, "t_final": 1.0, "sample_every": 10 }},
  "data": {{ "recipe": {{ "name": "gaussian", "width": {width} }}, "target_mass": 5.089380098815465 }},
  "symbols": {{ "s": 0.6, "thresholds": [8.0] }}
}}"#
    );
    let path = dir.join(format!("cfg-{dt}-{width}.json"));
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 0.0025, 3.0);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["conservation.jsonl", "conservation.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary = String::from_utf8(read(&out, "summary.txt")).unwrap();
    assert!(summary.contains("PASS relative_mass_drift") && summary.ends_with("verdict: PASS\n"));
}

#[test]
fn failed_criterion_exits_two() {
    // the narrow bump steepens past the band and the energy drift stops scaling with dt
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 0.0025, 1.0);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(read(&out, "summary.txt")).unwrap().contains("verdict: FAIL"));
}

#[test]
fn runtime_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ \"model\": ").unwrap();
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = run(&["run", "--config", tmp.path().join("missing.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    // one threshold cannot span three octaves
    let cfg = config(tmp.path(), 0.0025, 3.0);
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--experiment", "nscan", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_is_byte_stable_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 0.005, 3.0);
    let dirs: Vec<_> = ["1", "2", "3"].iter().map(|t| tmp.path().join(format!("t{t}"))).collect();
    for (threads, dir) in ["1", "2", "3"].iter().zip(&dirs) {
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.code().is_some_and(|c| c != 1));
    }
    for f in ["conservation.jsonl", "conservation.csv", "summary.txt"] {
        assert_eq!(read(&dirs[0], f), read(&dirs[1], f), "{f}");
        assert_eq!(read(&dirs[0], f), read(&dirs[2], f), "{f}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 0.005, 3.0);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "9"]);
    let head = |d: &Path| String::from_utf8(read(d, "conservation.jsonl")).unwrap().lines().next().unwrap().to_string();
    assert_ne!(head(&a), head(&b));
    assert!(head(&b).contains("\"seed\":9"));
}
