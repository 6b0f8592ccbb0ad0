//! Report assembly and emission: `<experiment>.jsonl`, `<experiment>.csv`, `summary.txt`.
//!
//! Every JSONL record carries `schema_version`. Floats are written in shortest round-trip
//! form and no wall-clock data is recorded, so identical runs emit identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ExperimentKind, GridSpec};
use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

/// Lattice-sum caps in force for the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub lambda4: usize,
    pub lambda6: usize,
    pub lambda8: usize,
}

impl Caps {
    pub fn current() -> Self {
        use dnls_core::multilinear::exact_cap;
        Self {
            lambda4: exact_cap(4).unwrap_or(usize::MAX),
            lambda6: exact_cap(6).unwrap_or(usize::MAX),
            lambda8: exact_cap(8).unwrap_or(usize::MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. `< 1e-10`.
    pub condition: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub grid: GridSpec,
    pub dt: f64,
    pub caps: Caps,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metrics: Vec<Metric>,
    pub criteria: Vec<Criterion>,
}

fn decode<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, HarnessError> {
    serde_json::from_value(v).map_err(|e| HarnessError::Config(format!("malformed report: {e}")))
}

impl Report {
    pub fn new(experiment: ExperimentKind, config: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            experiment,
            config: config.clone(),
            config_hash: config.hash(),
            grid: config.grid,
            dt: config.solver.dt,
            caps: Caps::current(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metrics: Vec::new(),
            criteria: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn criterion(&mut self, name: impl Into<String>, value: f64, condition: impl Into<String>, passed: bool) {
        self.criteria.push(Criterion { name: name.into(), value, condition: condition.into(), passed });
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: Value| {
            out.push_str(&serde_json::to_string(&v).expect("json"));
            out.push('\n');
        };
        line(json!({
            "schema_version": SCHEMA_VERSION,
            "record": "header",
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "config": self.config,
            "grid": self.grid,
            "dt": self.dt,
            "caps": self.caps,
            "columns": self.columns,
        }));
        for row in &self.rows {
            let mut m = Map::new();
            m.insert("schema_version".into(), json!(SCHEMA_VERSION));
            m.insert("record".into(), json!("row"));
            for (c, v) in self.columns.iter().zip(row) {
                m.insert(c.clone(), json!(v));
            }
            line(Value::Object(m));
        }
        for m in &self.metrics {
            line(json!({"schema_version": SCHEMA_VERSION, "record": "metric", "name": m.name, "value": m.value}));
        }
        for c in &self.criteria {
            line(json!({
                "schema_version": SCHEMA_VERSION,
                "record": "criterion",
                "name": c.name,
                "value": c.value,
                "condition": c.condition,
                "passed": c.passed,
            }));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, HarnessError> {
        let bad = |m: &str| HarnessError::Config(format!("malformed report: {m}"));
        let mut lines = text.lines();
        let header: Value = serde_json::from_str(lines.next().ok_or_else(|| bad("empty"))?).map_err(|e| bad(&e.to_string()))?;
        let field = |k: &str| header.get(k).cloned().ok_or_else(|| bad(k));
        let mut report = Report {
            experiment: decode(field("experiment")?)?,
            config: decode(field("config")?)?,
            config_hash: decode(field("config_hash")?)?,
            grid: decode(field("grid")?)?,
            dt: decode(field("dt")?)?,
            caps: decode(field("caps")?)?,
            columns: decode(field("columns")?)?,
            rows: Vec::new(),
            metrics: Vec::new(),
            criteria: Vec::new(),
        };
        for l in lines {
            let v: Value = serde_json::from_str(l).map_err(|e| bad(&e.to_string()))?;
            if v.get("schema_version") != Some(&json!(SCHEMA_VERSION)) {
                return Err(bad("schema version"));
            }
            match v.get("record").and_then(Value::as_str) {
                Some("row") => {
                    let row = report
                        .columns
                        .iter()
                        .map(|c| v.get(c).and_then(Value::as_f64).ok_or_else(|| bad(c)))
                        .collect::<Result<Vec<_>, _>>()?;
                    report.rows.push(row);
                }
                Some("metric") => report.metrics.push(decode(v)?),
                Some("criterion") => report.criteria.push(decode(v)?),
                _ => return Err(bad("record kind")),
            }
        }
        Ok(report)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment.name());
        let _ = writeln!(s, "config hash: {}", self.config_hash);
        let _ = writeln!(s, "grid: L = {}, K = {}", self.grid.length, self.grid.modes);
        let _ = writeln!(s, "dt: {}", self.dt);
        let _ = writeln!(s, "caps: lambda4 K <= {}, lambda6 K <= {}, lambda8 K <= {}", self.caps.lambda4, self.caps.lambda6, self.caps.lambda8);
        let _ = writeln!(s, "rows: {}", self.rows.len());
        for m in &self.metrics {
            let _ = writeln!(s, "{:<32} {:e}", m.name, m.value);
        }
        for c in &self.criteria {
            let _ = writeln!(s, "{} {}: {:e} (required {})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.condition);
        }
        let _ = writeln!(s, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }

    pub fn emit(&self, dir: &Path) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let name = self.experiment.name();
        std::fs::write(dir.join(format!("{name}.jsonl")), self.to_jsonl()).map_err(io)?;
        std::fs::write(dir.join(format!("{name}.csv")), self.to_csv()).map_err(io)?;
        std::fs::write(dir.join("summary.txt"), self.summary()).map_err(io)?;
        Ok(())
    }
}
