use std::collections::BTreeMap;
use std::io::Write;

use confgeom_core::tensor::{indices, TensorValue};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub label: String,
    pub value: f64,
}

pub fn scalar(label: impl Into<String>, value: f64) -> Vec<Entry> {
    vec![Entry { label: label.into(), value }]
}

/// One entry per component, labelled `name[i,j,…]`.
pub fn tensor(name: &str, t: &TensorValue) -> Vec<Entry> {
    if t.rank() == 0 {
        return scalar(name, t.value());
    }
    indices(t.dim, t.rank())
        .zip(&t.entries)
        .map(|(i, &value)| {
            let idx: Vec<String> = i.iter().map(|k| k.to_string()).collect();
            Entry { label: format!("{name}[{}]", idx.join(",")), value }
        })
        .collect()
}

pub fn vector(name: &str, v: &[f64]) -> Vec<Entry> {
    v.iter().enumerate().map(|(i, &value)| Entry { label: format!("{name}[{i}]"), value }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub inputs_digest: String,
    pub values: Vec<Entry>,
    pub oracle: Vec<Entry>,
    pub residuals: Vec<Entry>,
    pub abs_err: Option<f64>,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub manifest: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub timestamp: String,
    pub checks: Vec<Record>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

impl Report {
    pub fn new(command: String, manifest: String, seed: u64, tolerances: BTreeMap<String, f64>, checks: Vec<Record>) -> Report {
        let passed = checks.iter().filter(|c| c.pass).count();
        let failed = checks.len() - passed;
        let timestamp = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .unwrap_or_default();
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            manifest,
            seed,
            tolerances,
            timestamp,
            checks,
            passed,
            failed,
            pass: failed == 0,
        }
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    /// Rows `check, kind, label, value` for every value, oracle and residual entry.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check", "kind", "label", "value"])?;
        for c in &self.checks {
            for (kind, entries) in [("value", &c.values), ("oracle", &c.oracle), ("residual", &c.residuals)] {
                for e in entries {
                    w.write_record([c.name.as_str(), kind, e.label.as_str(), &format!("{:e}", e.value)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One line per check plus a tally.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("{verdict}  {:<32} rel_err {:.3e}  tol {:.1e}\n", c.name, c.rel_err, c.tolerance));
        }
        s.push_str(&format!("{}: {}/{} passed\n", self.command, self.passed, self.checks.len()));
        s
    }
}

/// Hex SHA-256 over the manifest text, the command parameters and the check name.
pub fn digest(manifest: &str, params: &str, check: &str) -> String {
    let mut h = Sha256::new();
    for part in [manifest, params, check] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    format!("{:x}", h.finalize())
}
