//! CSV and JSON emission with a provenance header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, '.' decimal point.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Header {
    pub experiment: &'static str,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub created_unix: u64,
}

impl Header {
    pub fn new(experiment: &'static str, config_sha256: &str, seeds: &[u64]) -> Self {
        Header {
            experiment,
            config_sha256: config_sha256.to_string(),
            seeds: seeds.to_vec(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Header {
            seeds: vec![seed],
            ..self.clone()
        }
    }

    fn lines(&self) -> Vec<String> {
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        vec![
            format!("# randcycles {VERSION}"),
            format!("# experiment {}", self.experiment),
            format!("# config_sha256 {}", self.config_sha256),
            format!("# seed {}", seeds.join(" ")),
            format!("# created_unix {}", self.created_unix),
        ]
    }

    fn json(&self) -> Value {
        json!({
            "version": VERSION,
            "experiment": self.experiment,
            "config_sha256": self.config_sha256,
            "seeds": self.seeds,
            "created_unix": self.created_unix,
        })
    }
}

/// Collects the files written by one run.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Header block, `extra` comment lines, the column line, then rows.
    /// Refuses non-finite numeric fields.
    pub fn csv(
        &mut self,
        name: &str,
        header: &Header,
        extra: &[String],
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> CliResult<()> {
        let mut text = String::new();
        for l in header.lines() {
            text.push_str(&l);
            text.push('\n');
        }
        for l in extra {
            text.push_str("# ");
            text.push_str(l);
            text.push('\n');
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(CliError::Check(format!("{name}: row {i} has {} fields", row.len())));
            }
            if let Some(bad) = row.iter().find(|f| is_non_finite(f)) {
                return Err(CliError::Check(format!("{name}: non-finite value {bad} in row {i}")));
            }
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// `{"meta": header, ...body}`.
    pub fn json(&mut self, name: &str, header: &Header, body: Value) -> CliResult<()> {
        let mut doc = json!({ "meta": header.json() });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Check(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::File::create(&path)?.write_all(bytes)?;
        self.written.push(path);
        Ok(())
    }
}

fn is_non_finite(field: &str) -> bool {
    matches!(field, "NaN" | "inf" | "-inf")
}

/// A finite `f64` for JSON, or an error naming the quantity.
pub fn finite(x: f64, what: &str) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Check(format!("{what} is {x}")))
    }
}
