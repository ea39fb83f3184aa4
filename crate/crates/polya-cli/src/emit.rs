//! Output shaping: the run manifest, scalar rendering, and the JSON/CSV
//! writers.  Every successful run prints a single JSON document
//! `{"manifest": …, "result": …}` (or a CSV table whose first line carries
//! the manifest as a comment) so runs are self-describing and replayable.

use crate::pipeline::CliError;
use num_complex::Complex64;
use polya::scalar::Field;
use serde_json::{json, Map, Value};
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Everything needed to reproduce a run.  Field order is fixed by serde_json's
/// object preservation of `Map` insertion order; we sort keys by building a
/// `BTreeMap`-backed `Value` at the end, so emission is deterministic.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub subcommand: String,
    pub source: String,
    pub parameters: Value,
    pub mode_requested: String,
    pub mode_used: String,
    pub tol: f64,
    pub waive_tenability: bool,
    pub pins: Value,
    pub format: Format,
}

impl Manifest {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "polya/v1",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "source": self.source,
            "parameters": self.parameters,
            "mode_requested": self.mode_requested,
            "mode_used": self.mode_used,
            "tol": self.tol,
            "waive_tenability": self.waive_tenability,
            "pins": self.pins,
            "format": self.format.name(),
        })
    }
}

/// Recursively sort all object keys so serialization is canonical.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut sorted: Vec<(String, Value)> = m
                .into_iter()
                .map(|(k, val)| (k, canonicalize(val)))
                .collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, val) in sorted {
                out.insert(k, val);
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Render a field element as `{"exact": "p/q"|null, "re": …, "im": …}`.
pub fn scalar_json<F: Field>(x: &F) -> Value {
    let exact = if F::EXACT {
        Value::String(x.render())
    } else {
        Value::Null
    };
    json!({"exact": exact, "re": x.re_f64(), "im": x.im_f64()})
}

pub fn complex_json(z: Complex64) -> Value {
    json!({"exact": Value::Null, "re": z.re, "im": z.im})
}

pub fn vec_json<F: Field>(xs: &[F]) -> Value {
    Value::Array(xs.iter().map(scalar_json).collect())
}

/// One fully rendered run: JSON document or CSV lines.
pub enum Rendered {
    Json(Value),
    Csv { header: String, rows: Vec<String> },
}

/// Write the result to stdout and optionally to `--out`.
pub fn emit(
    manifest: &Manifest,
    rendered: Rendered,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let text = match rendered {
        Rendered::Json(result) => {
            let doc = canonicalize(json!({
                "manifest": manifest.to_json(),
                "result": result,
            }));
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        Rendered::Csv { header, rows } => {
            let mjson = canonicalize(manifest.to_json());
            let mline = serde_json::to_string(&mjson)
                .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
            let mut s = format!("# manifest: {mline}\n{header}\n");
            for r in rows {
                s.push_str(&r);
                s.push('\n');
            }
            s
        }
    };
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::internal(format!("stdout write failed: {e}")))?;
    if let Some(path) = out {
        std::fs::write(path, &text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Format a float for CSV: shortest round-trip representation.
pub fn csv_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
