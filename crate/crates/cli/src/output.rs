//! CSV and JSON emission with 17 significant digits, and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON number carrying the same 17-digit text; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(fmt_f64(x).parse::<Number>().expect("scientific notation is valid JSON"))
}

pub fn obj<const N: usize>(fields: [(&str, Value); N]) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

/// A table with a mandatory header.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::io)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::io)?;
        }
        w.into_inner().map_err(|e| CliError::io(e.into_error()))
    }
}

/// Output bytes of a run, to a file or standard output.
pub struct Emitted {
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

pub fn emit(out: Option<&Path>, bytes: Vec<u8>) -> Result<Emitted, CliError> {
    match out {
        Some(p) => {
            fs::write(p, &bytes).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
        }
        None => {
            std::io::stdout().write_all(&bytes).map_err(CliError::io)?;
        }
    }
    Ok(Emitted { path: out.map(Path::to_path_buf), bytes })
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("values are serializable");
    s.push('\n');
    s.into_bytes()
}

/// Record of one run: parameters, results, timing and output digests.
pub struct Manifest {
    pub subcommand: String,
    pub parameters: Vec<(String, String)>,
    pub results: Value,
    pub wall_time: f64,
}

impl Manifest {
    /// Written next to the output as `<out>.manifest.json`, or to stderr
    /// when the output went to stdout.
    pub fn write(&self, outputs: &[Emitted], explicit: Option<&Path>) -> Result<(), CliError> {
        let params: Map<String, Value> = self.parameters.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let files: Vec<Value> = outputs
            .iter()
            .map(|e| {
                obj([
                    ("path", e.path.as_ref().map_or(Value::String("-".into()), |p| Value::String(p.display().to_string()))),
                    ("sha256", Value::String(hex::encode(Sha256::digest(&e.bytes)))),
                    ("bytes", Value::from(e.bytes.len())),
                ])
            })
            .collect();
        let v = obj([
            ("subcommand", Value::String(self.subcommand.clone())),
            ("version", Value::String(env!("CARGO_PKG_VERSION").into())),
            ("parameters", Value::Object(params)),
            ("results", self.results.clone()),
            ("wall_time", num(self.wall_time)),
            ("outputs", Value::Array(files)),
        ]);
        let target = explicit.map(Path::to_path_buf).or_else(|| {
            outputs.first().and_then(|e| e.path.as_ref()).map(|p| {
                let mut s = p.as_os_str().to_owned();
                s.push(".manifest.json");
                PathBuf::from(s)
            })
        });
        match target {
            Some(p) => fs::write(&p, json_bytes(&v)).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
            None => std::io::stderr().write_all(&json_bytes(&v)).map_err(CliError::io),
        }
    }
}
