//! Output directory handling: CSV/JSON writers with 17 significant digits and
//! a checksum manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_ECHO: &str = "config.toml";
pub const OUTPUT_ROOT_ENV: &str = "WEAKTUNNEL_OUTPUT_ROOT";

/// `d.dddddddddddddddde±x`: round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse::<Number>().expect("scientific notation is valid JSON"))
    } else {
        Value::Null
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => *v = num(n.as_f64().expect("checked f64")),
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

/// Serializes `value` to a JSON tree with normalized floats.
pub fn json<T: Serialize + ?Sized>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("output types serialize");
    normalize(&mut v);
    v
}

/// Builds a JSON object from `(key, value)` pairs, keeping their order.
pub fn object<I: IntoIterator<Item = (&'static str, Value)>>(pairs: I) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}

pub fn float(x: f64) -> Value {
    num(x)
}

pub struct OutputDir {
    root: PathBuf,
    command: &'static str,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates the directory and echoes the resolved configuration into it.
    pub fn create(root: PathBuf, command: &'static str, config_toml: &str) -> Result<Self, CliError> {
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let mut out = Self {
            root,
            command,
            files: Vec::new(),
        };
        out.write_text(CONFIG_ECHO, config_toml)?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON trees serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Writes a CSV whose cells are already formatted.
    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::io(&path, e),
            other => CliError::io(&path, std::io::Error::other(format!("{other:?}"))),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing every file with its SHA-256.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.files.sort();
        self.files.dedup();
        let mut entries = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let path = self.root.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            entries.push(object([
                ("path", Value::String(name.clone())),
                ("bytes", Value::from(bytes.len())),
                ("sha256", Value::String(hex::encode(Sha256::digest(&bytes)))),
            ]));
        }
        let manifest = object([
            ("command", Value::String(self.command.into())),
            ("files", Value::Array(entries)),
        ]);
        self.write_json(MANIFEST, &manifest)?;
        Ok(self.root)
    }
}
