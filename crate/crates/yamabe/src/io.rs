//! File formats: JSON documents with a versioned envelope, CSV tables and
//! plain-text vector lists.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use yamabe_core::field::GriddedField;
use yamabe_core::radial::RadialSolution;

use crate::error::CliError;

/// Version tag embedded in every output document.
pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Reads a JSON file into `T`; parse failures and unknown keys are usage errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(text)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn read_gridded(path: &Path) -> Result<GriddedField, CliError> {
    read_json(path)
}

pub fn write_gridded(path: &Path, field: &GriddedField) -> Result<(), CliError> {
    write_text(path, &to_json_string(field))
}

pub fn read_solution(path: &Path) -> Result<RadialSolution, CliError> {
    read_json(path)
}

pub fn write_solution_json(path: &Path, sol: &RadialSolution) -> Result<(), CliError> {
    write_text(path, &to_json_string(sol))
}

pub fn write_solution_csv(path: &Path, sol: &RadialSolution) -> Result<(), CliError> {
    write_text(path, &sol.to_csv()?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `path` with its extension replaced by that of `format`.
pub fn companion_path(path: &Path, format: Format) -> PathBuf {
    path.with_extension(format.extension())
}

/// Parses one vector: comma- or whitespace-separated numbers, or `e` for the
/// all-ones vector of length `n`.
pub fn parse_vector(text: &str, n: Option<usize>) -> Result<Vec<f64>, CliError> {
    let t = text.trim();
    if t == "e" {
        let n = n.ok_or_else(|| CliError::Usage("`e` needs the dimension (--n)".into()))?;
        return Ok(vec![1.0; n]);
    }
    let t = t.trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let v = t
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Usage(format!("malformed number `{s}` in `{text}`"))))
        .collect::<Result<Vec<f64>, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("empty vector `{text}`")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("non-finite entry in `{text}`")));
    }
    Ok(v)
}

/// One vector per non-empty line; `#` starts a comment.
pub fn parse_vector_list(text: &str, n: Option<usize>) -> Result<Vec<Vec<f64>>, CliError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_vector(l, n))
        .collect()
}

/// A CSV table whose cells are JSON scalars or arrays; arrays are joined
/// with spaces so every row keeps one cell per column.
pub fn csv_table(header: &[&str], rows: &[Vec<Value>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(csv_cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// Flattens a JSON object into `key,value` rows, nested keys joined by `.`.
pub fn csv_key_values(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), csv_cell(other))),
    }
}

/// Comment lines carrying the envelope of a CSV output.
pub fn csv_preamble(command: &str, seed: u64, config: &Value) -> String {
    format!(
        "# schema={SCHEMA}\n# command={command}\n# seed={seed}\n# config={}\n",
        serde_json::to_string(config).expect("serializable config")
    )
}
