//! CSV and JSON file formats.
//!
//! Every file starts with provenance: CSV files carry a leading `#` comment
//! line, JSON files an `edclust_version` and `config` field.

use std::fs;
use std::io::Write;
use std::path::Path;

use edclust_core::{DissimilarityMatrix, TimeSeriesPanel};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Round-trippable decimal form with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn provenance_line(config_json: &str) -> String {
    format!("# edclust {} config={config_json}\n", edclust_core::VERSION)
}

fn quote_csv(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) || field.starts_with('#') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Panel as CSV: one header row of component names, one row per time point.
pub fn panel_to_csv(panel: &TimeSeriesPanel, config_json: &str) -> String {
    let mut out = provenance_line(config_json);
    let header: Vec<String> = panel.names().iter().map(|n| quote_csv(n)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for t in 0..panel.len() {
        let row: Vec<String> = panel.columns().iter().map(|c| format_f64(c[t])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads a panel CSV. Lines starting with `#` are ignored; the first
/// remaining row holds the component names.
pub fn read_panel_csv(path: &Path) -> Result<TimeSeriesPanel, CliError> {
    let data = fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_panel_csv(&data).map_err(|msg| CliError::Data(format!("{}: {msg}", path.display())))
}

pub fn parse_panel_csv(data: &[u8]) -> Result<TimeSeriesPanel, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(data);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                format!("non-numeric cell `{cell}` at data row {}, column `{}`", row + 1, names[j])
            })?;
            columns[j].push(v);
        }
    }
    TimeSeriesPanel::new(names, columns).map_err(|e| e.to_string())
}

pub fn matrix_to_csv(d: &DissimilarityMatrix, names: &[String], config_json: &str) -> String {
    let mut out = provenance_line(config_json);
    out.push_str(&std::iter::once(String::new()).chain(names.iter().map(|n| quote_csv(n))).collect::<Vec<_>>().join(","));
    out.push('\n');
    for (i, name) in names.iter().enumerate() {
        out.push_str(&quote_csv(name));
        for v in d.row(i) {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
