//! CSV readers and writers for views and labels.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Labels, ViewMatrix};
use crate::error::{Error, Result};

fn format_err(path: &Path, location: String, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        location,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let location = e.position().map(|p| format!("line {}", p.line())).unwrap_or_else(|| "-".into());
    format_err(path, location, e.to_string())
}

/// Reads a view from CSV. A first row whose cells do not all parse as
/// numbers is treated as a header.
pub fn read_view(path: &Path, name: &str) -> Result<ViewMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);

    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for (record_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(record_idx as u64 + 1);
        if record_idx == 0 && record.iter().any(|cell| cell.parse::<f32>().is_err()) {
            dim = Some(record.len());
            continue;
        }
        match dim {
            Some(d) if d != record.len() => {
                return Err(format_err(
                    path,
                    format!("line {line}"),
                    format!("expected {d} columns, found {}", record.len()),
                ))
            }
            None => dim = Some(record.len()),
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f32 = cell.parse().map_err(|_| {
                format_err(
                    path,
                    format!("line {line}, row {rows}, col {col}"),
                    format!("cannot parse {cell:?} as a number"),
                )
            })?;
            if !value.is_finite() {
                return Err(format_err(
                    path,
                    format!("line {line}, row {rows}, col {col}"),
                    format!("non-finite value {cell:?}"),
                ));
            }
            data.push(value);
        }
        rows += 1;
    }
    let dim = dim.unwrap_or(0);
    if rows == 0 || dim == 0 {
        return Err(format_err(path, "line 1".into(), "no data rows"));
    }
    ViewMatrix::new(name, rows, dim, data)
}

/// Writes a view as CSV with an `f0,f1,...` header. Values use the
/// shortest representation that parses back to the same `f32`.
pub fn write_view(view: &ViewMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..view.dim()).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..view.rows() {
        let cells: Vec<String> = view.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a labels file with header `id,label`.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Labels)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(format_err(
            path,
            "line 1".into(),
            format!(
                "expected header \"id,label\", found {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label: usize = record[1].parse().map_err(|_| {
            format_err(
                path,
                format!("line {line}"),
                format!("label {:?} is not a non-negative integer", &record[1]),
            )
        })?;
        ids.push(record[0].to_string());
        values.push(label);
    }
    if values.is_empty() {
        return Err(format_err(path, "line 2".into(), "no labels"));
    }
    Ok((ids, Labels::new(values)?))
}

pub fn write_labels(ids: &[String], labels: &Labels, path: &Path) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("id,label\n");
    for (id, y) in ids.iter().zip(labels.as_slice()) {
        out.push_str(&format!("{id},{y}\n"));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
