//! CSV files: sample paths, estimates and study reports.
//!
//! Files have a header row and LF line endings; floats are written with 17
//! significant digits so they round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bssvol_core::{Error, Result, SamplePath};

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Argument(format!("{}: {e}", path.display()))
}

/// Write rows of already formatted fields.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `t,value` with one row per grid point.
pub fn write_path(path: &Path, p: &SamplePath) -> Result<()> {
    let rows = p
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| [fmt_f64(p.time(i)), fmt_f64(*v)]);
    write_rows(path, &["t", "value"], rows)
}

/// `t,estimate`.
pub fn write_estimates(path: &Path, times: &[f64], estimates: &[f64]) -> Result<()> {
    let rows = times.iter().zip(estimates).map(|(t, e)| [fmt_f64(*t), fmt_f64(*e)]);
    write_rows(path, &["t", "estimate"], rows)
}

/// Read a series from a CSV with a header row. The value column is the one
/// named `value`, or else the only column. Malformed input is an argument
/// error.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    let col = match headers.iter().position(|h| h == "value") {
        Some(c) => c,
        None if headers.len() == 1 => 0,
        None => {
            return Err(Error::Argument(format!(
                "{}: expected a `value` column or a single column, found {:?}",
                path.display(),
                headers.iter().collect::<Vec<_>>()
            )))
        }
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let field = rec
            .get(col)
            .ok_or_else(|| Error::Argument(format!("{}: row {} has no column {col}", path.display(), i + 2)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Argument(format!("{}: row {}: cannot parse {field:?}", path.display(), i + 2)))?;
        if !v.is_finite() {
            return Err(Error::Argument(format!(
                "{}: row {}: non-finite value",
                path.display(),
                i + 2
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Argument(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Read a series observed `n` times per unit time.
pub fn read_path(path: &Path, n: f64) -> Result<SamplePath> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Argument(format!("observation rate must be positive, got {n}")));
    }
    SamplePath::new(read_series(path)?, 1.0 / n)
}

/// Write a JSON value with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}
