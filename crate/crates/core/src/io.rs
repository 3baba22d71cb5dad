//! CSV encodings of paths and fields.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which is
//! enough to round-trip every `f64` and makes byte-level comparisons of
//! artifacts meaningful.

use std::io::{Read, Write};

use crate::error::{Result, SmError};
use crate::sample::{FieldSample, PathSample};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_path_csv<W: Write>(path: &PathSample, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "value"])?;
    for (t, v) in path.grid().iter().zip(path.values()) {
        out.write_record([fmt_f64(*t), fmt_f64(*v)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_field_csv<W: Write>(field: &FieldSample, w: W) -> Result<()> {
    let mut out = writer(w);
    let side = field.side();
    let coord = |k: usize| field.horizon() * k as f64 / (side - 1) as f64;
    if field.dim() == 1 {
        out.write_record(["t", "value"])?;
        for k in 0..side {
            out.write_record([fmt_f64(coord(k)), fmt_f64(field.at1(k))])?;
        }
    } else {
        out.write_record(["x1", "x2", "value"])?;
        for k1 in 0..side {
            for k2 in 0..side {
                out.write_record([fmt_f64(coord(k1)), fmt_f64(coord(k2)), fmt_f64(field.at2(k1, k2))])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn parse(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| SmError::InvalidInput(format!("row {row}: cannot parse `{field}`: {e}")))
}

fn read_rows<R: Read>(r: R, expected_header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != expected_header {
        return Err(SmError::InvalidInput(format!(
            "expected header {:?}, got {:?}",
            expected_header, header
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.iter().map(|f| parse(f, i + 2)).collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn check_equispaced(coords: &[f64]) -> Result<f64> {
    let n = coords.len() - 1;
    let horizon = coords[n];
    if coords[0] != 0.0 || !(horizon > 0.0) {
        return Err(SmError::InvalidInput("grid must start at 0 and increase".into()));
    }
    for (i, t) in coords.iter().enumerate() {
        let expected = horizon * i as f64 / n as f64;
        if (t - expected).abs() > 1e-9 * horizon {
            return Err(SmError::InvalidInput(format!(
                "grid is not equispaced at row {}: {t} vs {expected}",
                i + 2
            )));
        }
    }
    Ok(horizon)
}

/// Reads a `t,value` CSV into a path. The grid must be equispaced from 0.
pub fn read_path_csv<R: Read>(r: R) -> Result<PathSample> {
    let rows = read_rows(r, &["t", "value"])?;
    if rows.len() < 3 {
        return Err(SmError::InvalidInput("a path needs at least 3 rows".into()));
    }
    let ts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let horizon = check_equispaced(&ts)?;
    PathSample::from_values(horizon, rows.into_iter().map(|r| r[1]).collect())
}

/// Reads a 1-D (`t,value`) or 2-D (`x1,x2,value`, row-major) dyadic field.
pub fn read_field_csv<R: Read>(mut r: R) -> Result<FieldSample> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or_default();
    let cols = first.split(',').count();
    if cols == 2 {
        let path = read_path_csv(text.as_bytes())?;
        return FieldSample::from_path(&path);
    }
    let rows = read_rows(text.as_bytes(), &["x1", "x2", "value"])?;
    let side = (rows.len() as f64).sqrt().round() as usize;
    if side * side != rows.len() || side < 2 || !(side - 1).is_power_of_two() {
        return Err(SmError::InvalidInput(format!(
            "{} rows do not form a (2^N + 1)^2 grid",
            rows.len()
        )));
    }
    let axis: Vec<f64> = (0..side).map(|k| rows[k * side][0]).collect();
    let horizon = check_equispaced(&axis)?;
    for (idx, row) in rows.iter().enumerate() {
        let (k1, k2) = (idx / side, idx % side);
        if (row[0] - axis[k1]).abs() > 1e-9 * horizon || (row[1] - axis[k2]).abs() > 1e-9 * horizon {
            return Err(SmError::InvalidInput(format!("row {} is out of row-major order", idx + 2)));
        }
    }
    let depth = (side - 1).trailing_zeros();
    FieldSample::from_values(2, depth, horizon, rows.into_iter().map(|r| r[2]).collect())
}
