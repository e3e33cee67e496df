//! CSV and JSON persistence.
//!
//! Sample files carry the header `x_1,...,x_d,y[,fstar,xi]`. Dictionary and
//! value files are plain numeric CSV matrices without a header (row = one
//! function's values). Floats are written with Rust's shortest round-trip
//! formatting, so read-write cycles are exact.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DesignSample;

/// Read a design sample. Requires the `x_1..x_d` and `y` columns; accepts
/// optional `fstar` and `xi` columns. A present `xi` column must equal
/// `y - fstar` exactly.
pub fn read_design_sample(path: &Path) -> Result<DesignSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut x_cols = Vec::new();
    let mut y_col = None;
    let mut fstar_col = None;
    let mut xi_col = None;
    for (i, name) in headers.iter().enumerate() {
        match name {
            "y" => y_col = Some(i),
            "fstar" => fstar_col = Some(i),
            "xi" => xi_col = Some(i),
            other if other.starts_with("x_") => x_cols.push(i),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unexpected column '{other}' in {}",
                    path.display()
                )))
            }
        }
    }
    let y_col = y_col.ok_or_else(|| {
        Error::InvalidParameter(format!("missing 'y' column in {}", path.display()))
    })?;
    if x_cols.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "missing 'x_*' columns in {}",
            path.display()
        )));
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut fstar = Vec::new();
    let mut xi = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::InvalidParameter("short CSV record".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad float in CSV: {e}")))
        };
        x.push(
            x_cols
                .iter()
                .map(|&i| parse(i))
                .collect::<Result<Vec<_>>>()?,
        );
        y.push(parse(y_col)?);
        if let Some(i) = fstar_col {
            fstar.push(parse(i)?);
        }
        if let Some(i) = xi_col {
            xi.push(parse(i)?);
        }
    }

    match fstar_col {
        None => {
            if xi_col.is_some() {
                return Err(Error::InvalidParameter(
                    "'xi' column requires an 'fstar' column".into(),
                ));
            }
            DesignSample::new(x, y)
        }
        Some(_) => {
            let sample = DesignSample::with_truth(x, y, fstar)?;
            if xi_col.is_some() {
                let stored = sample.truth().expect("just attached").xi();
                for (a, b) in stored.iter().zip(&xi) {
                    if a != b {
                        return Err(Error::InvalidParameter(
                            "'xi' column does not equal y - fstar exactly".into(),
                        ));
                    }
                }
            }
            Ok(sample)
        }
    }
}

/// Write a design sample with the standard header.
pub fn write_design_sample(path: &Path, sample: &DesignSample) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = sample.dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    if sample.truth().is_some() {
        header.push("fstar".into());
        header.push("xi".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for i in 0..sample.n() {
        let mut fields: Vec<String> = sample.x_rows()[i].iter().map(|v| v.to_string()).collect();
        fields.push(sample.y()[i].to_string());
        if let Some(t) = sample.truth() {
            fields.push(t.f_star()[i].to_string());
            fields.push(t.xi()[i].to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a headerless numeric CSV matrix (dictionary rows, design matrices,
/// or value files).
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("bad float in CSV: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("CSV matrix"));
    }
    Ok(rows)
}

/// Write a headerless numeric CSV matrix.
pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize any value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Write serializable rows as CSV with a header from the struct fields.
pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.csv");
        let x = vec![vec![0.1, -0.2], vec![1.5, 2.25], vec![-3.125, 0.0]];
        let y = vec![1.0 / 3.0, -0.7, 2.5];
        let fstar = vec![0.3, -0.65, 2.0];
        let sample = DesignSample::with_truth(x, y, fstar).unwrap();
        write_design_sample(&path, &sample).unwrap();
        let back = read_design_sample(&path).unwrap();
        assert_eq!(sample, back);
    }

    #[test]
    fn xi_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "x_1,y,fstar,xi\n0.0,1.0,0.5,0.4\n").unwrap();
        assert!(read_design_sample(&path).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.csv");
        let rows = vec![vec![1.0, 0.5, -0.25], vec![0.0, 2.0, 1.0 / 3.0]];
        write_matrix_csv(&path, &rows).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), rows);
    }
}
