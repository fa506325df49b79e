//! CSV tables and the coefficient file format.

use crate::cell::HomogenizedCoeffs;
use crate::error::{Error, Result};
use std::path::Path;

pub const COEFF_HEADER: [&str; 4] = ["A11", "B1", "Kinv", "F"];

/// Shortest round-trip representation, so tables reproduce bitwise.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_table<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header and numeric rows of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("{}: row {} has non-numeric entry `{s}`", path.display(), line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_coefficients(path: &Path, c: &HomogenizedCoeffs) -> Result<()> {
    write_table(path, &COEFF_HEADER, [c.as_array().map(fmt)])
}

/// Reads the last row of a file with the coefficient header (extra columns
/// are allowed).
pub fn read_coefficients(path: &Path) -> Result<HomogenizedCoeffs> {
    let (header, rows) = read_table(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid(format!("{}: missing column `{name}`", path.display())))
    };
    let idx = [col("A11")?, col("B1")?, col("Kinv")?, col("F")?];
    let row = rows.last().ok_or_else(|| Error::invalid(format!("{}: no coefficient row", path.display())))?;
    let get = |k: usize| row.get(idx[k]).copied().ok_or_else(|| Error::invalid(format!("{}: short row", path.display())));
    Ok(HomogenizedCoeffs { a11: get(0)?, b1: get(1)?, kinv: get(2)?, f: get(3)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_roundtrip_bitwise() {
        let dir = std::env::temp_dir().join(format!("metasurf-io-{}", std::process::id()));
        let p = dir.join("c.csv");
        let c = HomogenizedCoeffs { a11: 0.1 + 0.2, b1: -1.0 / 3.0, kinv: 7.042253521126761e-6, f: 1.2 };
        write_coefficients(&p, &c).unwrap();
        assert_eq!(read_coefficients(&p).unwrap(), c);
        std::fs::remove_dir_all(dir).ok();
    }
}
