//! CSV formats.
//!
//! - tallies: header `index,count`
//! - distributions: header `index,prob`
//! - prior parameters: header `index,gamma`
//! - mechanisms: no header, `b` rows of `a` comma-separated decimals
//!
//! Indexed files may list rows in any order but must cover `0..len` exactly once.
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::domain::{DirichletPrior, Distribution, Mechanism, TallyVector};
use crate::error::{Error, Result};

pub const TALLY_HEADER: [&str; 2] = ["index", "count"];
pub const DISTRIBUTION_HEADER: [&str; 2] = ["index", "prob"];
pub const PRIOR_HEADER: [&str; 2] = ["index", "gamma"];

fn read_indexed<R: Read, T: std::str::FromStr>(reader: R, header: [&str; 2]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Input(format!("expected header `{}`, got `{}`", header.join(","), got.join(","))));
    }
    let mut rows: Vec<(usize, T)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Input(format!("row {}: cannot parse `{}`", line + 1, rec.iter().collect::<Vec<_>>().join(",")));
        if rec.len() != 2 {
            return Err(bad());
        }
        let i = rec[0].parse::<usize>().map_err(|_| bad())?;
        let v = rec[1].parse::<T>().map_err(|_| bad())?;
        rows.push((i, v));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
        return Err(Error::Input("indices must be 0..len, each exactly once".into()));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

fn write_indexed<W: Write, T: ToString>(writer: W, header: [&str; 2], values: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tallies_from<R: Read>(reader: R) -> Result<TallyVector> {
    Ok(TallyVector::new(read_indexed(reader, TALLY_HEADER)?))
}

pub fn read_tallies(path: impl AsRef<Path>) -> Result<TallyVector> {
    read_tallies_from(File::open(path)?)
}

pub fn write_tallies_to<W: Write>(writer: W, t: &TallyVector) -> Result<()> {
    write_indexed(writer, TALLY_HEADER, t.counts())
}

pub fn write_tallies(path: impl AsRef<Path>, t: &TallyVector) -> Result<()> {
    write_tallies_to(File::create(path)?, t)
}

pub fn read_distribution_from<R: Read>(reader: R) -> Result<Distribution> {
    Distribution::new(read_indexed(reader, DISTRIBUTION_HEADER)?)
}

pub fn read_distribution(path: impl AsRef<Path>) -> Result<Distribution> {
    read_distribution_from(File::open(path)?)
}

/// Writes any real vector under the distribution header (used for signed estimates too).
pub fn write_probs_to<W: Write>(writer: W, probs: &[f64]) -> Result<()> {
    write_indexed(writer, DISTRIBUTION_HEADER, probs)
}

pub fn write_probs(path: impl AsRef<Path>, probs: &[f64]) -> Result<()> {
    write_probs_to(File::create(path)?, probs)
}

pub fn read_prior_from<R: Read>(reader: R) -> Result<DirichletPrior> {
    DirichletPrior::new(read_indexed(reader, PRIOR_HEADER)?)
}

pub fn read_prior(path: impl AsRef<Path>) -> Result<DirichletPrior> {
    read_prior_from(File::open(path)?)
}

pub fn read_matrix_from<R: Read>(reader: R, name: &str) -> Result<Mechanism> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let row = rec?
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Input(format!("matrix row {}: cannot parse `{s}`", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input("matrix file is empty".into()));
    }
    Mechanism::from_rows(&rows, name)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mechanism> {
    let path = path.as_ref();
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix").to_string();
    read_matrix_from(File::open(path)?, &name)
}

pub fn write_matrix_to<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_to(File::create(path)?, m)
}
