use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::TallyVector;
use crate::error::{Error, Result};

/// A column selected by header name or by 0-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Equal-width bins over `[min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bins: usize,
    pub min: f64,
    pub max: f64,
}

impl Binning {
    pub fn new(bins: usize, min: f64, max: f64) -> Result<Self> {
        if bins == 0 || !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!("bad binning {bins} over [{min}, {max})")));
        }
        Ok(Self { bins, min, max })
    }

    /// Bin of `v`, or `None` outside `[min, max)`.
    pub fn bin(&self, v: f64) -> Option<usize> {
        if !(v >= self.min && v < self.max) {
            return None;
        }
        let k = ((v - self.min) / (self.max - self.min) * self.bins as f64).floor() as usize;
        Some(k.min(self.bins - 1))
    }

    fn label(&self, k: usize) -> String {
        let w = (self.max - self.min) / self.bins as f64;
        format!("[{},{})", self.min + w * k as f64, self.min + w * (k + 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub column: ColumnRef,
    pub delimiter: u8,
    pub has_header: bool,
    /// Numeric binning; the column is categorical when absent.
    pub binning: Option<Binning>,
}

impl ColumnSpec {
    pub fn categorical(column: ColumnRef) -> Self {
        Self { column, delimiter: b',', has_header: true, binning: None }
    }

    pub fn binned(column: ColumnRef, binning: Binning) -> Self {
        Self { binning: Some(binning), ..Self::categorical(column) }
    }
}

/// Input tallies with the label of each index and the number of rows skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub tally: TallyVector,
    pub labels: Vec<String>,
    pub invalid: usize,
}

pub fn ingest_real(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Ingested> {
    ingest_real_from(File::open(path)?, spec)
}

/// Tallies one column. Categories are indexed in sorted order; rows that
/// lack the column, are empty, fail to parse, or fall outside the bins count
/// as invalid.
pub fn ingest_real_from<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let col = match &spec.column {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => {
            if !spec.has_header {
                return Err(Error::Input("column names need a header row".into()));
            }
            rdr.headers()?
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Input(format!("no column named `{name}`")))?
        }
    };

    let mut invalid = 0;
    let mut values: Vec<String> = Vec::new();
    for rec in rdr.records() {
        match rec?.get(col) {
            Some(v) if !v.is_empty() => values.push(v.to_string()),
            _ => invalid += 1,
        }
    }

    let (counts, labels) = match spec.binning {
        Some(b) => {
            let mut counts = vec![0u64; b.bins];
            for v in &values {
                match v.parse::<f64>().ok().and_then(|x| b.bin(x)) {
                    Some(k) => counts[k] += 1,
                    None => invalid += 1,
                }
            }
            (counts, (0..b.bins).map(|k| b.label(k)).collect())
        }
        None => {
            let mut map: BTreeMap<String, u64> = BTreeMap::new();
            for v in values {
                *map.entry(v).or_default() += 1;
            }
            let (labels, counts): (Vec<String>, Vec<u64>) = map.into_iter().unzip();
            (counts, labels)
        }
    };
    let tally = TallyVector::new(counts);
    if tally.total() == 0 {
        return Err(Error::Input("column has no valid values".into()));
    }
    Ok(Ingested { tally, labels, invalid })
}
