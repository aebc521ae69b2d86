//! Dataset and embedding ingestion.
//!
//! A dataset is an `n x m` table that is either entirely numeric or entirely
//! categorical. The embedding is an `n x 2` table of coordinates paired
//! row-wise with the dataset.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
}

/// Cell storage, row-major.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Numeric(Vec<f64>),
    Categorical {
        codes: Vec<u32>,
        /// One dictionary per attribute, in first-appearance order.
        dictionaries: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    n: usize,
    values: Values,
}

impl Dataset {
    /// Builds a numeric dataset from rows of finite reals.
    pub fn numeric(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let m = names.len();
        check_shape(rows.len(), m)?;
        let mut flat = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    m
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::Parse(format!("non-finite value in row {i}")));
                }
                flat.push(v);
            }
        }
        Ok(Self {
            names,
            n: rows.len(),
            values: Values::Numeric(flat),
        })
    }

    /// Builds a categorical dataset; dictionaries follow first appearance.
    pub fn categorical<S: AsRef<str>>(names: Vec<String>, rows: &[Vec<S>]) -> Result<Self> {
        let m = names.len();
        check_shape(rows.len(), m)?;
        let mut dictionaries: Vec<Vec<String>> = vec![Vec::new(); m];
        let mut codes = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    m
                )));
            }
            for (j, token) in row.iter().enumerate() {
                let token = token.as_ref();
                let dict = &mut dictionaries[j];
                let code = match dict.iter().position(|c| c == token) {
                    Some(c) => c,
                    None => {
                        dict.push(token.to_string());
                        dict.len() - 1
                    }
                };
                codes.push(code as u32);
            }
        }
        Ok(Self {
            names,
            n: rows.len(),
            values: Values::Categorical {
                codes,
                dictionaries,
            },
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.names.len()
    }

    pub fn kind(&self) -> Kind {
        match self.values {
            Values::Numeric(_) => Kind::Numeric,
            Values::Categorical { .. } => Kind::Categorical,
        }
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    /// Row `i` of a numeric dataset.
    pub fn numeric_row(&self, i: usize) -> Option<&[f64]> {
        match &self.values {
            Values::Numeric(v) => Some(&v[i * self.m()..(i + 1) * self.m()]),
            Values::Categorical { .. } => None,
        }
    }

    /// Row `i` of a categorical dataset as category codes.
    pub fn categorical_row(&self, i: usize) -> Option<&[u32]> {
        match &self.values {
            Values::Categorical { codes, .. } => Some(&codes[i * self.m()..(i + 1) * self.m()]),
            Values::Numeric(_) => None,
        }
    }

    /// Category dictionary sizes per attribute (empty for numeric data).
    pub fn category_sizes(&self) -> Vec<usize> {
        match &self.values {
            Values::Categorical { dictionaries, .. } => dictionaries.iter().map(Vec::len).collect(),
            Values::Numeric(_) => Vec::new(),
        }
    }

    pub fn dictionaries(&self) -> Option<&[Vec<String>]> {
        match &self.values {
            Values::Categorical { dictionaries, .. } => Some(dictionaries),
            Values::Numeric(_) => None,
        }
    }

    /// Applies `x -> scale * x + shift` to one numeric attribute.
    pub fn rescale_attribute(&mut self, attribute: usize, scale: f64, shift: f64) {
        let m = self.m();
        if let Values::Numeric(v) = &mut self.values {
            for row in v.chunks_mut(m) {
                row[attribute] = scale * row[attribute] + shift;
            }
        }
    }

    /// Writes the dataset as a headed CSV that [`load_dataset`] reads back.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let map_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&self.names).map_err(map_err)?;
        for i in 0..self.n {
            let record: Vec<String> = match &self.values {
                Values::Numeric(_) => self
                    .numeric_row(i)
                    .unwrap()
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect(),
                Values::Categorical { dictionaries, .. } => self
                    .categorical_row(i)
                    .unwrap()
                    .iter()
                    .zip(dictionaries)
                    .map(|(&c, d)| d[c as usize].clone())
                    .collect(),
            };
            w.write_record(&record).map_err(map_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }
}

fn check_shape(n: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Parse("dataset has no attributes".into()));
    }
    if n < 2 {
        return Err(Error::Size(format!(
            "dataset needs at least 2 rows, got {n}"
        )));
    }
    Ok(())
}

/// 2-D coordinates, one row per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: Vec<[f64; 2]>,
}

impl Embedding {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("embedding has non-finite coordinates".into()));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Integer or decimal notation with an optional exponent. Tokens such as
/// `inf` or `NaN` are not numbers here.
pub fn parse_number(token: &str) -> Option<f64> {
    let b = token.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let mut digits = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
        digits += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
            digits += 1;
        }
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    token.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("line {}: {e}", line + 1)))?;
        // A trailing blank line shows up as a single empty field.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Loads a headed dataset CSV, inferring numeric vs categorical unless
/// `kind_override` is given.
pub fn load_dataset(path: &Path, kind_override: Option<Kind>) -> Result<Dataset> {
    let mut rows = read_records(path)?;
    if rows.is_empty() {
        return Err(Error::Parse(format!("{} is empty", path.display())));
    }
    let names = rows.remove(0);
    let m = names.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Parse(format!(
                "data row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                m
            )));
        }
    }
    if rows.len() < 2 {
        return Err(Error::Size(format!(
            "dataset needs at least 2 rows, got {}",
            rows.len()
        )));
    }

    let kind = match kind_override {
        Some(k) => k,
        None => {
            let numeric_cols: Vec<bool> = (0..m)
                .map(|j| rows.iter().all(|r| parse_number(&r[j]).is_some()))
                .collect();
            if numeric_cols.iter().all(|&b| b) {
                Kind::Numeric
            } else if numeric_cols.iter().all(|&b| !b) {
                Kind::Categorical
            } else {
                let (mut numeric, mut categorical) = (Vec::new(), Vec::new());
                for (name, is_num) in names.iter().zip(&numeric_cols) {
                    if *is_num {
                        numeric.push(name.clone());
                    } else {
                        categorical.push(name.clone());
                    }
                }
                return Err(Error::MixedData {
                    numeric,
                    categorical,
                });
            }
        }
    };

    match kind {
        Kind::Numeric => {
            let parsed = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .map(|t| {
                            parse_number(t).ok_or_else(|| {
                                Error::Parse(format!("row {}: {t:?} is not a number", i + 1))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::numeric(names, &parsed)
        }
        Kind::Categorical => Dataset::categorical(names, &rows),
    }
}

/// Loads a two-column coordinate CSV. A first row that does not parse as
/// numbers is treated as a header.
pub fn load_embedding(path: &Path, n_expected: usize) -> Result<Embedding> {
    let mut rows = read_records(path)?;
    if let Some(first) = rows.first() {
        if first.iter().any(|t| parse_number(t).is_none()) {
            rows.remove(0);
        }
    }
    let mut coords = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 2 {
            return Err(Error::Parse(format!(
                "embedding row {} has {} columns, expected 2",
                i + 1,
                row.len()
            )));
        }
        let x = parse_number(&row[0]);
        let y = parse_number(&row[1]);
        match (x, y) {
            (Some(x), Some(y)) => coords.push([x, y]),
            _ => {
                return Err(Error::Parse(format!(
                    "embedding row {} is not numeric",
                    i + 1
                )))
            }
        }
    }
    if coords.len() != n_expected {
        return Err(Error::Size(format!(
            "embedding has {} rows, dataset has {}",
            coords.len(),
            n_expected
        )));
    }
    Embedding::new(coords)
}

/// Writes coordinates as a headed `x,y` CSV.
pub fn write_embedding(embedding: &Embedding, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "x,y").map_err(io_err)?;
    for [x, y] in embedding.coords() {
        writeln!(w, "{x:?},{y:?}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
