//! Binary dataset ingestion, validation and column access.
//!
//! Datasets are immutable after construction and stored column-major, since
//! tree induction scans one predictor column at a time.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An N x D matrix of {0,1} observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    n_samples: usize,
    n_dims: usize,
    /// Column-major: column `c` occupies `values[c * n_samples .. (c + 1) * n_samples]`.
    values: Vec<u8>,
    split_tag: Option<String>,
}

impl BinaryDataset {
    /// Build a dataset from row vectors. All rows must have the same nonzero
    /// length and every value must be 0 or 1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_dims = rows[0].len();
        if n_dims == 0 {
            return Err(Error::DimensionMismatch("rows have zero length".into()));
        }
        let n_samples = rows.len();
        let mut values = vec![0u8; n_samples * n_dims];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_dims {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} values, expected {}",
                    r + 1,
                    row.len(),
                    n_dims
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Incompatible(format!(
                        "value {} at row {}, column {} is not a bit",
                        v,
                        r + 1,
                        c + 1
                    )));
                }
                values[c * n_samples + r] = v;
            }
        }
        Ok(Self {
            n_samples,
            n_dims,
            values,
            split_tag: None,
        })
    }

    /// Build a dataset directly from column vectors of equal length.
    pub fn from_columns(columns: Vec<Vec<u8>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::DimensionMismatch("no columns".into()));
        }
        let n_samples = columns[0].len();
        if n_samples == 0 {
            return Err(Error::EmptyDataset);
        }
        let n_dims = columns.len();
        let mut values = Vec::with_capacity(n_samples * n_dims);
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n_samples {
                return Err(Error::DimensionMismatch(format!(
                    "column {} has {} values, expected {}",
                    c + 1,
                    col.len(),
                    n_samples
                )));
            }
            if col.iter().any(|&v| v > 1) {
                return Err(Error::Incompatible(format!(
                    "column {} contains a non-bit value",
                    c + 1
                )));
            }
            values.extend_from_slice(col);
        }
        Ok(Self {
            n_samples,
            n_dims,
            values,
            split_tag: None,
        })
    }

    /// Parse the dense text format: one sample per line, tokens "0" or "1"
    /// separated by whitespace or commas. Blank lines are skipped; there is
    /// no header row.
    pub fn parse_dense(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        let mut n_dims = 0usize;
        for (line_idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut row: Vec<u8> = Vec::with_capacity(n_dims);
            for (start, token) in tokenize(line) {
                match token {
                    "0" => row.push(0),
                    "1" => row.push(1),
                    other => {
                        return Err(Error::Parse {
                            line: line_idx + 1,
                            column: start + 1,
                            message: format!("expected '0' or '1', found {:?}", other),
                        });
                    }
                }
            }
            if rows.is_empty() {
                n_dims = row.len();
            } else if row.len() != n_dims {
                return Err(Error::DimensionMismatch(format!(
                    "line {} has {} values, expected {}",
                    line_idx + 1,
                    row.len(),
                    n_dims
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::from_rows(&rows)
    }

    /// Load a dataset in the dense text format from a file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_dense(&text)
    }

    /// Write the dataset in the dense text format (space separated, LF).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_dense_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Render as dense text, one sample per line.
    pub fn to_dense_text(&self) -> String {
        let mut out = String::with_capacity(self.n_samples * self.n_dims * 2);
        for r in 0..self.n_samples {
            for c in 0..self.n_dims {
                if c > 0 {
                    out.push(' ');
                }
                out.push(if self.get(r, c) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn with_split_tag(mut self, tag: impl Into<String>) -> Self {
        self.split_tag = Some(tag.into());
        self
    }

    pub fn split_tag(&self) -> Option<&str> {
        self.split_tag.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    /// Column `c` as a contiguous slice of bits.
    pub fn column(&self, c: usize) -> &[u8] {
        assert!(c < self.n_dims, "column index {} out of range (D={})", c, self.n_dims);
        &self.values[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        assert!(r < self.n_samples, "row index {} out of range (N={})", r, self.n_samples);
        self.column(c)[r]
    }

    pub fn row(&self, r: usize) -> Vec<u8> {
        (0..self.n_dims).map(|c| self.get(r, c)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.n_samples).map(move |r| self.row(r))
    }

    /// Row-concatenate two datasets with matching dimensionality.
    pub fn vstack(&self, other: &BinaryDataset) -> Result<BinaryDataset> {
        if self.n_dims != other.n_dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {}-dimensional rows onto {}-dimensional rows",
                other.n_dims, self.n_dims
            )));
        }
        let columns = (0..self.n_dims)
            .map(|c| {
                let mut col = self.column(c).to_vec();
                col.extend_from_slice(other.column(c));
                col
            })
            .collect();
        Self::from_columns(columns)
    }

    /// Predictor columns and target column for position `pos` under the
    /// identity ordering: predictors are columns `0..pos`, target is column
    /// `pos`. For `pos = 0` the predictor list is empty.
    pub fn prefix_view(&self, pos: usize) -> (Vec<&[u8]>, &[u8]) {
        let identity: Vec<usize> = (0..self.n_dims).collect();
        self.prefix_view_ordered(&identity, pos)
    }

    /// Predictor columns and target column for position `pos` under an
    /// explicit ordering: predictors are `ordering[0..pos]`, target is
    /// `ordering[pos]`. The dataset itself stays in original column order.
    pub fn prefix_view_ordered(&self, ordering: &[usize], pos: usize) -> (Vec<&[u8]>, &[u8]) {
        assert!(
            pos < ordering.len() && ordering.len() <= self.n_dims,
            "position {} out of range for ordering of length {}",
            pos,
            ordering.len()
        );
        let predictors: Vec<&[u8]> = ordering[..pos].iter().map(|&c| self.column(c)).collect();
        (predictors, self.column(ordering[pos]))
    }
}

/// Split a line into `(start_offset, token)` pairs on whitespace and commas.
fn tokenize(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut token_start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(start) = token_start.take() {
                out.push((start, &line[start..i]));
            }
        } else if token_start.is_none() {
            token_start = Some(i);
        }
    }
    if let Some(start) = token_start {
        out.push((start, &line[start..]));
    }
    out.into_iter()
}
