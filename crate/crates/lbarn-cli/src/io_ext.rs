//! CLI-side file formats: permutation files and partially observed rows.

use std::fs;
use std::path::Path;

use lbarn::{Error, Result};

/// Read a one-line permutation file of 1-based column indices and convert to
/// 0-based. Validation against the dataset dimension happens downstream.
pub fn read_ordering_file(path: &str) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: Path::new(path).to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let idx: usize = token.parse().map_err(|_| {
            Error::Parse {
                line: 1,
                column: 1,
                message: format!("invalid ordering entry {token:?}"),
            }
        })?;
        if idx == 0 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "ordering entries are 1-based".into(),
            });
        }
        out.push(idx - 1);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "ordering file is empty".into(),
        });
    }
    Ok(out)
}

/// Write a permutation as one line of 1-based column indices.
pub fn write_ordering_file(path: &str, permutation: &[usize]) -> Result<()> {
    let line = permutation
        .iter()
        .map(|&c| (c + 1).to_string())
        .collect::<Vec<_>>()
        .join(" ");
    fs::write(path, format!("{line}\n")).map_err(|source| Error::Io {
        path: Path::new(path).to_path_buf(),
        source,
    })
}

/// Parse rows of 0/1/'?' tokens into partially observed vectors.
pub fn read_partial_rows(path: &str) -> Result<Vec<Vec<Option<u8>>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: Path::new(path).to_path_buf(),
        source,
    })?;
    let mut rows: Vec<Vec<Option<u8>>> = Vec::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (offset, token) in tokenize(line) {
            let value = match token {
                "0" => Some(0),
                "1" => Some(1),
                "?" => None,
                other => {
                    return Err(Error::Parse {
                        line: line_idx + 1,
                        column: offset + 1,
                        message: format!("expected '0', '1' or '?', found {other:?}"),
                    });
                }
            };
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch(format!(
                    "line {} has {} values, expected {}",
                    line_idx + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}
