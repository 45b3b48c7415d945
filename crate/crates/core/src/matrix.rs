//! Sparse labelled rating matrix and its text exchange format.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub const BINARY: RatingScale = RatingScale { min: 0.0, max: 1.0 };

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clip(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self::BINARY
    }
}

/// Observed ratings keyed by (row, column). Absent pairs are unobserved;
/// explicit zeros are observed ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    // per row, (column, value) sorted by column
    rows: Vec<Vec<(u32, f64)>>,
    scale: RatingScale,
    row_index: HashMap<String, usize>,
    col_index: HashMap<String, usize>,
}

fn index_labels(labels: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(Error::InvalidMatrix(format!("duplicate {what} label `{l}`")));
        }
    }
    Ok(index)
}

impl RatingMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        scale: RatingScale,
    ) -> Result<Self> {
        if !(scale.max > scale.min) {
            return Err(Error::Scale {
                min: scale.min,
                max: scale.max,
            });
        }
        let row_index = index_labels(&row_labels, "row")?;
        let col_index = index_labels(&col_labels, "column")?;
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); row_labels.len()];
        for (r, c, v) in entries {
            if r >= row_labels.len() || c >= col_labels.len() {
                return Err(Error::InvalidMatrix(format!("entry ({r}, {c}) is out of range")));
            }
            if !scale.contains(v) {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) = {v} outside rating scale [{}, {}]",
                    scale.min, scale.max
                )));
            }
            rows[r].push((c as u32, v));
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({r}, {})", w[0].0)));
            }
        }
        Ok(Self {
            row_labels,
            col_labels,
            rows,
            scale,
            row_index,
            col_index,
        })
    }

    /// Dense constructor: every cell becomes an observed rating.
    pub fn from_dense<S: AsRef<str>>(row_labels: &[S], col_labels: &[S], values: &[Vec<f64>]) -> Result<Self> {
        if values.len() != row_labels.len() || values.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::InvalidMatrix("dense values do not match label dimensions".into()));
        }
        let entries = values
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)));
        Self::new(
            row_labels.iter().map(|s| s.as_ref().to_string()).collect(),
            col_labels.iter().map(|s| s.as_ref().to_string()).collect(),
            entries,
            RatingScale::BINARY,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn row_of(&self, label: &str) -> Option<usize> {
        self.row_index.get(label).copied()
    }

    pub fn col_of(&self, label: &str) -> Option<usize> {
        self.col_index.get(label).copied()
    }

    /// Observed entries of row `r`, sorted by column.
    pub fn row(&self, r: usize) -> &[(u32, f64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let row = &self.rows[r];
        row.binary_search_by_key(&(c as u32), |&(col, _)| col)
            .ok()
            .map(|i| row[i].1)
    }

    /// Number of observed ratings, explicit zeros included.
    pub fn observed(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_positive(&self, value: f64) -> bool {
        value > self.scale.min
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c as usize, v)))
    }

    /// Count of nonzero entries per row.
    pub fn row_occurrences(&self) -> Vec<usize> {
        self.rows.iter().map(|row| row.iter().filter(|e| e.1 != 0.0).count()).collect()
    }

    /// Count of nonzero entries per column.
    pub fn col_occurrences(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols()];
        for (_, c, v) in self.entries() {
            if v != 0.0 {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn transpose(&self) -> RatingMatrix {
        let entries = self.entries().map(|(r, c, v)| (c, r, v));
        Self::new(self.col_labels.clone(), self.row_labels.clone(), entries, self.scale)
            .expect("transpose of a valid matrix is valid")
    }

    /// Column-major view: for each column, `(row, value)` sorted by row.
    pub fn columns(&self) -> Vec<Vec<(u32, f64)>> {
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.n_cols()];
        for (r, c, v) in self.entries() {
            cols[c].push((r as u32, v));
        }
        cols
    }

    /// Keeps only rows and columns whose index is listed, preserving order.
    pub fn select(&self, keep_rows: &[usize], keep_cols: &[usize]) -> RatingMatrix {
        let mut col_map = vec![None; self.n_cols()];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = Some(new);
        }
        let entries: Vec<_> = keep_rows
            .iter()
            .enumerate()
            .flat_map(|(new_r, &old_r)| {
                let col_map = &col_map;
                self.rows[old_r]
                    .iter()
                    .filter_map(move |&(c, v)| col_map[c as usize].map(|new_c| (new_r, new_c, v)))
            })
            .collect();
        Self::new(
            keep_rows.iter().map(|&r| self.row_labels[r].clone()).collect(),
            keep_cols.iter().map(|&c| self.col_labels[c].clone()).collect(),
            entries,
            self.scale,
        )
        .expect("selection of a valid matrix is valid")
    }

    /// Same labels, only the entries accepted by `keep`.
    pub fn filter_entries(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> RatingMatrix {
        let entries: Vec<_> = self.entries().filter(|&(r, c, v)| keep(r, c, v)).collect();
        Self::new(self.row_labels.clone(), self.col_labels.clone(), entries, self.scale)
            .expect("filtering a valid matrix keeps it valid")
    }

    /// Drops explicit zeros, leaving implicit-feedback semantics.
    pub fn positive_only(&self) -> RatingMatrix {
        let min = self.scale.min;
        self.filter_entries(|_, _, v| v > min)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "rows={} cols={} rmin={} rmax={}",
            self.n_rows(),
            self.n_cols(),
            self.scale.min,
            self.scale.max
        )
        .unwrap();
        for l in &self.row_labels {
            writeln!(out, "row {l}").unwrap();
        }
        for l in &self.col_labels {
            writeln!(out, "col {l}").unwrap();
        }
        for (r, c, v) in self.entries() {
            writeln!(out, "{r} {c} {v}").unwrap();
        }
        out
    }

    /// Lowercase hex SHA-256 of the text export.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }

    pub fn parse_text(text: &str) -> Result<RatingMatrix> {
        let fail = |line: usize, message: String| Error::MatrixFormat { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| fail(1, "missing header".into()))?;
        let mut dims = HashMap::new();
        for field in header.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| fail(1, format!("bad header field `{field}`")))?;
            dims.insert(k, v);
        }
        let header_value = |k: &str| -> Result<&str> {
            dims.get(k).copied().ok_or_else(|| fail(1, format!("header lacks `{k}`")))
        };
        let n_rows: usize = header_value("rows")?.parse().map_err(|e| fail(1, format!("rows: {e}")))?;
        let n_cols: usize = header_value("cols")?.parse().map_err(|e| fail(1, format!("cols: {e}")))?;
        let rmin: f64 = header_value("rmin")?.parse().map_err(|e| fail(1, format!("rmin: {e}")))?;
        let rmax: f64 = header_value("rmax")?.parse().map_err(|e| fail(1, format!("rmax: {e}")))?;

        let mut labels = |prefix: &str, n: usize| -> Result<Vec<String>> {
            (0..n)
                .map(|_| {
                    let (no, line) = lines
                        .next()
                        .ok_or_else(|| fail(0, format!("truncated before all `{prefix}` labels")))?;
                    line.strip_prefix(prefix)
                        .and_then(|rest| rest.strip_prefix(' '))
                        .map(str::to_string)
                        .ok_or_else(|| fail(no, format!("expected `{prefix} <id>`")))
                })
                .collect()
        };
        let row_labels = labels("row", n_rows)?;
        let col_labels = labels("col", n_cols)?;

        let mut entries = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [r, c, v] = parts[..] else {
                return Err(fail(no, "expected `<row> <col> <value>`".into()));
            };
            let r: usize = r.parse().map_err(|e| fail(no, format!("row index: {e}")))?;
            let c: usize = c.parse().map_err(|e| fail(no, format!("column index: {e}")))?;
            let v: f64 = v.parse().map_err(|e| fail(no, format!("value: {e}")))?;
            entries.push((r, c, v));
        }
        Self::new(row_labels, col_labels, entries, RatingScale { min: rmin, max: rmax })
    }

    pub(crate) fn check_labels_writable(&self) -> Result<()> {
        for l in self.row_labels.iter().chain(&self.col_labels) {
            if l.contains(['\n', '\r']) {
                return Err(Error::InvalidMatrix(format!("label {l:?} contains a line break")));
            }
        }
        Ok(())
    }

    /// Writes the text export atomically.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.check_labels_writable()?;
        crate::atomic_write(path, self.to_text().as_bytes())
    }

    pub fn load(path: &std::path::Path) -> Result<RatingMatrix> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}
