//! Tag×component (T), project×component (P) and component×library (L)
//! projections, and vertical/horizontal cut-off filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{RatingMatrix, RatingScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProjectionKind {
    /// tag × component
    T,
    /// project × component
    P,
    /// component × library
    L,
}

impl ProjectionKind {
    pub const ALL: [ProjectionKind; 3] = [ProjectionKind::T, ProjectionKind::P, ProjectionKind::L];
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionKind::T => "T",
            ProjectionKind::P => "P",
            ProjectionKind::L => "L",
        })
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(ProjectionKind::T),
            "P" | "p" => Ok(ProjectionKind::P),
            "L" | "l" => Ok(ProjectionKind::L),
            other => Err(Error::InvalidArgument(format!("unknown projection kind `{other}`"))),
        }
    }
}

pub fn normalize_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}

/// Builds a dense binary projection: every (row, column) pair over the
/// participating labels is stored, 1 when the pair co-occurs and 0 otherwise.
/// Rows and columns only participate when they co-occur with at least one
/// counterpart. Labels are sorted lexicographically.
pub fn build_projection(corpus: &Corpus, kind: ProjectionKind) -> Result<RatingMatrix> {
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for p in &corpus.projects {
        let comps = p.components.iter().map(|c| c.id.clone());
        match kind {
            ProjectionKind::P => {
                pairs.extend(comps.map(|c| (p.id.clone(), c)));
            }
            ProjectionKind::T => {
                let tags: BTreeSet<String> =
                    p.tags.iter().map(|t| normalize_tag(t)).filter(|t| !t.is_empty()).collect();
                for c in comps {
                    pairs.extend(tags.iter().map(|t| (t.clone(), c.clone())));
                }
            }
            ProjectionKind::L => {
                for c in comps {
                    pairs.extend(p.libraries.iter().map(|l| (c.clone(), l.clone())));
                }
            }
        }
    }
    let rows: BTreeSet<&String> = pairs.iter().map(|(r, _)| r).collect();
    let cols: BTreeSet<&String> = pairs.iter().map(|(_, c)| c).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyProjection(kind));
    }
    let row_pos: BTreeMap<&String, usize> = rows.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let col_pos: BTreeMap<&String, usize> = cols.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let mut dense = vec![vec![0.0; cols.len()]; rows.len()];
    for (r, c) in &pairs {
        dense[row_pos[r]][col_pos[c]] = 1.0;
    }
    let entries = dense
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)));
    RatingMatrix::new(
        rows.into_iter().cloned().collect(),
        cols.into_iter().cloned().collect(),
        entries,
        RatingScale::BINARY,
    )
}

/// Vertical (`v`, columns) and horizontal (`h`, rows) occurrence thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoffConfig {
    pub v: usize,
    pub h: usize,
    pub fixpoint: bool,
}

impl CutoffConfig {
    pub fn new(v: usize, h: usize) -> Result<Self> {
        if v == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!("cut-off values must be >= 1, got ({v}, {h})")));
        }
        Ok(Self { v, h, fixpoint: false })
    }

    pub fn with_fixpoint(mut self, fixpoint: bool) -> Self {
        self.fixpoint = fixpoint;
        self
    }
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            v: 1,
            h: 1,
            fixpoint: false,
        }
    }
}

impl fmt::Display for CutoffConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.v, self.h)?;
        if self.fixpoint {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// Drops columns with fewer than `v` nonzero entries, then rows with fewer
/// than `h` nonzero entries in what remains. With `fixpoint` the two passes
/// repeat until nothing changes.
pub fn apply_cutoff(matrix: &RatingMatrix, cfg: CutoffConfig) -> Result<RatingMatrix> {
    if cfg.v == 0 || cfg.h == 0 {
        return Err(Error::InvalidArgument("cut-off values must be >= 1".into()));
    }
    let mut current = matrix.clone();
    loop {
        let keep_cols: Vec<usize> = current
            .col_occurrences()
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n >= cfg.v)
            .map(|(c, _)| c)
            .collect();
        let all_rows: Vec<usize> = (0..current.n_rows()).collect();
        let vertical = current.select(&all_rows, &keep_cols);

        let keep_rows: Vec<usize> = vertical
            .row_occurrences()
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n >= cfg.h)
            .map(|(r, _)| r)
            .collect();
        let all_cols: Vec<usize> = (0..vertical.n_cols()).collect();
        let next = vertical.select(&keep_rows, &all_cols);

        if next.n_rows() == 0 || next.n_cols() == 0 {
            return Err(Error::OverPruned {
                rows: next.n_rows(),
                cols: next.n_cols(),
            });
        }
        let unchanged = next.n_rows() == current.n_rows() && next.n_cols() == current.n_cols();
        current = next;
        if !cfg.fixpoint || unchanged {
            return Ok(current);
        }
    }
}
