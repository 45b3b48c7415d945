//! Similarity functions over sparse rating profiles.
//!
//! A profile is a slice of `(position, rating)` sorted by position. Only
//! positions observed in both profiles take part in a comparison.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Msd,
    Cosine,
    Pearson,
}

impl Similarity {
    pub const ALL: [Similarity; 3] = [Similarity::Msd, Similarity::Cosine, Similarity::Pearson];

    pub fn name(self) -> &'static str {
        match self {
            Similarity::Msd => "msd",
            Similarity::Cosine => "cosine",
            Similarity::Pearson => "pearson",
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msd" => Ok(Similarity::Msd),
            "cosine" | "cos" => Ok(Similarity::Cosine),
            "pearson" => Ok(Similarity::Pearson),
            other => Err(Error::InvalidArgument(format!("unknown similarity `{other}`"))),
        }
    }
}

/// Calls `f(a_i, b_i)` for every position observed in both profiles.
fn for_each_common(a: &[(u32, f64)], b: &[(u32, f64)], mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn support(a: &[(u32, f64)], b: &[(u32, f64)]) -> usize {
    let mut n = 0;
    for_each_common(a, b, |_, _| n += 1);
    n
}

/// Similarity of two profiles; 0 when fewer than `min_support` positions
/// are co-observed or the measure is undefined.
pub fn compute_similarity(kind: Similarity, a: &[(u32, f64)], b: &[(u32, f64)], min_support: usize) -> f64 {
    match kind {
        Similarity::Msd => {
            let (mut n, mut sq) = (0usize, 0.0);
            for_each_common(a, b, |x, y| {
                n += 1;
                sq += (x - y) * (x - y);
            });
            if n == 0 || n < min_support {
                return 0.0;
            }
            1.0 / (sq / n as f64 + 1.0)
        }
        Similarity::Cosine => {
            let (mut n, mut dot, mut aa, mut bb) = (0usize, 0.0, 0.0, 0.0);
            for_each_common(a, b, |x, y| {
                n += 1;
                dot += x * y;
                aa += x * x;
                bb += y * y;
            });
            if n == 0 || n < min_support || aa == 0.0 || bb == 0.0 {
                return 0.0;
            }
            (dot / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
        }
        Similarity::Pearson => {
            let (mut n, mut sum_a, mut sum_b) = (0usize, 0.0, 0.0);
            for_each_common(a, b, |x, y| {
                n += 1;
                sum_a += x;
                sum_b += y;
            });
            if n == 0 || n < min_support {
                return 0.0;
            }
            let (mean_a, mean_b) = (sum_a / n as f64, sum_b / n as f64);
            let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
            for_each_common(a, b, |x, y| {
                let (dx, dy) = (x - mean_a, y - mean_b);
                cov += dx * dy;
                var_a += dx * dx;
                var_b += dy * dy;
            });
            if var_a == 0.0 || var_b == 0.0 {
                return 0.0;
            }
            (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0)
        }
    }
}

/// Converts a dense optional profile into the sparse representation.
pub fn sparse_profile(dense: &[Option<f64>]) -> Vec<(u32, f64)> {
    dense
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i as u32, v)))
        .collect()
}
