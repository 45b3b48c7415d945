//! Brute-force reference implementations for the test suites.
//!
//! Everything here works on plain dense vectors and is written without the
//! engine's sparse data structures, so the two paths stay independent.

use std::collections::BTreeSet;

use rand::Rng;

/// Dense rating matrix; `None` marks an unobserved cell.
pub type Dense = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sim {
    Msd,
    Cosine,
    Pearson,
}

pub fn similarity(kind: Sim, a: &[Option<f64>], b: &[Option<f64>], min_support: usize) -> f64 {
    let common: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    let n = common.len();
    if n == 0 || n < min_support {
        return 0.0;
    }
    match kind {
        Sim::Msd => {
            let msd = common.iter().map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64;
            1.0 / (msd + 1.0)
        }
        Sim::Cosine => {
            let dot: f64 = common.iter().map(|(x, y)| x * y).sum();
            let na = common.iter().map(|(x, _)| x * x).sum::<f64>().sqrt();
            let nb = common.iter().map(|(_, y)| y * y).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                dot / (na * nb)
            }
        }
        Sim::Pearson => {
            let ma = common.iter().map(|(x, _)| x).sum::<f64>() / n as f64;
            let mb = common.iter().map(|(_, y)| y).sum::<f64>() / n as f64;
            let cov: f64 = common.iter().map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = common.iter().map(|(x, _)| (x - ma).powi(2)).sum();
            let vb: f64 = common.iter().map(|(_, y)| (y - mb).powi(2)).sum();
            if va == 0.0 || vb == 0.0 {
                0.0
            } else {
                cov / (va.sqrt() * vb.sqrt())
            }
        }
    }
}

pub fn transpose(m: &Dense) -> Dense {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|c| m.iter().map(|row| row[c]).collect()).collect()
}

pub fn global_mean(m: &Dense) -> f64 {
    let vals: Vec<f64> = m.iter().flatten().flatten().copied().collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Reference KNN prediction: scores every axis element (the target's own
/// profile included) from scratch, sorts all candidates, keeps the `k` best
/// with positive similarity and a rating at the target, and takes the
/// similarity-weighted mean. `None` means no qualifying neighbour.
#[allow(clippy::too_many_arguments)]
pub fn predict(
    m: &Dense,
    row_labels: &[String],
    col_labels: &[String],
    user_based: bool,
    kind: Sim,
    min_support: usize,
    k: usize,
    r: usize,
    c: usize,
) -> Option<(f64, usize)> {
    let (axis_m, labels, target, other) = if user_based {
        (m.clone(), row_labels, r, c)
    } else {
        (transpose(m), col_labels, c, r)
    };
    let mut candidates: Vec<(f64, &str, f64)> = Vec::new();
    for (j, profile) in axis_m.iter().enumerate() {
        let Some(rating) = profile[other] else { continue };
        let s = similarity(kind, &axis_m[target], profile, min_support);
        if s > 0.0 {
            candidates.push((s, labels[j].as_str(), rating));
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    candidates.truncate(k);
    if candidates.is_empty() {
        return None;
    }
    let num: f64 = candidates.iter().map(|(s, _, r)| s * r).sum();
    let den: f64 = candidates.iter().map(|(s, _, _)| s.abs()).sum();
    Some(((num / den).clamp(0.0, 1.0), candidates.len()))
}

pub fn counts(m: &[Vec<u8>]) -> (Vec<usize>, Vec<usize>) {
    let rows = m.iter().map(|r| r.iter().filter(|&&v| v != 0).count()).collect();
    let cols = (0..m.first().map_or(0, Vec::len))
        .map(|c| m.iter().filter(|r| r[c] != 0).count())
        .collect();
    (rows, cols)
}

/// Single vertical-then-horizontal pass; returns surviving (rows, cols).
pub fn single_pass_cutoff(m: &[Vec<u8>], v: usize, h: usize) -> (Vec<usize>, Vec<usize>) {
    let (_, col_counts) = counts(m);
    let cols: Vec<usize> = (0..col_counts.len()).filter(|&c| col_counts[c] >= v).collect();
    let rows: Vec<usize> = (0..m.len())
        .filter(|&r| cols.iter().filter(|&&c| m[r][c] != 0).count() >= h)
        .collect();
    (rows, cols)
}

/// Removes one violating row or column at a time until none remain.
pub fn prune_until_stable(m: &[Vec<u8>], v: usize, h: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rows: BTreeSet<usize> = (0..m.len()).collect();
    let mut cols: BTreeSet<usize> = (0..m.first().map_or(0, Vec::len)).collect();
    loop {
        let bad_col = cols
            .iter()
            .copied()
            .find(|&c| rows.iter().filter(|&&r| m[r][c] != 0).count() < v);
        if let Some(c) = bad_col {
            cols.remove(&c);
            continue;
        }
        let bad_row = rows
            .iter()
            .copied()
            .find(|&r| cols.iter().filter(|&&c| m[r][c] != 0).count() < h);
        if let Some(r) = bad_row {
            rows.remove(&r);
            continue;
        }
        return (rows.into_iter().collect(), cols.into_iter().collect());
    }
}

/// Set-arithmetic precision / recall / success rate over
/// `(recommended, truth)` rows, micro-averaged.
pub fn accuracy(rows: &[(Vec<String>, Vec<String>)]) -> (usize, usize, usize, f64, f64, f64) {
    let (mut tp, mut fp, mut fn_, mut hit) = (0, 0, 0, 0);
    for (rec, truth) in rows {
        let rec: BTreeSet<&String> = rec.iter().collect();
        let truth: BTreeSet<&String> = truth.iter().collect();
        let inter = rec.intersection(&truth).count();
        tp += inter;
        fp += rec.difference(&truth).count();
        fn_ += truth.difference(&rec).count();
        hit += usize::from(inter > 0);
    }
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (tp, fp, fn_, div(tp, tp + fp), div(tp, tp + fn_), div(hit, rows.len()))
}

pub fn mae_rmse(pairs: &[(f64, f64)], rmin: f64, rmax: f64) -> (f64, f64) {
    let n = pairs.len() as f64;
    let mae = pairs.iter().map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let mse = pairs.iter().map(|(a, p)| (a - p).powi(2)).sum::<f64>() / n;
    (mae / (rmax - rmin), mse.sqrt() / (rmax - rmin))
}

pub fn random_binary<R: Rng>(rng: &mut R, rows: usize, cols: usize, density: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| f64::from(u8::from(rng.random_bool(density)))).collect())
        .collect()
}

/// Each cell independently observed with probability `observed`, rating
/// 1 with probability `density` when observed.
pub fn random_partial<R: Rng>(rng: &mut R, rows: usize, cols: usize, observed: f64, density: f64) -> Dense {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| rng.random_bool(observed).then(|| f64::from(u8::from(rng.random_bool(density)))))
                .collect()
        })
        .collect()
}

/// Ranks candidate columns for row `r` by how often they co-occur (both 1)
/// with the row's positive columns across all other rows.
pub fn cooccurrence_top_n(m: &Dense, r: usize, n: usize, exclude: &BTreeSet<usize>) -> Vec<usize> {
    let cols = m[r].len();
    let positives: Vec<usize> = (0..cols).filter(|&c| m[r][c] == Some(1.0)).collect();
    let mut scored: Vec<(usize, usize)> = (0..cols)
        .filter(|c| !exclude.contains(c))
        .map(|c| {
            let score = m
                .iter()
                .enumerate()
                .filter(|&(o, row)| o != r && row[c] == Some(1.0))
                .map(|(_, row)| positives.iter().filter(|&&p| row[p] == Some(1.0)).count())
                .sum();
            (c, score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().take(n).map(|(c, _)| c).collect()
}

/// The 10×8 project×component example matrix with rows P1, P2, P3, P3,
/// P4..P9 and columns C1..C8. The repeated P3 row is kept as printed.
pub const CUTOFF_EXAMPLE: [[u8; 8]; 10] = [
    [0, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1],
    [0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 1, 1, 0, 0],
    [0, 1, 1, 1, 0, 0, 0, 0],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [1, 0, 0, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 1, 1, 0, 0],
    [0, 0, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 1, 0, 0, 0],
];

/// Row labels for [`CUTOFF_EXAMPLE`]; the second P3 gets a suffix because
/// matrix labels must be distinct.
pub const CUTOFF_EXAMPLE_ROWS: [&str; 10] = ["P1", "P2", "P3", "P3b", "P4", "P5", "P6", "P7", "P8", "P9"];
pub const CUTOFF_EXAMPLE_COLS: [&str; 8] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"];
