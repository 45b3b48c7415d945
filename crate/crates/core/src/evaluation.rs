//! K-fold cross-validation and the accuracy / error metrics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::knn::{build_similarity_model, KnnConfig, Query, RecommendationList};
use crate::matrix::{RatingMatrix, RatingScale};
use crate::projection::{apply_cutoff, CutoffConfig};

/// Assignment of every observed interaction to a fold. `assignments[i]` is
/// the fold of the `i`-th entry in the matrix's row-major entry order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// Entry positions (row-major order) belonging to each fold.
    pub fn folds(&self) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (i, &f) in self.assignments.iter().enumerate() {
            folds[f].push(i);
        }
        folds
    }
}

/// Shuffles the observed interactions with a seeded permutation and deals
/// them round-robin into `k` folds.
pub fn kfold_split(matrix: &RatingMatrix, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be >= 2, got {k}")));
    }
    let n = matrix.observed();
    if k > n {
        return Err(Error::Split { k, interactions: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &entry) in order.iter().enumerate() {
        assignments[entry] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub rows: usize,
    pub precision: f64,
    pub recall: f64,
    pub success_rate: f64,
}

/// Micro-averaged precision and recall plus the success rate (share of rows
/// with at least one hit).
pub fn accuracy_metrics(
    recommended: &BTreeMap<String, RecommendationList>,
    ground_truth: &BTreeMap<String, BTreeSet<String>>,
) -> Result<AccuracyReport> {
    if recommended.is_empty() {
        return Err(Error::MetricDomain("no rows to score".into()));
    }
    let (mut tp, mut fp, mut fn_, mut hits) = (0, 0, 0, 0);
    for (row, list) in recommended {
        let truth = ground_truth
            .get(row)
            .ok_or_else(|| Error::MetricDomain(format!("row `{row}` has no ground truth")))?;
        let recs: BTreeSet<&str> = list.items().collect();
        let row_tp = recs.iter().filter(|i| truth.contains(**i)).count();
        tp += row_tp;
        fp += recs.len() - row_tp;
        fn_ += truth.len() - row_tp;
        if row_tp > 0 {
            hits += 1;
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(AccuracyReport {
        tp,
        fp,
        fn_,
        rows: recommended.len(),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        success_rate: ratio(hits, recommended.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub mae: f64,
    pub rmse: f64,
    pub n_pairs: usize,
}

/// MAE and RMSE over `(actual, predicted)` pairs, divided by the width of
/// the rating scale.
pub fn error_metrics(pairs: &[(f64, f64)], scale: RatingScale) -> Result<RankingReport> {
    if pairs.is_empty() {
        return Err(Error::MetricDomain("no rating pairs".into()));
    }
    if !(scale.max > scale.min) {
        return Err(Error::Scale {
            min: scale.min,
            max: scale.max,
        });
    }
    let n = pairs.len() as f64;
    let abs: f64 = pairs.iter().map(|(a, p)| (p - a).abs()).sum();
    let sq: f64 = pairs.iter().map(|(a, p)| (p - a) * (p - a)).sum();
    Ok(RankingReport {
        mae: abs / n / scale.width(),
        rmse: (sq / n).sqrt() / scale.width(),
        n_pairs: pairs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub config: KnnConfig,
    pub accuracy: AccuracyReport,
    pub ranking: RankingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub precision: f64,
    pub recall: f64,
    pub success_rate: f64,
    pub mae: f64,
    pub rmse: f64,
}

impl AverageReport {
    pub fn of(folds: &[FoldReport]) -> Self {
        let n = folds.len() as f64;
        let mean = |f: &dyn Fn(&FoldReport) -> f64| folds.iter().map(f).sum::<f64>() / n;
        Self {
            precision: mean(&|r| r.accuracy.precision),
            recall: mean(&|r| r.accuracy.recall),
            success_rate: mean(&|r| r.accuracy.success_rate),
            mae: mean(&|r| r.ranking.mae),
            rmse: mean(&|r| r.ranking.rmse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset_tag: String,
    /// Shared configuration; `None` when each fold selected its own.
    pub config: Option<KnnConfig>,
    pub cutoff: CutoffConfig,
    pub folds: usize,
    pub n: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldReport>,
    pub average: AverageReport,
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,precision,recall,success_rate,mae,rmse\n");
        for f in &self.per_fold {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                f.fold + 1,
                f.accuracy.precision,
                f.accuracy.recall,
                f.accuracy.success_rate,
                f.ranking.mae,
                f.ranking.rmse
            )
            .unwrap();
        }
        let a = &self.average;
        writeln!(
            out,
            "avg,{:.6},{:.6},{:.6},{:.6},{:.6}",
            a.precision, a.recall, a.success_rate, a.mae, a.rmse
        )
        .unwrap();
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports are serializable")
    }
}

/// Shared cross-validation protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSettings {
    pub cutoff: CutoffConfig,
    pub folds: usize,
    /// Recommendation list length.
    pub n: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            cutoff: CutoffConfig::default(),
            folds: 10,
            n: 5,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

/// One train/test split of an already cut-off matrix.
pub struct Split {
    pub train: RatingMatrix,
    pub test: Vec<(usize, usize, f64)>,
}

pub fn split_fold(matrix: &RatingMatrix, plan: &FoldPlan, fold: usize) -> Split {
    let mut test = Vec::new();
    let mut idx = 0;
    let train = matrix.filter_entries(|r, c, v| {
        let held_out = plan.assignments[idx] == fold;
        idx += 1;
        if held_out {
            test.push((r, c, v));
        }
        !held_out
    });
    Split { train, test }
}

/// Trains on `split.train` and scores the held-out entries: every held-out
/// rating feeds the error metrics, and every row with a held-out positive
/// gets a top-`n` list over items that are not training positives.
pub fn evaluate_split(split: &Split, config: KnnConfig, n: usize, exec: Execution) -> Result<(AccuracyReport, RankingReport)> {
    let train = &split.train;
    let model = build_similarity_model(train.clone(), config, exec)?;
    let rows = train.row_labels();
    let cols = train.col_labels();

    let mut pairs = Vec::with_capacity(split.test.len());
    let mut truth: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for &(r, c, v) in &split.test {
        let p = model.predict(&rows[r], &cols[c])?;
        pairs.push((v, p.estimate));
        if train.is_positive(v) {
            truth.entry(rows[r].clone()).or_default().insert(cols[c].clone());
        }
    }

    let mut recommended = BTreeMap::new();
    for row in truth.keys() {
        let r = train.row_of(row).expect("test rows come from the training labels");
        let exclude: HashSet<String> = train
            .row(r)
            .iter()
            .filter(|&&(_, v)| train.is_positive(v))
            .map(|&(c, _)| cols[c as usize].clone())
            .collect();
        recommended.insert(row.clone(), model.top_n(Query::Row(row), n, &exclude)?);
    }
    let accuracy = accuracy_metrics(&recommended, &truth)?;
    let ranking = error_metrics(&pairs, train.scale())?;
    Ok((accuracy, ranking))
}

/// Applies the cut-off, plans the folds and evaluates `config` on each.
pub fn cross_validate(matrix: &RatingMatrix, config: KnnConfig, settings: &CvSettings) -> Result<EvaluationReport> {
    let reduced = apply_cutoff(matrix, settings.cutoff)?;
    cross_validate_reduced(&reduced, config, settings)
}

/// [`cross_validate`] on a matrix the cut-off has already been applied to.
pub fn cross_validate_reduced(
    reduced: &RatingMatrix,
    config: KnnConfig,
    settings: &CvSettings,
) -> Result<EvaluationReport> {
    let plan = kfold_split(reduced, settings.folds, settings.seed)?;
    let per_fold = settings
        .exec
        .map_range(plan.k, |fold| {
            let split = split_fold(reduced, &plan, fold);
            evaluate_split(&split, config, settings.n, settings.exec).map(|(accuracy, ranking)| FoldReport {
                fold,
                config,
                accuracy,
                ranking,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        dataset_tag: String::new(),
        config: Some(config),
        cutoff: settings.cutoff,
        folds: settings.folds,
        n: settings.n,
        seed: settings.seed,
        average: AverageReport::of(&per_fold),
        per_fold,
    })
}
