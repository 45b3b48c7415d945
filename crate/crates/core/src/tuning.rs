//! Exhaustive grid search over KNN hyperparameters.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    cross_validate_reduced, evaluate_split, kfold_split, split_fold, AverageReport, CvSettings, EvaluationReport,
    FoldReport,
};
use crate::knn::{CfMode, KnnConfig};
use crate::matrix::RatingMatrix;
use crate::projection::{apply_cutoff, CutoffConfig};
use crate::similarity::Similarity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub similarities: Vec<Similarity>,
    pub modes: Vec<CfMode>,
    pub min_supports: Vec<usize>,
    pub ks: Vec<usize>,
}

impl GridSpec {
    /// {MSD, Cosine, Pearson} × {user, item} × {1, 5, 20} × {5, 10, 20}.
    pub fn standard() -> Self {
        Self {
            similarities: vec![Similarity::Msd, Similarity::Cosine, Similarity::Pearson],
            modes: vec![CfMode::UserBased, CfMode::ItemBased],
            min_supports: vec![1, 5, 20],
            ks: vec![5, 10, 20],
        }
    }

    pub fn single(config: KnnConfig) -> Self {
        Self {
            similarities: vec![config.similarity],
            modes: vec![config.mode],
            min_supports: vec![config.min_support],
            ks: vec![config.k],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.similarities.is_empty() || self.modes.is_empty() || self.min_supports.is_empty() || self.ks.is_empty()
        {
            return Err(Error::InvalidArgument("every grid pool must be non-empty".into()));
        }
        if self.min_supports.contains(&0) || self.ks.contains(&0) {
            return Err(Error::InvalidArgument("grid values must be positive".into()));
        }
        Ok(())
    }
}

fn dedup<T: PartialEq + Copy>(pool: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(pool.len());
    for &v in pool {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Cartesian product in nested order (similarity, mode, min_support, k),
/// each pool deduplicated keeping first occurrences.
pub fn enumerate_grid(spec: &GridSpec) -> Vec<KnnConfig> {
    let sims = dedup(&spec.similarities);
    let modes = dedup(&spec.modes);
    let supports = dedup(&spec.min_supports);
    let ks = dedup(&spec.ks);
    let mut out = Vec::with_capacity(sims.len() * modes.len() * supports.len() * ks.len());
    for &similarity in &sims {
        for &mode in &modes {
            for &min_support in &supports {
                for &k in &ks {
                    out.push(KnnConfig {
                        similarity,
                        mode,
                        min_support,
                        k,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Rmse,
    Mae,
    Precision,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Rmse => "rmse",
            Criterion::Mae => "mae",
            Criterion::Precision => "precision",
        }
    }

    pub fn score(self, average: &AverageReport) -> f64 {
        match self {
            Criterion::Rmse => average.rmse,
            Criterion::Mae => average.mae,
            Criterion::Precision => average.precision,
        }
    }

    /// Strictly better.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Criterion::Rmse | Criterion::Mae => candidate < incumbent,
            Criterion::Precision => candidate > incumbent,
        }
    }

    /// Score recorded for a configuration that could not be evaluated.
    pub fn sentinel(self) -> f64 {
        match self {
            Criterion::Rmse | Criterion::Mae => f64::INFINITY,
            Criterion::Precision => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(Criterion::Rmse),
            "mae" => Ok(Criterion::Mae),
            "precision" => Ok(Criterion::Precision),
            other => Err(Error::InvalidArgument(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub config: KnnConfig,
    pub score: f64,
    /// Set when the configuration failed and `score` is the sentinel.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub best: KnnConfig,
    pub best_score: f64,
    pub criterion: Criterion,
    pub scoreboard: Vec<ScoreEntry>,
}

impl TuningResult {
    pub fn scoreboard_csv(&self) -> String {
        let mut out = String::from("similarity,mode,min_support,k,criterion,score\n");
        for e in &self.scoreboard {
            let c = e.config;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.similarity, c.mode, c.min_support, c.k, self.criterion, e.score
            )
            .unwrap();
        }
        out
    }

    pub fn best_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "similarity": self.best.similarity,
            "mode": self.best.mode,
            "min_support": self.best.min_support,
            "k": self.best.k,
            "criterion": self.criterion,
            "score": self.best_score,
        }))
        .expect("best config is serializable")
    }
}

fn sweep(reduced: &RatingMatrix, spec: &GridSpec, settings: &CvSettings, criterion: Criterion) -> Result<TuningResult> {
    spec.validate()?;
    let configs = enumerate_grid(spec);
    let scoreboard: Vec<ScoreEntry> = settings.exec.map_range(configs.len(), |i| {
        let config = configs[i];
        match cross_validate_reduced(reduced, config, settings) {
            Ok(report) => ScoreEntry {
                config,
                score: criterion.score(&report.average),
                error: None,
            },
            Err(e) => ScoreEntry {
                config,
                score: criterion.sentinel(),
                error: Some(e.to_string()),
            },
        }
    });
    let mut best: Option<&ScoreEntry> = None;
    for entry in scoreboard.iter().filter(|e| e.error.is_none()) {
        if best.is_none_or(|b| criterion.improves(entry.score, b.score)) {
            best = Some(entry);
        }
    }
    let (best, best_score) = best.map(|b| (b.config, b.score)).ok_or(Error::NoViableConfig)?;
    Ok(TuningResult {
        best,
        best_score,
        criterion,
        scoreboard,
    })
}

/// Cross-validates every configuration of `spec` under the shared
/// protocol and keeps the one optimizing `criterion`. Ties go to the
/// earliest configuration in enumeration order.
pub fn grid_search(
    matrix: &RatingMatrix,
    spec: &GridSpec,
    settings: &CvSettings,
    criterion: Criterion,
) -> Result<TuningResult> {
    let reduced = apply_cutoff(matrix, settings.cutoff)?;
    sweep(&reduced, spec, settings, criterion)
}

/// Nested cross-validation: each outer fold selects its own configuration
/// by an inner grid search over that fold's training part only.
pub fn nested_cross_validate(
    matrix: &RatingMatrix,
    spec: &GridSpec,
    settings: &CvSettings,
    criterion: Criterion,
    inner_folds: usize,
) -> Result<EvaluationReport> {
    let reduced = apply_cutoff(matrix, settings.cutoff)?;
    let plan = kfold_split(&reduced, settings.folds, settings.seed)?;
    let inner = CvSettings {
        cutoff: CutoffConfig::default(),
        folds: inner_folds,
        ..*settings
    };
    let per_fold = settings
        .exec
        .map_range(plan.k, |fold| -> Result<FoldReport> {
            let split = split_fold(&reduced, &plan, fold);
            let tuned = sweep(&split.train, spec, &inner, criterion)?;
            let (accuracy, ranking) = evaluate_split(&split, tuned.best, settings.n, settings.exec)?;
            Ok(FoldReport {
                fold,
                config: tuned.best,
                accuracy,
                ranking,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        dataset_tag: String::new(),
        config: None,
        cutoff: settings.cutoff,
        folds: settings.folds,
        n: settings.n,
        seed: settings.seed,
        average: AverageReport::of(&per_fold),
        per_fold,
    })
}
