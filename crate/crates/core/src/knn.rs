//! KNN collaborative filtering: similarity model construction, rating
//! prediction, fold-in of unseen profiles and top-N ranking.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::RatingMatrix;
use crate::similarity::{compute_similarity, Similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfMode {
    #[serde(rename = "user")]
    UserBased,
    #[serde(rename = "item")]
    ItemBased,
}

impl CfMode {
    pub const ALL: [CfMode; 2] = [CfMode::UserBased, CfMode::ItemBased];

    pub fn name(self) -> &'static str {
        match self {
            CfMode::UserBased => "user",
            CfMode::ItemBased => "item",
        }
    }
}

impl fmt::Display for CfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "user" | "user_based" | "userbased" => Ok(CfMode::UserBased),
            "item" | "item_based" | "itembased" => Ok(CfMode::ItemBased),
            other => Err(Error::InvalidArgument(format!("unknown CF mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnnConfig {
    pub similarity: Similarity,
    pub mode: CfMode,
    /// Minimum number of co-rated positions for a nonzero similarity.
    pub min_support: usize,
    /// Neighbourhood size.
    pub k: usize,
}

impl KnnConfig {
    pub fn new(similarity: Similarity, mode: CfMode, min_support: usize, k: usize) -> Result<Self> {
        if min_support == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "min_support and k must be >= 1, got {min_support} and {k}"
            )));
        }
        Ok(Self {
            similarity,
            mode,
            min_support,
            k,
        })
    }
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            similarity: Similarity::Msd,
            mode: CfMode::UserBased,
            min_support: 1,
            k: 20,
        }
    }
}

impl fmt::Display for KnnConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/min_support={}/k={}",
            self.similarity, self.mode, self.min_support, self.k
        )
    }
}

/// Symmetric matrix stored as its lower triangle, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    side: usize,
    lower: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_lower(side: usize, lower: Vec<f64>) -> Result<Self> {
        if lower.len() != side * (side + 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "lower triangle of side {side} needs {} values, got {}",
                side * (side + 1) / 2,
                lower.len()
            )));
        }
        Ok(Self { side, lower })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.lower[hi * (hi + 1) / 2 + lo]
    }

    /// Row `i` of the lower triangle: similarities to `0..=i`.
    pub fn lower_row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.lower[start..start + i + 1]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.side).map(|j| self.get(i, j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub row_id: String,
    pub col_id: String,
    pub estimate: f64,
    pub neighbor_count: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: String,
    pub score: f64,
}

/// Ranked items: scores non-increasing, ties by item id ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub entries: Vec<ScoredItem>,
    pub requested_n: usize,
}

impl RecommendationList {
    pub fn from_scores<I, S>(scores: I, n: usize, exclude: &HashSet<String>) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries: Vec<ScoredItem> = scores
            .into_iter()
            .map(|(item, score)| ScoredItem {
                item: item.into(),
                score,
            })
            .filter(|s| !exclude.contains(&s.item))
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.item.cmp(&b.item)));
        entries.truncate(n);
        Self { entries, requested_n: n }
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.item.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// What to rank for: an existing training row, or an unseen profile of
/// item ratings.
#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    Row(&'a str),
    Profile(&'a BTreeMap<String, f64>),
}

/// Trained KNN artifact.
#[derive(Debug, Clone)]
pub struct SimilarityModel {
    config: KnnConfig,
    sim: SimilarityMatrix,
    training: Arc<RatingMatrix>,
    training_hash: String,
    global_mean: f64,
    // profiles along the similarity axis, and the opposite orientation
    axis_view: Vec<Vec<(u32, f64)>>,
    other_view: Vec<Vec<(u32, f64)>>,
}

type Profiles = Vec<Vec<(u32, f64)>>;

fn views(matrix: &RatingMatrix, mode: CfMode) -> (Profiles, Profiles) {
    let rows: Vec<Vec<(u32, f64)>> = (0..matrix.n_rows()).map(|r| matrix.row(r).to_vec()).collect();
    let cols = matrix.columns();
    match mode {
        CfMode::UserBased => (rows, cols),
        CfMode::ItemBased => (cols, rows),
    }
}

fn global_mean(matrix: &RatingMatrix) -> Result<f64> {
    let n = matrix.observed();
    if n == 0 {
        return Err(Error::EmptyModel);
    }
    Ok(matrix.entries().map(|(_, _, v)| v).sum::<f64>() / n as f64)
}

/// Computes every pairwise similarity along the configured axis.
pub fn build_similarity_model(
    matrix: impl Into<Arc<RatingMatrix>>,
    config: KnnConfig,
    exec: Execution,
) -> Result<SimilarityModel> {
    let training = matrix.into();
    let global_mean = global_mean(&training)?;
    let (axis_view, other_view) = views(&training, config.mode);
    let rows = exec.map_range(axis_view.len(), |i| {
        (0..=i)
            .map(|j| compute_similarity(config.similarity, &axis_view[i], &axis_view[j], config.min_support))
            .collect::<Vec<f64>>()
    });
    let sim = SimilarityMatrix::from_lower(axis_view.len(), rows.concat())?;
    Ok(SimilarityModel {
        config,
        sim,
        training_hash: training.content_hash(),
        training,
        global_mean,
        axis_view,
        other_view,
    })
}

impl SimilarityModel {
    /// Reassembles a model from persisted parts. The similarity side must
    /// match the training matrix axis.
    pub fn from_parts(
        config: KnnConfig,
        sim: SimilarityMatrix,
        training: Arc<RatingMatrix>,
        global_mean: f64,
    ) -> Result<Self> {
        let (axis_view, other_view) = views(&training, config.mode);
        if sim.side() != axis_view.len() {
            return Err(Error::ModelState(format!(
                "similarity side {} does not match training axis of {}",
                sim.side(),
                axis_view.len()
            )));
        }
        Ok(Self {
            config,
            sim,
            training_hash: training.content_hash(),
            training,
            global_mean,
            axis_view,
            other_view,
        })
    }

    pub fn config(&self) -> KnnConfig {
        self.config
    }

    pub fn similarities(&self) -> &SimilarityMatrix {
        &self.sim
    }

    pub fn training(&self) -> &RatingMatrix {
        &self.training
    }

    pub fn training_hash(&self) -> &str {
        &self.training_hash
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn axis_labels(&self) -> &[String] {
        match self.config.mode {
            CfMode::UserBased => self.training.row_labels(),
            CfMode::ItemBased => self.training.col_labels(),
        }
    }

    fn fallback(&self, row_id: &str, col_id: &str) -> Prediction {
        Prediction {
            row_id: row_id.to_string(),
            col_id: col_id.to_string(),
            estimate: self.training.scale().clip(self.global_mean),
            neighbor_count: 0,
            fallback: true,
        }
    }

    /// Weighted mean over the `k` most similar qualifying neighbours.
    /// `raters` lists `(axis index, rating)` of every axis element that
    /// observed the target, the queried element included; `weight` gives
    /// each one's similarity to the query.
    fn estimate(&self, raters: &[(u32, f64)], weight: impl Fn(usize) -> f64) -> Option<(f64, usize)> {
        let labels = self.axis_labels();
        let mut neighbours: Vec<(usize, f64, f64)> = raters
            .iter()
            .map(|&(j, r)| (j as usize, weight(j as usize), r))
            .filter(|&(_, s, _)| s > 0.0)
            .collect();
        if neighbours.is_empty() {
            return None;
        }
        neighbours.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| labels[a.0].cmp(&labels[b.0])));
        neighbours.truncate(self.config.k);
        let (num, den) = neighbours
            .iter()
            .fold((0.0, 0.0), |(num, den), &(_, s, r)| (num + s * r, den + s.abs()));
        Some((self.training.scale().clip(num / den), neighbours.len()))
    }

    fn predict_at(&self, r: usize, c: usize) -> Prediction {
        let (axis, other) = match self.config.mode {
            CfMode::UserBased => (r, c),
            CfMode::ItemBased => (c, r),
        };
        let row_id = &self.training.row_labels()[r];
        let col_id = &self.training.col_labels()[c];
        match self.estimate(&self.other_view[other], |j| self.sim.get(axis, j)) {
            Some((estimate, neighbor_count)) => Prediction {
                row_id: row_id.clone(),
                col_id: col_id.clone(),
                estimate,
                neighbor_count,
                fallback: false,
            },
            None => self.fallback(row_id, col_id),
        }
    }

    /// Predicts the rating of `row_id` for `col_id`. When only one of the
    /// two is known the global training mean is returned.
    pub fn predict(&self, row_id: &str, col_id: &str) -> Result<Prediction> {
        match (self.training.row_of(row_id), self.training.col_of(col_id)) {
            (Some(r), Some(c)) => Ok(self.predict_at(r, c)),
            (None, None) => Err(Error::UnknownEntity {
                row: row_id.to_string(),
                col: col_id.to_string(),
            }),
            _ => Ok(self.fallback(row_id, col_id)),
        }
    }

    fn sparse_profile(&self, profile: &BTreeMap<String, f64>) -> Result<Vec<(u32, f64)>> {
        let scale = self.training.scale();
        let mut sparse = Vec::with_capacity(profile.len());
        for (item, &rating) in profile {
            if !scale.contains(rating) {
                return Err(Error::InvalidArgument(format!(
                    "rating {rating} for `{item}` is outside [{}, {}]",
                    scale.min, scale.max
                )));
            }
            if let Some(c) = self.training.col_of(item) {
                sparse.push((c as u32, rating));
            }
        }
        if sparse.is_empty() {
            return Err(Error::InsufficientOverlap);
        }
        sparse.sort_by_key(|&(c, _)| c);
        Ok(sparse)
    }

    /// Similarity of an unseen profile to every training row. Items
    /// unknown to the model are ignored.
    pub fn fold_in(&self, profile: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        if self.config.mode != CfMode::UserBased {
            return Err(Error::ModelState("fold-in requires a user-based model".into()));
        }
        let sparse = self.sparse_profile(profile)?;
        Ok(self
            .axis_view
            .iter()
            .map(|row| compute_similarity(self.config.similarity, &sparse, row, self.config.min_support))
            .collect())
    }

    /// Predictions for every column, in column order.
    pub fn predict_all(&self, query: Query<'_>) -> Result<Vec<Prediction>> {
        if self.training.n_cols() == 0 {
            return Err(Error::ModelState("model has no items".into()));
        }
        let cols = 0..self.training.n_cols();
        match query {
            Query::Row(row_id) => match self.training.row_of(row_id) {
                Some(r) => Ok(cols.map(|c| self.predict_at(r, c)).collect()),
                None => Ok(self
                    .training
                    .col_labels()
                    .iter()
                    .map(|c| self.fallback(row_id, c))
                    .collect()),
            },
            Query::Profile(profile) => {
                const PSEUDO: &str = "<profile>";
                let to_prediction = |c: usize, est: Option<(f64, usize)>| {
                    let col_id = &self.training.col_labels()[c];
                    match est {
                        Some((estimate, neighbor_count)) => Prediction {
                            row_id: PSEUDO.into(),
                            col_id: col_id.clone(),
                            estimate,
                            neighbor_count,
                            fallback: false,
                        },
                        None => self.fallback(PSEUDO, col_id),
                    }
                };
                match self.config.mode {
                    CfMode::UserBased => {
                        let weights = self.fold_in(profile)?;
                        Ok(cols
                            .map(|c| to_prediction(c, self.estimate(&self.other_view[c], |j| weights[j])))
                            .collect())
                    }
                    CfMode::ItemBased => {
                        // item neighbours come straight from the profile's own ratings
                        let sparse = self.sparse_profile(profile)?;
                        Ok(cols
                            .map(|c| to_prediction(c, self.estimate(&sparse, |j| self.sim.get(c, j))))
                            .collect())
                    }
                }
            }
        }
    }

    /// Top-`n` columns by predicted rating, skipping `exclude`.
    pub fn top_n(&self, query: Query<'_>, n: usize, exclude: &HashSet<String>) -> Result<RecommendationList> {
        let predictions = self.predict_all(query)?;
        Ok(RecommendationList::from_scores(
            predictions.into_iter().map(|p| (p.col_id, p.estimate)),
            n,
            exclude,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(values: &[Vec<f64>], config: KnnConfig) -> SimilarityModel {
        let rows: Vec<String> = (0..values.len()).map(|i| format!("r{i}")).collect();
        let cols: Vec<String> = (0..values[0].len()).map(|i| format!("c{i}")).collect();
        let m = RatingMatrix::from_dense(&rows, &cols, values).unwrap();
        build_similarity_model(m, config, Execution::Sequential).unwrap()
    }

    #[test]
    fn singleton_self_similarity() {
        let m = model(&[vec![1.0]], KnnConfig::default());
        assert_eq!(m.similarities().get(0, 0), 1.0);
        assert_eq!(m.axis_labels(), ["r0"]);
    }

    #[test]
    fn unanimous_neighbours() {
        let m = model(
            &[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]],
            KnnConfig::new(Similarity::Msd, CfMode::UserBased, 1, 2).unwrap(),
        );
        let p = m.predict("r0", "c0").unwrap();
        assert_eq!(p.estimate, 1.0);
        assert_eq!(p.neighbor_count, 2);
        assert!(!p.fallback);
    }

    #[test]
    fn support_starvation_falls_back() {
        let m = model(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            KnnConfig::new(Similarity::Msd, CfMode::UserBased, 5, 3).unwrap(),
        );
        let p = m.predict("r0", "c1").unwrap();
        assert!(p.fallback);
        assert_eq!(p.estimate, 0.5);
    }

    #[test]
    fn unknown_entities() {
        let m = model(&[vec![1.0, 0.0]], KnnConfig::default());
        assert!(matches!(m.predict("zz", "yy"), Err(Error::UnknownEntity { .. })));
        assert!(m.predict("zz", "c0").unwrap().fallback);
        assert!(m.predict("r0", "yy").unwrap().fallback);
    }

    #[test]
    fn empty_matrix_rejected() {
        let m = RatingMatrix::new(vec!["a".into()], vec!["x".into()], [], Default::default()).unwrap();
        assert!(matches!(
            build_similarity_model(m, KnnConfig::default(), Execution::Sequential),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn top_n_degenerate_cases() {
        let m = model(&[vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], KnnConfig::default());
        assert!(m.top_n(Query::Row("r0"), 0, &HashSet::new()).unwrap().is_empty());
        let all: HashSet<String> = m.training().col_labels().iter().cloned().collect();
        assert!(m.top_n(Query::Row("r0"), 5, &all).unwrap().is_empty());
    }

    #[test]
    fn fold_in_requires_user_mode_and_overlap() {
        let user = model(&[vec![1.0, 0.0]], KnnConfig::default());
        let unknown: BTreeMap<String, f64> = [("nope".to_string(), 1.0)].into();
        assert!(matches!(user.fold_in(&unknown), Err(Error::InsufficientOverlap)));
        let item = model(
            &[vec![1.0, 0.0]],
            KnnConfig::new(Similarity::Msd, CfMode::ItemBased, 1, 5).unwrap(),
        );
        let known: BTreeMap<String, f64> = [("c0".to_string(), 1.0)].into();
        assert!(matches!(item.fold_in(&known), Err(Error::ModelState(_))));
        // item-based profiles are still rankable
        assert_eq!(item.top_n(Query::Profile(&known), 5, &HashSet::new()).unwrap().len(), 2);
    }

    #[test]
    fn ranking_ties_by_id() {
        let list = RecommendationList::from_scores([("b", 0.5), ("a", 0.5), ("c", 0.9)], 3, &HashSet::new());
        let items: Vec<&str> = list.items().collect();
        assert_eq!(items, ["c", "a", "b"]);
    }
}
