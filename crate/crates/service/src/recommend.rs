//! The three recommendation flows over loaded similarity models.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use resyduo_core::projection::normalize_tag;
use resyduo_core::{Query, RecommendationList, SimilarityModel};

use crate::error::{Result, ServiceError};

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(ServiceError::InvalidRequest("n must be at least 1".into()));
    }
    Ok(())
}

/// Mean of the per-row prediction vectors of `rows`, ranked. Rows are
/// visited in label order so the sum does not depend on input order.
fn mean_of_rows(model: &SimilarityModel, rows: &BTreeSet<String>, n: usize) -> Result<RecommendationList> {
    let cols = model.training().col_labels();
    let mut sum = vec![0.0; cols.len()];
    for row in rows {
        for (acc, p) in sum.iter_mut().zip(model.predict_all(Query::Row(row))?) {
            *acc += p.estimate;
        }
    }
    let count = rows.len() as f64;
    Ok(RecommendationList::from_scores(
        cols.iter().zip(sum).map(|(c, s)| (c.as_str(), s / count)),
        n,
        &HashSet::new(),
    ))
}

fn split_known<'a>(
    keys: impl IntoIterator<Item = String>,
    known: impl Fn(&str) -> bool + 'a,
) -> (BTreeSet<String>, Vec<String>) {
    let mut hit = BTreeSet::new();
    let mut miss = Vec::new();
    for key in keys {
        if known(&key) {
            hit.insert(key);
        } else if !miss.contains(&key) {
            miss.push(key);
        }
    }
    (hit, miss)
}

/// Type I: components for a set of tags, averaged over the known tags.
pub fn recommend_type1(t_model: &SimilarityModel, tags: &[String], n: usize) -> Result<RecommendationList> {
    check_n(n)?;
    if tags.is_empty() {
        return Err(ServiceError::InvalidRequest("at least one tag is required".into()));
    }
    let training = t_model.training();
    let (known, unknown) = split_known(tags.iter().map(|t| normalize_tag(t)), |t| training.row_of(t).is_some());
    if known.is_empty() {
        return Err(ServiceError::UnknownTags(unknown));
    }
    mean_of_rows(t_model, &known, n)
}

/// Type II: components from projects similar to a pseudo-project holding
/// `components`. The inputs themselves are never recommended.
pub fn recommend_type2(p_model: &SimilarityModel, components: &[String], n: usize) -> Result<RecommendationList> {
    check_n(n)?;
    if components.is_empty() {
        return Err(ServiceError::InvalidRequest("at least one component is required".into()));
    }
    let training = p_model.training();
    let profile: BTreeMap<String, f64> = components
        .iter()
        .filter(|c| training.col_of(c).is_some())
        .map(|c| (c.clone(), training.scale().max))
        .collect();
    if profile.is_empty() {
        return Err(ServiceError::InsufficientOverlap);
    }
    let exclude: HashSet<String> = components.iter().cloned().collect();
    Ok(p_model.top_n(Query::Profile(&profile), n, &exclude)?)
}

/// Type III: libraries for a set of components, averaged over the known
/// components.
pub fn recommend_type3(l_model: &SimilarityModel, components: &[String], n: usize) -> Result<RecommendationList> {
    check_n(n)?;
    if components.is_empty() {
        return Err(ServiceError::InvalidRequest("at least one component is required".into()));
    }
    let training = l_model.training();
    let (known, unknown) = split_known(components.iter().cloned(), |c| training.row_of(c).is_some());
    if known.is_empty() {
        return Err(ServiceError::UnknownComponents(unknown));
    }
    mean_of_rows(l_model, &known, n)
}
