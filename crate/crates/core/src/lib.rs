//! Collaborative-filtering engine recommending hardware components and
//! software libraries for Arduino-style projects.
//!
//! The pipeline runs corpus → projection ([`projection`]) → cut-off →
//! KNN similarity model ([`knn`]) → cross-validated evaluation
//! ([`evaluation`]) and grid search ([`tuning`]). Trained models persist
//! through [`persist`].

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod knn;
pub mod matrix;
pub mod persist;
pub mod projection;
pub mod similarity;
pub mod tuning;

use std::io::Write;
use std::path::Path;

pub use corpus::{generate_synthetic_corpus, parse_corpus, ComponentRef, Corpus, ProjectRecord, SynthParams};
pub use error::{Error, Result};
pub use evaluation::{accuracy_metrics, cross_validate, error_metrics, kfold_split, CvSettings, EvaluationReport};
pub use exec::Execution;
pub use knn::{build_similarity_model, CfMode, KnnConfig, Prediction, Query, RecommendationList, SimilarityModel};
pub use matrix::{RatingMatrix, RatingScale};
pub use projection::{apply_cutoff, build_projection, CutoffConfig, ProjectionKind};
pub use similarity::{compute_similarity, Similarity};
pub use tuning::{enumerate_grid, grid_search, Criterion, GridSpec, TuningResult};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place,
/// so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
