//! Loading the persisted model set and the component catalog from a data
//! directory.
//!
//! Layout: `{T,P,L}.mtx` training matrices next to `{T,P,L}.model`
//! similarity files (any subset), plus an optional `corpus.json` used for
//! component display names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use resyduo_core::persist::load_model;
use resyduo_core::{parse_corpus, ProjectionKind, RatingMatrix, SimilarityModel};

use crate::error::{Result, ServiceError};

pub fn matrix_path(dir: &Path, kind: ProjectionKind) -> PathBuf {
    dir.join(format!("{kind}.mtx"))
}

pub fn model_path(dir: &Path, kind: ProjectionKind) -> PathBuf {
    dir.join(format!("{kind}.model"))
}

pub fn corpus_path(dir: &Path) -> PathBuf {
    dir.join("corpus.json")
}

#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub t: Option<Arc<SimilarityModel>>,
    pub p: Option<Arc<SimilarityModel>>,
    pub l: Option<Arc<SimilarityModel>>,
}

impl ModelSet {
    pub fn get(&self, kind: ProjectionKind) -> Option<&Arc<SimilarityModel>> {
        match kind {
            ProjectionKind::T => self.t.as_ref(),
            ProjectionKind::P => self.p.as_ref(),
            ProjectionKind::L => self.l.as_ref(),
        }
    }

    pub fn require(&self, kind: ProjectionKind) -> Result<&SimilarityModel> {
        self.get(kind).map(Arc::as_ref).ok_or(ServiceError::ModelUnavailable(kind))
    }

    pub fn set(&mut self, kind: ProjectionKind, model: SimilarityModel) {
        let slot = match kind {
            ProjectionKind::T => &mut self.t,
            ProjectionKind::P => &mut self.p,
            ProjectionKind::L => &mut self.l,
        };
        *slot = Some(Arc::new(model));
    }

    /// Loads every model present in `dir`. A model file without its
    /// training matrix is an error; a missing pair is simply skipped.
    pub fn load_dir(dir: &Path, force: bool) -> Result<Self> {
        let mut set = ModelSet::default();
        for kind in ProjectionKind::ALL {
            let model = model_path(dir, kind);
            if !model.exists() {
                continue;
            }
            let matrix = RatingMatrix::load(&matrix_path(dir, kind))?;
            set.set(kind, load_model(&model, matrix, force)?);
            tracing::info!(%kind, path = %model.display(), "loaded model");
        }
        Ok(set)
    }
}

/// Tag and component vocabularies served to the UI.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    pub tags: Vec<String>,
    /// Component id → display name.
    pub components: BTreeMap<String, String>,
}

impl Catalog {
    /// Tags are the T-model rows. Components are the union of the T and P
    /// columns and the L rows, named from `names` where available.
    pub fn from_models(models: &ModelSet, names: &BTreeMap<String, String>) -> Self {
        let tags = models
            .t
            .as_ref()
            .map(|m| m.training().row_labels().to_vec())
            .unwrap_or_default();
        let mut ids: Vec<&String> = Vec::new();
        if let Some(t) = &models.t {
            ids.extend(t.training().col_labels());
        }
        if let Some(p) = &models.p {
            ids.extend(p.training().col_labels());
        }
        if let Some(l) = &models.l {
            ids.extend(l.training().row_labels());
        }
        let components = ids
            .into_iter()
            .map(|id| (id.clone(), names.get(id).cloned().unwrap_or_else(|| id.clone())))
            .collect();
        Catalog { tags, components }
    }

    pub fn tags_with_prefix(&self, prefix: &str) -> Vec<String> {
        let prefix = prefix.trim().to_lowercase();
        self.tags.iter().filter(|t| t.starts_with(&prefix)).cloned().collect()
    }

    /// Components whose id or name starts with `prefix`, case-insensitively.
    pub fn components_with_prefix(&self, prefix: &str) -> Vec<(String, String)> {
        let prefix = prefix.trim().to_lowercase();
        self.components
            .iter()
            .filter(|(id, name)| id.to_lowercase().starts_with(&prefix) || name.to_lowercase().starts_with(&prefix))
            .map(|(id, name)| (id.clone(), name.clone()))
            .collect()
    }
}

/// Component display names from `dir/corpus.json`, or none if absent.
pub fn load_component_names(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = corpus_path(dir);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    Ok(parse_corpus(&std::fs::read(path)?)?.component_names())
}
