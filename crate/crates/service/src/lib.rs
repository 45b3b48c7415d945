//! HTTP service for the three recommendation types, model persistence and
//! the project draft store used by the web editor.

pub mod api;
pub mod error;
pub mod models;
pub mod recommend;
pub mod store;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

pub use api::{router, AppState};
pub use error::{Result, ServiceError};
pub use models::{Catalog, ModelSet};
pub use recommend::{recommend_type1, recommend_type2, recommend_type3};
pub use resyduo_core::persist::{load_model, save_model};
pub use store::{DraftInput, ProjectDraft, ProjectStore};

impl AppState {
    /// Loads models, catalog and draft store from `data_dir`.
    pub fn from_data_dir(data_dir: &Path, force: bool) -> Result<Self> {
        let models = ModelSet::load_dir(data_dir, force)?;
        let names = models::load_component_names(data_dir)?;
        Self::new(models, &names, Some(&data_dir.join("projects.json")))
    }

    /// Draft vocabulary is the P model's component columns.
    pub fn new(
        models: ModelSet,
        names: &std::collections::BTreeMap<String, String>,
        store_path: Option<&Path>,
    ) -> Result<Self> {
        let catalog = Catalog::from_models(&models, names);
        let vocabulary = models
            .p
            .as_ref()
            .map(|p| p.training().col_labels().iter().cloned().collect())
            .unwrap_or_default();
        let store = match store_path {
            Some(path) => ProjectStore::open(path, vocabulary)?,
            None => ProjectStore::in_memory(vocabulary),
        };
        Ok(Self {
            models: Arc::new(models),
            catalog: Arc::new(catalog),
            store: Arc::new(store),
        })
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
