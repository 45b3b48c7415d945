//! Project drafts persisted as a single JSON file.
//!
//! Readers take an `Arc` snapshot and never block on writers; writers are
//! serialized, rewrite the file atomically and then publish a new snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectDraft {
    pub id: String,
    pub name: String,
    pub selected_components: BTreeSet<String>,
    pub sketch: String,
    /// Milliseconds since the Unix epoch.
    pub updated_at: u64,
}

/// Client-supplied draft fields; absent fields keep their current value on
/// update.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftInput {
    pub name: Option<String>,
    pub selected_components: Option<BTreeSet<String>>,
    pub sketch: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StoreFile {
    next_id: u64,
    drafts: Vec<ProjectDraft>,
}

#[derive(Debug, Clone, Default)]
struct State {
    next_id: u64,
    drafts: BTreeMap<String, ProjectDraft>,
}

pub struct ProjectStore {
    path: Option<PathBuf>,
    vocabulary: BTreeSet<String>,
    snapshot: RwLock<Arc<State>>,
    writer: Mutex<()>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl ProjectStore {
    /// A store kept only in memory.
    pub fn in_memory(vocabulary: BTreeSet<String>) -> Self {
        Self {
            path: None,
            vocabulary,
            snapshot: RwLock::new(Arc::default()),
            writer: Mutex::new(()),
        }
    }

    /// Opens (or starts) the store file at `path`.
    pub fn open(path: &Path, vocabulary: BTreeSet<String>) -> Result<Self> {
        let state = if path.exists() {
            let file: StoreFile = serde_json::from_slice(&std::fs::read(path)?)
                .map_err(|e| ServiceError::InvalidRequest(format!("corrupt project store: {e}")))?;
            State {
                next_id: file.next_id,
                drafts: file.drafts.into_iter().map(|d| (d.id.clone(), d)).collect(),
            }
        } else {
            State::default()
        };
        Ok(Self {
            path: Some(path.to_path_buf()),
            vocabulary,
            snapshot: RwLock::new(Arc::new(state)),
            writer: Mutex::new(()),
        })
    }

    fn current(&self) -> Arc<State> {
        self.snapshot.read().expect("store lock poisoned").clone()
    }

    pub fn list(&self) -> Vec<ProjectDraft> {
        self.current().drafts.values().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Result<ProjectDraft> {
        self.current()
            .drafts
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    fn validate(&self, components: &BTreeSet<String>) -> Result<()> {
        let unknown: Vec<String> = components.difference(&self.vocabulary).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ServiceError::Validation(unknown))
        }
    }

    /// Applies `change` to a copy of the state, persists it and publishes it.
    fn write<T>(&self, change: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let _guard = self.writer.lock().expect("store lock poisoned");
        let mut next = (*self.current()).clone();
        let out = change(&mut next)?;
        if let Some(path) = &self.path {
            let file = StoreFile {
                next_id: next.next_id,
                drafts: next.drafts.values().cloned().collect(),
            };
            let bytes = serde_json::to_vec_pretty(&file).expect("drafts are serializable");
            resyduo_core::atomic_write(path, &bytes)?;
        }
        *self.snapshot.write().expect("store lock poisoned") = Arc::new(next);
        Ok(out)
    }

    pub fn create(&self, input: DraftInput) -> Result<ProjectDraft> {
        let components = input.selected_components.unwrap_or_default();
        self.validate(&components)?;
        self.write(|state| {
            state.next_id += 1;
            let draft = ProjectDraft {
                id: format!("d{:06}", state.next_id),
                name: input.name.unwrap_or_default(),
                selected_components: components,
                sketch: input.sketch.unwrap_or_default(),
                updated_at: now_ms(),
            };
            state.drafts.insert(draft.id.clone(), draft.clone());
            Ok(draft)
        })
    }

    /// Last write wins; `updated_at` never moves backwards.
    pub fn update(&self, id: &str, input: DraftInput) -> Result<ProjectDraft> {
        if let Some(components) = &input.selected_components {
            self.validate(components)?;
        }
        self.write(|state| {
            let draft = state
                .drafts
                .get_mut(id)
                .ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
            if let Some(name) = input.name {
                draft.name = name;
            }
            if let Some(components) = input.selected_components {
                draft.selected_components = components;
            }
            if let Some(sketch) = input.sketch {
                draft.sketch = sketch;
            }
            draft.updated_at = now_ms().max(draft.updated_at + 1);
            Ok(draft.clone())
        })
    }

    pub fn delete(&self, id: &str) -> Result<()> {
        self.write(|state| {
            state
                .drafts
                .remove(id)
                .map(|_| ())
                .ok_or_else(|| ServiceError::NotFound(id.to_string()))
        })
    }

    pub fn sketch(&self, id: &str) -> Result<String> {
        Ok(self.get(id)?.sketch)
    }

    pub fn put_sketch(&self, id: &str, sketch: String) -> Result<ProjectDraft> {
        self.update(
            id,
            DraftInput {
                sketch: Some(sketch),
                ..DraftInput::default()
            },
        )
    }
}
