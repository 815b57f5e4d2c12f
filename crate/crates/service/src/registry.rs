//! Published models, kept on disk and swapped in atomically.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use log::warn;
use propagate_core::classify::{self, ModelKind, TrainedModel};
use serde::Serialize;

use crate::error::{core, ServiceError};

pub struct ModelRegistry {
    dir: PathBuf,
    models: RwLock<HashMap<String, Arc<TrainedModel>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub id: String,
    pub kind: ModelKind,
    pub setting: String,
    pub features: usize,
    pub dataset: String,
}

impl ModelSummary {
    pub fn of(m: &TrainedModel) -> Self {
        ModelSummary {
            id: m.id.clone(),
            kind: m.kind(),
            setting: m.spec.imbalance.setting(),
            features: m.mask.len(),
            dataset: m.metadata.dataset.clone(),
        }
    }
}

impl ModelRegistry {
    /// Loads every model file in `dir`, creating the directory if needed.
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(dir).map_err(|source| ServiceError::Io { path: dir.to_path_buf(), source })?;
        let mut models = HashMap::new();
        let entries = std::fs::read_dir(dir).map_err(|source| ServiceError::Io { path: dir.to_path_buf(), source })?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "json") {
                match classify::load_model(&path) {
                    Ok(m) => {
                        models.insert(m.id.clone(), Arc::new(m));
                    }
                    Err(e) => warn!("skipping model file {}: {e}", path.display()),
                }
            }
        }
        Ok(ModelRegistry { dir: dir.to_path_buf(), models: RwLock::new(models) })
    }

    /// Validates and stores a model file's contents; publishing the same
    /// model twice is a no-op.
    pub fn publish(&self, bytes: &[u8]) -> Result<Arc<TrainedModel>, ServiceError> {
        let model = classify::model_from_slice(bytes).map_err(core)?;
        if let Some(existing) = self.get(&model.id) {
            return Ok(existing);
        }
        classify::save_model(&model, &self.dir.join(format!("{}.json", model.id))).map_err(core)?;
        let model = Arc::new(model);
        self.models.write().expect("registry lock").entry(model.id.clone()).or_insert_with(|| model.clone());
        Ok(model)
    }

    pub fn get(&self, id: &str) -> Option<Arc<TrainedModel>> {
        self.models.read().expect("registry lock").get(id).cloned()
    }
}
