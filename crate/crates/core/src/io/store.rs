//! A flat directory of JSON files with an `index.json` mapping ids to files.
//!
//! Ids come from a counter kept in the index, so they never repeat within a
//! store and survive restarts. Every mutation takes the root's writer lock,
//! writes through a temporary file and renames it into place, data file
//! first and index last. Readers share the lock.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::json::{parse_instance_document, render_instance_document, InstanceDocument};
use super::IoError;
use crate::scenario::Scenario;

const INDEX_FILE: &str = "index.json";
const INSTANCE_DIR: &str = "instances";
const SCENARIO_DIR: &str = "scenarios";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown {kind} id {id:?}")]
    NotFound { kind: &'static str, id: String },
    #[error("scenario does not name a base instance")]
    MissingBase,
    #[error("unknown base instance {0:?}")]
    UnknownBase(String),
    #[error("store index is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Document(#[from] IoError),
}

impl StoreError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        StoreError::Document(IoError::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredScenario {
    pub file: String,
    pub base: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Index {
    next_id: u64,
    instances: BTreeMap<String, String>,
    scenarios: BTreeMap<String, StoredScenario>,
}

fn lock_for(root: &Path) -> Arc<RwLock<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<RwLock<()>>>>> = OnceLock::new();
    let mut map = LOCKS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(root.to_path_buf()).or_default().clone()
}

#[derive(Debug, Clone)]
pub struct ScenarioStore {
    root: PathBuf,
    lock: Arc<RwLock<()>>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| StoreError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| StoreError::io(path, e.error))?;
    Ok(())
}

impl ScenarioStore {
    /// Opens the store at `root`, creating the directory layout if needed.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref();
        for dir in [root.to_path_buf(), root.join(INSTANCE_DIR), root.join(SCENARIO_DIR)] {
            std::fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        }
        let root = root.canonicalize().map_err(|e| StoreError::io(root, e))?;
        let store = Self {
            lock: lock_for(&root),
            root,
        };
        {
            let _guard = store.lock.write().unwrap_or_else(|e| e.into_inner());
            if !store.root.join(INDEX_FILE).exists() {
                store.save_index(&Index::default())?;
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn load_index(&self) -> Result<Index, StoreError> {
        let path = self.root.join(INDEX_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt(e.to_string()))
    }

    fn save_index(&self, index: &Index) -> Result<(), StoreError> {
        let text = serde_json::to_string_pretty(index).expect("index serializes");
        write_atomic(&self.root.join(INDEX_FILE), text.as_bytes())
    }

    fn read(&self, relative: &str) -> Result<String, StoreError> {
        let path = self.root.join(relative);
        std::fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))
    }

    /// Writes `bytes` under a fresh id and records it in the index via
    /// `record`.
    fn insert(
        &self,
        prefix: &str,
        dir: &str,
        bytes: &[u8],
        record: impl FnOnce(&mut Index, String, String),
    ) -> Result<String, StoreError> {
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        let mut index = self.load_index()?;
        index.next_id += 1;
        let id = format!("{prefix}-{}", index.next_id);
        let relative = format!("{dir}/{id}.json");
        let path = self.root.join(&relative);
        write_atomic(&path, bytes)?;
        record(&mut index, id.clone(), relative);
        if let Err(e) = self.save_index(&index) {
            let _ = std::fs::remove_file(&path);
            return Err(e);
        }
        Ok(id)
    }

    pub fn put_instance(&self, doc: &InstanceDocument) -> Result<String, StoreError> {
        let text = render_instance_document(doc);
        self.insert("inst", INSTANCE_DIR, text.as_bytes(), |index, id, file| {
            index.instances.insert(id, file);
        })
    }

    pub fn get_instance(&self, id: &str) -> Result<InstanceDocument, StoreError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let index = self.load_index()?;
        let file = index.instances.get(id).ok_or_else(|| StoreError::NotFound {
            kind: "instance",
            id: id.to_string(),
        })?;
        Ok(parse_instance_document(&self.read(file)?)?)
    }

    pub fn list_instances(&self) -> Result<Vec<String>, StoreError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        Ok(self.load_index()?.instances.into_keys().collect())
    }

    /// Stores `scenario` under a new id. Its `base_instance` must name an
    /// instance already in the store.
    pub fn put_scenario(&self, scenario: &Scenario) -> Result<String, StoreError> {
        let base = scenario.base_instance.clone().ok_or(StoreError::MissingBase)?;
        {
            let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
            if !self.load_index()?.instances.contains_key(&base) {
                return Err(StoreError::UnknownBase(base));
            }
        }
        let text = serde_json::to_string_pretty(scenario).expect("scenario serializes");
        self.insert("scn", SCENARIO_DIR, text.as_bytes(), |index, id, file| {
            index.scenarios.insert(id, StoredScenario { file, base });
        })
    }

    pub fn get_scenario(&self, id: &str) -> Result<Scenario, StoreError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let index = self.load_index()?;
        let entry = index.scenarios.get(id).ok_or_else(|| StoreError::NotFound {
            kind: "scenario",
            id: id.to_string(),
        })?;
        serde_json::from_str(&self.read(&entry.file)?)
            .map_err(|e| StoreError::Document(IoError::json(Some(&entry.file), &e)))
    }

    /// Scenario ids, optionally restricted to one base instance.
    pub fn list_scenarios(&self, base: Option<&str>) -> Result<Vec<String>, StoreError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        Ok(self
            .load_index()?
            .scenarios
            .into_iter()
            .filter(|(_, s)| base.is_none_or(|b| s.base == b))
            .map(|(id, _)| id)
            .collect())
    }

    pub fn delete_scenario(&self, id: &str) -> Result<(), StoreError> {
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        let mut index = self.load_index()?;
        let entry = index.scenarios.remove(id).ok_or_else(|| StoreError::NotFound {
            kind: "scenario",
            id: id.to_string(),
        })?;
        self.save_index(&index)?;
        let path = self.root.join(&entry.file);
        std::fs::remove_file(&path).map_err(|e| StoreError::io(&path, e))
    }

    /// Data files on disk that the index does not know about, and index
    /// entries whose file is missing. Both lists are empty in a consistent
    /// store.
    pub fn consistency_check(&self) -> Result<(Vec<String>, Vec<String>), StoreError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let index = self.load_index()?;
        let mut known: Vec<&str> = index.instances.values().map(String::as_str).collect();
        known.extend(index.scenarios.values().map(|s| s.file.as_str()));

        let mut on_disk = Vec::new();
        for dir in [INSTANCE_DIR, SCENARIO_DIR] {
            let path = self.root.join(dir);
            for entry in std::fs::read_dir(&path).map_err(|e| StoreError::io(&path, e))? {
                let entry = entry.map_err(|e| StoreError::io(&path, e))?;
                on_disk.push(format!("{dir}/{}", entry.file_name().to_string_lossy()));
            }
        }
        let orphans = on_disk.iter().filter(|f| !known.contains(&f.as_str())).cloned().collect();
        let missing = known
            .iter()
            .filter(|f| !on_disk.iter().any(|d| d == *f))
            .map(|f| f.to_string())
            .collect();
        Ok((orphans, missing))
    }
}
