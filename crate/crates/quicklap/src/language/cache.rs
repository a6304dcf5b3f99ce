//! Append-only request/response log, one JSON record per line.
//!
//! Replay keys on the prompt hash; when a prompt appears more than once the
//! latest record wins, so a retried request replays its final response.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LanguageError, PromptPair};

#[derive(Debug, Serialize, Deserialize)]
pub struct CacheRecord {
    pub prompt_sha256: String,
    pub model: String,
    pub temperature: f64,
    pub response_text: String,
    pub timestamp: u64,
}

/// Stable key for a rendered prompt pair.
pub fn prompt_key(prompt: &PromptPair) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.system.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.user.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shared append handle; writes are serialized behind a mutex.
#[derive(Debug)]
pub struct LanguageCache {
    path: PathBuf,
    lock: Mutex<()>,
}

impl LanguageCache {
    pub fn new(path: PathBuf) -> Self {
        Self {
            path,
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(
        &self,
        prompt: &PromptPair,
        model: &str,
        temperature: f64,
        response_text: &str,
    ) -> Result<(), LanguageError> {
        let record = CacheRecord {
            prompt_sha256: prompt_key(prompt),
            model: model.to_string(),
            temperature,
            response_text: response_text.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| LanguageError::Cache(format!("serialize record: {e}")))?;
        let _guard = self.lock.lock().expect("cache lock poisoned");
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)
                    .map_err(|e| LanguageError::Cache(format!("create {}: {e}", dir.display())))?;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| LanguageError::Cache(format!("open {}: {e}", self.path.display())))?;
        writeln!(file, "{line}")
            .map_err(|e| LanguageError::Cache(format!("write {}: {e}", self.path.display())))
    }

    /// Load all records into a prompt-hash map (last record wins).
    pub fn load_map(path: &Path) -> Result<HashMap<String, String>, LanguageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LanguageError::Cache(format!("read {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: CacheRecord = serde_json::from_str(line).map_err(|e| {
                LanguageError::Cache(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            map.insert(record.prompt_sha256, record.response_text);
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_then_load_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = LanguageCache::new(path.clone());
        let prompt = PromptPair {
            system: "sys".into(),
            user: "user".into(),
        };
        cache.append(&prompt, "gpt-4o", 0.1, r#"{"gate":[1.0]}"#).unwrap();
        cache.append(&prompt, "gpt-4o", 0.1, r#"{"gate":[0.0]}"#).unwrap();
        let map = LanguageCache::load_map(&path).unwrap();
        // last record wins
        assert_eq!(map.get(&prompt_key(&prompt)).unwrap(), r#"{"gate":[0.0]}"#);
    }

    #[test]
    fn distinct_prompts_get_distinct_keys() {
        let a = PromptPair {
            system: "s".into(),
            user: "u1".into(),
        };
        let b = PromptPair {
            system: "s".into(),
            user: "u2".into(),
        };
        assert_ne!(prompt_key(&a), prompt_key(&b));
    }
}
