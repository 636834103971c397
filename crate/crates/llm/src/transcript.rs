//! Append-only JSONL store of request/response transcripts for record and
//! replay. Requests are addressed by a platform-stable SHA-256 hash of the
//! canonical request (template id + normalized rendered text + fixed-order
//! model params).

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LlmError;
use crate::message::ModelParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub hash: String,
    pub template_id: String,
    pub request_text: String,
    pub response: String,
    pub model: String,
    /// Wall-clock capture time; informational only, never hashed.
    pub timestamp: String,
}

/// Normalizes line endings so hashes match across platforms.
pub fn normalize_text(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Canonical request hash. Params serialize in declared field order, so map
/// iteration order can never leak in.
pub fn request_hash(template_id: &str, rendered: &str, params: &ModelParams) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        template_id: &'a str,
        text: String,
        model: &'a str,
        temperature: f64,
        max_tokens: u32,
        seed: Option<u64>,
    }
    let canonical = Canonical {
        template_id,
        text: normalize_text(rendered),
        model: &params.model,
        temperature: params.temperature,
        max_tokens: params.max_tokens,
        seed: params.seed,
    };
    let bytes = serde_json::to_vec(&canonical).expect("canonical request serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// JSONL-backed transcript store. Appends are serialized behind a mutex.
pub struct RecordingStore {
    path: PathBuf,
    index: Mutex<HashMap<String, String>>,
    file: Mutex<Option<std::fs::File>>,
}

impl RecordingStore {
    /// Opens a store for replay; the file must exist.
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        if !path.exists() {
            return Err(LlmError::Store(format!(
                "recordings file not found: {}",
                path.display()
            )));
        }
        let mut index = HashMap::new();
        let content =
            std::fs::read_to_string(path).map_err(|e| LlmError::Store(e.to_string()))?;
        for line in content.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let t: Transcript =
                serde_json::from_str(line).map_err(|e| LlmError::Store(e.to_string()))?;
            index.insert(t.hash.clone(), t.response);
        }
        Ok(Self {
            path: path.to_path_buf(),
            index: Mutex::new(index),
            file: Mutex::new(None),
        })
    }

    /// Opens (creating if needed) a store for recording.
    pub fn create(path: &Path) -> Result<Self, LlmError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| LlmError::Store(e.to_string()))?;
        }
        let mut index = HashMap::new();
        if path.exists() {
            let content =
                std::fs::read_to_string(path).map_err(|e| LlmError::Store(e.to_string()))?;
            for line in content.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                let t: Transcript =
                    serde_json::from_str(line).map_err(|e| LlmError::Store(e.to_string()))?;
                index.insert(t.hash.clone(), t.response);
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Store(e.to_string()))?;
        Ok(Self {
            path: path.to_path_buf(),
            index: Mutex::new(index),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn lookup(&self, hash: &str) -> Option<String> {
        self.index.lock().expect("store index lock").get(hash).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.lock().expect("store index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one transcript and indexes it. No-op rewrite protection is
    /// the caller's concern; identical hashes simply overwrite the index
    /// entry with the same response.
    pub fn append(&self, transcript: &Transcript) -> Result<(), LlmError> {
        let mut guard = self.file.lock().expect("store file lock");
        let file = guard
            .as_mut()
            .ok_or_else(|| LlmError::Store("store opened read-only".into()))?;
        let line =
            serde_json::to_string(transcript).map_err(|e| LlmError::Store(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| LlmError::Store(e.to_string()))?;
        file.flush().map_err(|e| LlmError::Store(e.to_string()))?;
        self.index
            .lock()
            .expect("store index lock")
            .insert(transcript.hash.clone(), transcript.response.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_across_line_endings() {
        let params = ModelParams::default();
        let a = request_hash("t", "line one\nline two", &params);
        let b = request_hash("t", "line one\r\nline two", &params);
        assert_eq!(a, b);
    }

    #[test]
    fn hash_changes_with_params() {
        let a = request_hash("t", "x", &ModelParams::default());
        let mut p = ModelParams::default();
        p.temperature = 0.7;
        let b = request_hash("t", "x", &p);
        assert_ne!(a, b);
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let store = RecordingStore::create(&path).unwrap();
        let t = Transcript {
            hash: "abc".into(),
            template_id: "t".into(),
            request_text: "req".into(),
            response: "resp".into(),
            model: "m".into(),
            timestamp: "now".into(),
        };
        store.append(&t).unwrap();
        drop(store);
        let replay = RecordingStore::open(&path).unwrap();
        assert_eq!(replay.lookup("abc").as_deref(), Some("resp"));
        assert_eq!(replay.lookup("missing"), None);
    }

    #[test]
    fn open_missing_file_fails() {
        assert!(RecordingStore::open(Path::new("/nonexistent/rec.jsonl")).is_err());
    }
}
