//! Recorded HTTP GET layer shared by the web-API clients (protein atlas,
//! PubMed). Live responses can be captured into a recordings directory
//! keyed by URL hash; replay mode answers from that directory and has no
//! network client at all.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use crate::error::LlmError;

pub trait HttpGet: Send + Sync {
    fn get(&self, url: &str) -> Result<String, LlmError>;
}

fn url_hash(url: &str) -> String {
    hex::encode(Sha256::digest(url.as_bytes()))
}

pub struct LiveHttp {
    client: reqwest::blocking::Client,
}

impl LiveHttp {
    pub fn new() -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Default for LiveHttp {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpGet for LiveHttp {
    fn get(&self, url: &str) -> Result<String, LlmError> {
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| LlmError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Provider {
                status: status.as_u16(),
                body: text,
            });
        }
        Ok(text)
    }
}

/// Replays responses from `<dir>/<sha256(url)>.http`.
pub struct ReplayHttp {
    dir: PathBuf,
}

impl ReplayHttp {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
        }
    }

    pub fn recording_path(dir: &Path, url: &str) -> PathBuf {
        dir.join(format!("{}.http", url_hash(url)))
    }
}

impl HttpGet for ReplayHttp {
    fn get(&self, url: &str) -> Result<String, LlmError> {
        let path = Self::recording_path(&self.dir, url);
        std::fs::read_to_string(&path).map_err(|_| LlmError::ReplayMiss {
            hash: url_hash(url),
            template: "http".into(),
            prompt: url.to_string(),
        })
    }
}

/// Wraps a live client and writes every response into the recordings dir.
pub struct RecordingHttp<T: HttpGet> {
    inner: T,
    dir: PathBuf,
}

impl<T: HttpGet> RecordingHttp<T> {
    pub fn new(inner: T, dir: &Path) -> Result<Self, LlmError> {
        std::fs::create_dir_all(dir).map_err(|e| LlmError::Store(e.to_string()))?;
        Ok(Self {
            inner,
            dir: dir.to_path_buf(),
        })
    }
}

impl<T: HttpGet> HttpGet for RecordingHttp<T> {
    fn get(&self, url: &str) -> Result<String, LlmError> {
        let body = self.inner.get(url)?;
        std::fs::write(ReplayHttp::recording_path(&self.dir, url), &body)
            .map_err(|e| LlmError::Store(e.to_string()))?;
        Ok(body)
    }
}

/// Fails on any request and counts attempts; the offline-proof counterpart
/// of [`crate::transport::FaultTransport`].
#[derive(Default)]
pub struct FaultHttp {
    pub attempts: AtomicUsize,
}

impl HttpGet for FaultHttp {
    fn get(&self, _url: &str) -> Result<String, LlmError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(LlmError::Network(
            "network use attempted in an offline context".into(),
        ))
    }
}

/// Seeds a replay directory with a canned body for `url`; used to commit
/// recorded fixtures.
pub fn write_recording(dir: &Path, url: &str, body: &str) -> Result<(), LlmError> {
    std::fs::create_dir_all(dir).map_err(|e| LlmError::Store(e.to_string()))?;
    std::fs::write(ReplayHttp::recording_path(dir, url), body)
        .map_err(|e| LlmError::Store(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_recording(dir.path(), "https://example.org/x", "{\"ok\":true}").unwrap();
        let replay = ReplayHttp::new(dir.path());
        assert_eq!(replay.get("https://example.org/x").unwrap(), "{\"ok\":true}");
        assert!(matches!(
            replay.get("https://example.org/miss").unwrap_err(),
            LlmError::ReplayMiss { .. }
        ));
    }

    #[test]
    fn fault_http_counts() {
        let f = FaultHttp::default();
        assert!(f.get("https://example.org").is_err());
        assert_eq!(f.attempts.load(Ordering::SeqCst), 1);
    }
}
