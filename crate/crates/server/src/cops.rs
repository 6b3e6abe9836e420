//! Client for the Cops problem database, with a lifetime cache.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use parking_lot::Mutex;
use thiserror::Error;

pub const FETCH_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopsCacheEntry {
    pub number: u64,
    pub text: String,
    pub fetched_at: SystemTime,
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("problem numbers start at 1")]
    InvalidNumber,
    #[error("fetching {url}: HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("fetching {url}: empty body")]
    Empty { url: String },
    #[error("fetching {url}: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
}

pub struct CopsClient {
    http: reqwest::Client,
    base_url: String,
    path_template: String,
    cache: Mutex<HashMap<u64, CopsCacheEntry>>,
    inflight: Mutex<HashMap<u64, Arc<tokio::sync::Mutex<()>>>>,
}

impl CopsClient {
    pub fn new(base_url: impl Into<String>, path_template: impl Into<String>) -> Self {
        let http = reqwest::Client::builder()
            .timeout(FETCH_TIMEOUT)
            .build()
            .expect("HTTP client configuration is static");
        CopsClient {
            http,
            base_url: base_url.into(),
            path_template: path_template.into(),
            cache: Mutex::new(HashMap::new()),
            inflight: Mutex::new(HashMap::new()),
        }
    }

    pub fn url_for(&self, number: u64) -> String {
        let path = self.path_template.replace("{number}", &number.to_string());
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }

    pub fn cached(&self, number: u64) -> Option<CopsCacheEntry> {
        self.cache.lock().get(&number).cloned()
    }

    /// Problem text for `number`: from the cache, or fetched once and cached.
    /// Concurrent calls for the same number share a single request. Failures
    /// are never cached.
    pub async fn fetch(&self, number: u64) -> Result<String, FetchError> {
        if number == 0 {
            return Err(FetchError::InvalidNumber);
        }
        if let Some(e) = self.cached(number) {
            return Ok(e.text);
        }
        let slot = Arc::clone(self.inflight.lock().entry(number).or_default());
        let _flight = slot.lock().await;
        if let Some(e) = self.cached(number) {
            return Ok(e.text);
        }
        let result = self.download(number).await;
        if let Ok(text) = &result {
            self.cache.lock().entry(number).or_insert_with(|| CopsCacheEntry {
                number,
                text: text.clone(),
                fetched_at: SystemTime::now(),
            });
        }
        self.inflight.lock().remove(&number);
        result
    }

    async fn download(&self, number: u64) -> Result<String, FetchError> {
        let url = self.url_for(number);
        let transport = |source| FetchError::Transport { url: url.clone(), source };
        let resp = self.http.get(&url).send().await.map_err(transport)?;
        let status = resp.status();
        if status != reqwest::StatusCode::OK {
            return Err(FetchError::Status { url, status: status.as_u16() });
        }
        let text = resp.text().await.map_err(transport)?;
        if text.trim().is_empty() {
            return Err(FetchError::Empty { url });
        }
        Ok(text)
    }
}
