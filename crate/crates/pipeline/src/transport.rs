//! Ways of getting a response body for a chat request: a live HTTP
//! endpoint, a replay directory keyed by request digest, and a recorder
//! that fills such a directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use crate::chat::{ChatRequest, ResponseError};

pub trait ChatTransport: Send + Sync {
    /// Sends `request` and returns the raw response body.
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("no recorded response for request {digest} (expected {})", .path.display())]
    ReplayMiss { digest: String, path: PathBuf },
    #[error("no scripted reply: {0}")]
    ScriptMiss(String),
    #[error("endpoint answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("giving up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

impl TransportError {
    /// Errors that mean the network route itself is unusable.
    pub fn is_network(&self) -> bool {
        matches!(self, TransportError::Exhausted { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1` (attempts count from 1).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32
            .checked_shl(attempt.saturating_sub(1))
            .unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl HttpTransport {
    /// `api_key_env` names the environment variable holding the bearer token.
    pub fn new(
        url: &str,
        api_key_env: Option<&str>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, TransportError> {
        let api_key = match api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| TransportError::MissingApiKey(var.to_string()))?,
            ),
            None => None,
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Ok(HttpTransport {
            agent: ureq::Agent::new_with_config(config),
            url: url.to_string(),
            api_key,
            retry,
        })
    }

    fn attempt(&self, body: &[u8]) -> Result<(u16, String), ureq::Error> {
        let mut req = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body)?;
        let status = resp.status().as_u16();
        Ok((status, resp.body_mut().read_to_string()?))
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

impl ChatTransport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = request.body();
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            match self.attempt(&body) {
                Ok((status, text)) if (200..300).contains(&status) => return Ok(text),
                Ok((status, text)) if !retryable(status) => {
                    return Err(TransportError::Status { status, body: text })
                }
                Ok((status, text)) => last = format!("HTTP {status}: {text}"),
                Err(e) => last = e.to_string(),
            }
            log::warn!("chat request attempt {attempt} failed: {last}");
            if attempt < self.retry.max_attempts {
                thread::sleep(self.retry.delay(attempt));
            }
        }
        Err(TransportError::Exhausted {
            attempts: self.retry.max_attempts,
            last,
        })
    }
}

/// Directory of `<digest>.json` response bodies.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn put(&self, digest: &str, body: &str) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        fs::write(self.path_for(digest), body)
    }
}

impl ChatTransport for ReplayStore {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let digest = request.digest();
        let path = self.path_for(&digest);
        match fs::read_to_string(&path) {
            Ok(body) => Ok(body),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(TransportError::ReplayMiss { digest, path })
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Forwards to `inner` and stores every response in a replay directory.
pub struct RecordingTransport<T> {
    inner: T,
    store: ReplayStore,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T, store: ReplayStore) -> Self {
        RecordingTransport { inner, store }
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = self.inner.send(request)?;
        self.store.put(&request.digest(), &body)?;
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use super::*;
    use crate::chat::{parse_chat_response, response_body, ChatMessage};

    fn request() -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::user("hi")],
            temperature: 0.0,
            max_tokens: 16,
        }
    }

    /// Answers each connection with the next status in `statuses`.
    fn server(statuses: Vec<u16>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        thread::spawn(move || {
            for (stream, status) in listener.incoming().zip(statuses) {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let payload = if status == 200 {
                    response_body("m", "SELECT 1")
                } else {
                    "busy".into()
                };
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
            }
        });
        (url, hits)
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(1),
            max_delay: Duration::from_millis(5),
        }
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_millis(500));
        assert_eq!(p.delay(3), Duration::from_secs(2));
        assert_eq!(p.delay(40), Duration::from_secs(30));
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, hits) = server(vec![503, 429, 200]);
        let t = HttpTransport::new(&url, None, Duration::from_secs(5), fast()).unwrap();
        let body = t.send(&request()).unwrap();
        assert_eq!(parse_chat_response(&body).unwrap(), "SELECT 1");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, hits) = server(vec![400, 200]);
        let t = HttpTransport::new(&url, None, Duration::from_secs(5), fast()).unwrap();
        assert!(matches!(
            t.send(&request()),
            Err(TransportError::Status { status: 400, .. })
        ));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn exhausted_retries_report_network_failure() {
        let (url, _) = server(vec![500, 500, 500]);
        let t = HttpTransport::new(&url, None, Duration::from_secs(5), fast()).unwrap();
        let err = t.send(&request()).unwrap_err();
        assert!(err.is_network(), "{err}");
    }

    #[test]
    fn missing_key_variable_is_reported() {
        let err = HttpTransport::new(
            "http://x",
            Some("SPIDEREVAL_TEST_UNSET_KEY"),
            Duration::from_secs(1),
            fast(),
        );
        assert!(matches!(err, Err(TransportError::MissingApiKey(_))));
    }

    #[test]
    fn recorder_fills_replay_store() {
        struct Fixed;
        impl ChatTransport for Fixed {
            fn send(&self, _: &ChatRequest) -> Result<String, TransportError> {
                Ok(response_body("m", "SELECT 2"))
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::new(dir.path());
        assert!(matches!(
            store.send(&request()),
            Err(TransportError::ReplayMiss { .. })
        ));
        let rec = RecordingTransport::new(Fixed, store.clone());
        let body = rec.send(&request()).unwrap();
        assert_eq!(store.send(&request()).unwrap(), body);
    }
}
