//! Live-backend execution harness.
//!
//! Two adapter kinds drive the backends the way the original methodology
//! did: a command template run through the backend's own CLI, and a plain
//! HTTP endpoint. Timing wraps the full request/response: process spawn to
//! exit for commands, request sent to body drained for HTTP. Numbers are
//! comparable within an adapter kind, not across kinds.
//!
//! Every timed run is strictly sequential; one cold run precedes the warm
//! runs and is excluded from statistics.

use crate::model::ScaleFactor;
use crate::query::QuerySpec;
use crate::translate::{SetupText, TranslatedQuery};
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

pub const DEFAULT_TIMEOUT_SECS: u64 = 600;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterKind {
    /// Command template run per query; `{query}` and `{query_file}`
    /// placeholders are substituted per invocation.
    Command {
        query_template: String,
        #[serde(default)]
        setup_template: Option<String>,
        #[serde(default)]
        load_template: Option<String>,
        #[serde(default)]
        count_template: Option<String>,
    },
    /// HTTP endpoint speaking the harness contract: GET `/ping`,
    /// POST `/query`, POST `/setup`, POST `/load`, GET `/count`.
    Http { url: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub name: String,
    #[serde(flatten)]
    pub adapter: AdapterKind,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

impl BackendConfig {
    /// Applies `DODBENCH_<NAME>_URL` environment overrides.
    pub fn with_env_overrides(mut self) -> BackendConfig {
        let var = format!("DODBENCH_{}_URL", self.name.to_uppercase().replace('-', "_"));
        if let Ok(url) = std::env::var(&var) {
            if let AdapterKind::Http { url: u } = &mut self.adapter {
                *u = url;
            }
        }
        self
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct BenchConfigFile {
    #[serde(default)]
    pub backends: Vec<BackendConfig>,
}

impl BenchConfigFile {
    pub fn parse(text: &str) -> Result<BenchConfigFile, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AdapterError {
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("query timed out after {0:?}")]
    QueryTimeout(Duration),
    #[error("adapter failure: {0}")]
    AdapterFailure(String),
    #[error("loaded count {actual} does not match expected {expected}")]
    CountMismatch { expected: u64, actual: u64 },
}

#[derive(Debug, Clone)]
pub struct AdapterResponse {
    pub result_count: Option<u64>,
    pub body: String,
}

/// Driver that ships query text to a live backend.
pub trait BackendAdapter {
    fn ping(&self) -> Result<(), AdapterError>;
    fn run_query(&self, main_text: &str) -> Result<AdapterResponse, AdapterError>;
    fn install(&self, setup: &SetupText) -> Result<(), AdapterError>;
    /// Bulk-loads line-delimited documents; returns the backend's row count
    /// after the load.
    fn load(&self, documents: &str) -> Result<u64, AdapterError>;
    fn count(&self) -> Result<u64, AdapterError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cold,
    Warm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Error(String),
    Timeout,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub backend: String,
    pub query: String,
    pub sf: ScaleFactor,
    pub run_index: u32,
    pub phase: Phase,
    pub elapsed: Duration,
    pub outcome: Outcome,
    pub result_count: Option<u64>,
    /// Monotonic start/end offsets from the runner's epoch; used to assert
    /// that timed intervals never overlap.
    pub started: Duration,
    pub ended: Duration,
}

#[derive(Debug, Clone, Copy)]
pub struct RunProtocol {
    pub runs: u32,
    pub cold_prefill: bool,
}

impl Default for RunProtocol {
    fn default() -> Self {
        RunProtocol { runs: 10, cold_prefill: true }
    }
}

/// Runs one translated query under the execution protocol: setup artifacts
/// installed first, one untimed-in-statistics cold run, then `runs` warm
/// runs, strictly sequential.
pub fn execute(
    cfg: &BackendConfig,
    query: &QuerySpec,
    sf: ScaleFactor,
    tq: &TranslatedQuery,
    protocol: RunProtocol,
) -> Result<Vec<RunRecord>, AdapterError> {
    let adapter = adapter_for(cfg);
    execute_with(adapter.as_ref(), &cfg.name, query, sf, tq, protocol)
}

/// Same as [`execute`] but over a caller-supplied adapter (mock backends,
/// tests).
pub fn execute_with(
    adapter: &dyn BackendAdapter,
    backend_name: &str,
    query: &QuerySpec,
    sf: ScaleFactor,
    tq: &TranslatedQuery,
    protocol: RunProtocol,
) -> Result<Vec<RunRecord>, AdapterError> {
    adapter.ping()?;
    install_setup_with(adapter, tq)?;

    let epoch = Instant::now();
    let query_text = query.canonical_text();
    let mut records = Vec::with_capacity(protocol.runs as usize + 1);
    let phases = std::iter::once(Phase::Cold)
        .filter(|_| protocol.cold_prefill)
        .chain(std::iter::repeat(Phase::Warm).take(protocol.runs as usize));
    for (run_index, phase) in phases.enumerate() {
        let started = epoch.elapsed();
        let start = Instant::now();
        let result = adapter.run_query(&tq.main_text);
        let elapsed = start.elapsed();
        let ended = epoch.elapsed();
        let (outcome, result_count) = match result {
            Ok(response) => (Outcome::Success, response.result_count),
            Err(AdapterError::QueryTimeout(_)) => (Outcome::Timeout, None),
            Err(e) => (Outcome::Error(e.to_string()), None),
        };
        records.push(RunRecord {
            backend: backend_name.to_string(),
            query: query_text.clone(),
            sf,
            run_index: run_index as u32,
            phase,
            elapsed,
            outcome,
            result_count,
            started,
            ended,
        });
    }
    Ok(records)
}

/// Installs all setup artifacts; idempotent by adapter contract.
pub fn install_setup(cfg: &BackendConfig, tq: &TranslatedQuery) -> Result<(), AdapterError> {
    let adapter = adapter_for(cfg);
    adapter.ping()?;
    install_setup_with(adapter.as_ref(), tq)
}

pub fn install_setup_with(
    adapter: &dyn BackendAdapter,
    tq: &TranslatedQuery,
) -> Result<(), AdapterError> {
    for setup in &tq.setup_texts {
        adapter.install(setup)?;
    }
    Ok(())
}

/// Bulk-loads emitted documents and verifies the backend's row count equals
/// the dataset record count. Load time is reported, never benchmarked.
pub fn load_dataset(
    cfg: &BackendConfig,
    documents: &str,
    expected: u64,
) -> Result<Duration, AdapterError> {
    let adapter = adapter_for(cfg);
    adapter.ping()?;
    load_dataset_with(adapter.as_ref(), documents, expected)
}

pub fn load_dataset_with(
    adapter: &dyn BackendAdapter,
    documents: &str,
    expected: u64,
) -> Result<Duration, AdapterError> {
    let start = Instant::now();
    adapter.load(documents)?;
    let elapsed = start.elapsed();
    let actual = adapter.count()?;
    if actual != expected {
        return Err(AdapterError::CountMismatch { expected, actual });
    }
    Ok(elapsed)
}

pub fn adapter_for(cfg: &BackendConfig) -> Box<dyn BackendAdapter> {
    match &cfg.adapter {
        AdapterKind::Command {
            query_template,
            setup_template,
            load_template,
            count_template,
        } => Box::new(CommandAdapter {
            query_template: query_template.clone(),
            setup_template: setup_template.clone(),
            load_template: load_template.clone(),
            count_template: count_template.clone(),
            timeout: cfg.timeout(),
        }),
        AdapterKind::Http { url } => Box::new(HttpAdapter {
            base_url: url.trim_end_matches('/').to_string(),
            timeout: cfg.timeout(),
        }),
    }
}

/// Runs each query by spawning the configured command; timing is
/// process-spawn to process-exit.
pub struct CommandAdapter {
    query_template: String,
    setup_template: Option<String>,
    load_template: Option<String>,
    count_template: Option<String>,
    timeout: Duration,
}

impl CommandAdapter {
    fn run_template(&self, template: &str, text: &str) -> Result<AdapterResponse, AdapterError> {
        let mut temp: Option<tempfile::NamedTempFile> = None;
        let argv: Vec<String> = template
            .split_whitespace()
            .map(|token| {
                if token.contains("{query_file}") || token.contains("{data_file}") {
                    let file = temp.get_or_insert_with(|| {
                        let mut f = tempfile::NamedTempFile::new().expect("temp file");
                        f.write_all(text.as_bytes()).expect("temp write");
                        f.flush().expect("temp flush");
                        f
                    });
                    token
                        .replace("{query_file}", &file.path().display().to_string())
                        .replace("{data_file}", &file.path().display().to_string())
                } else {
                    token.replace("{query}", text)
                }
            })
            .collect();
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| AdapterError::AdapterFailure("empty command template".into()))?;
        let mut child = std::process::Command::new(program)
            .args(args)
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .spawn()
            .map_err(|e| AdapterError::BackendUnreachable(format!("{program}: {e}")))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            match child.try_wait() {
                Ok(Some(status)) => {
                    let output = child
                        .wait_with_output()
                        .map_err(|e| AdapterError::AdapterFailure(e.to_string()))?;
                    let body = String::from_utf8_lossy(&output.stdout).into_owned();
                    if !status.success() {
                        let err = String::from_utf8_lossy(&output.stderr).into_owned();
                        return Err(AdapterError::AdapterFailure(format!(
                            "exit {status}: {}",
                            err.trim()
                        )));
                    }
                    let result_count = parse_count(&body);
                    return Ok(AdapterResponse { result_count, body });
                }
                Ok(None) => {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(AdapterError::QueryTimeout(self.timeout));
                    }
                    std::thread::sleep(Duration::from_millis(2));
                }
                Err(e) => return Err(AdapterError::AdapterFailure(e.to_string())),
            }
        }
    }
}

impl BackendAdapter for CommandAdapter {
    fn ping(&self) -> Result<(), AdapterError> {
        Ok(())
    }

    fn run_query(&self, main_text: &str) -> Result<AdapterResponse, AdapterError> {
        self.run_template(&self.query_template, main_text)
    }

    fn install(&self, setup: &SetupText) -> Result<(), AdapterError> {
        match &self.setup_template {
            Some(template) => self.run_template(template, &setup.text).map(|_| ()),
            None => Err(AdapterError::AdapterFailure(format!(
                "setup artifact {} but no setup_template configured",
                setup.name
            ))),
        }
    }

    fn load(&self, documents: &str) -> Result<u64, AdapterError> {
        let template = self.load_template.as_ref().ok_or_else(|| {
            AdapterError::AdapterFailure("no load_template configured".into())
        })?;
        let response = self.run_template(template, documents)?;
        Ok(response.result_count.unwrap_or(0))
    }

    fn count(&self) -> Result<u64, AdapterError> {
        let template = self.count_template.as_ref().ok_or_else(|| {
            AdapterError::AdapterFailure("no count_template configured".into())
        })?;
        let response = self.run_template(template, "")?;
        response
            .result_count
            .ok_or_else(|| AdapterError::AdapterFailure("count command produced no count".into()))
    }
}

/// Drives a backend over HTTP; timing is request-sent to body-drained.
pub struct HttpAdapter {
    base_url: String,
    timeout: Duration,
}

impl HttpAdapter {
    fn client(&self) -> Result<reqwest::blocking::Client, AdapterError> {
        reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| AdapterError::AdapterFailure(e.to_string()))
    }

    fn post(&self, path: &str, body: String) -> Result<AdapterResponse, AdapterError> {
        let url = format!("{}{path}", self.base_url);
        let response = self
            .client()?
            .post(&url)
            .body(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    AdapterError::QueryTimeout(self.timeout)
                } else if e.is_connect() {
                    AdapterError::BackendUnreachable(e.to_string())
                } else {
                    AdapterError::AdapterFailure(e.to_string())
                }
            })?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| AdapterError::AdapterFailure(e.to_string()))?;
        if !status.is_success() {
            return Err(AdapterError::AdapterFailure(format!("{status}: {}", body.trim())));
        }
        Ok(AdapterResponse { result_count: parse_count(&body), body })
    }

    fn get(&self, path: &str) -> Result<AdapterResponse, AdapterError> {
        let url = format!("{}{path}", self.base_url);
        let response = self.client()?.get(&url).send().map_err(|e| {
            if e.is_timeout() {
                AdapterError::QueryTimeout(self.timeout)
            } else {
                AdapterError::BackendUnreachable(e.to_string())
            }
        })?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| AdapterError::AdapterFailure(e.to_string()))?;
        if !status.is_success() {
            return Err(AdapterError::AdapterFailure(format!("{status}: {}", body.trim())));
        }
        Ok(AdapterResponse { result_count: parse_count(&body), body })
    }
}

impl BackendAdapter for HttpAdapter {
    fn ping(&self) -> Result<(), AdapterError> {
        self.get("/ping").map(|_| ())
    }

    fn run_query(&self, main_text: &str) -> Result<AdapterResponse, AdapterError> {
        self.post("/query", main_text.to_string())
    }

    fn install(&self, setup: &SetupText) -> Result<(), AdapterError> {
        self.post("/setup", setup.text.clone()).map(|_| ())
    }

    fn load(&self, documents: &str) -> Result<u64, AdapterError> {
        let response = self.post("/load", documents.to_string())?;
        response
            .result_count
            .ok_or_else(|| AdapterError::AdapterFailure("load response carried no count".into()))
    }

    fn count(&self) -> Result<u64, AdapterError> {
        let response = self.get("/count")?;
        response
            .result_count
            .ok_or_else(|| AdapterError::AdapterFailure("count response carried no count".into()))
    }
}

/// Extracts a result count from a response body: a JSON object's `count`
/// field, a JSON array's length, or a bare integer.
pub fn parse_count(body: &str) -> Option<u64> {
    let trimmed = body.trim();
    if let Ok(value) = serde_json::from_str::<serde_json::Value>(trimmed) {
        match value {
            serde_json::Value::Number(n) => return n.as_u64(),
            serde_json::Value::Array(items) => return Some(items.len() as u64),
            serde_json::Value::Object(map) => {
                if let Some(count) = map.get("count").and_then(|c| c.as_u64()) {
                    return Some(count);
                }
                if let Some(rows) = map.get("rows").and_then(|r| r.as_array()) {
                    return Some(rows.len() as u64);
                }
            }
            _ => {}
        }
    }
    trimmed.parse().ok()
}

/// Writes runs.csv with the documented column scheme.
pub fn write_runs_csv(path: &PathBuf, runs: &[RunRecord]) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "backend",
        "query",
        "sf",
        "run_index",
        "phase",
        "elapsed_ms",
        "outcome",
        "result_count",
    ])?;
    for run in runs {
        let outcome = match &run.outcome {
            Outcome::Success => "success".to_string(),
            Outcome::Timeout => "timeout".to_string(),
            Outcome::Error(text) => format!("error: {text}"),
        };
        writer.write_record([
            run.backend.as_str(),
            run.query.as_str(),
            &run.sf.to_string(),
            &run.run_index.to_string(),
            match run.phase {
                Phase::Cold => "cold",
                Phase::Warm => "warm",
            },
            &format!("{:.3}", run.elapsed.as_secs_f64() * 1000.0),
            &outcome,
            &run.result_count.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
