//! Bundled in-process backend speaking the HTTP adapter contract.
//!
//! Serves the same endpoints a live backend would be wrapped with
//! (`/ping`, `/load`, `/setup`, `/query`, `/count`) and answers queries via
//! the oracle engine, so the harness and its adapters can be exercised
//! end-to-end without any external database. The query language is the
//! canonical `QuerySpec` text, resolved against the server's term pool.

use crate::datagen::parse_json_lines;
use crate::model::CanonicalRecord;
use crate::oracle::{evaluate, selectivity, Dataset, EvalOptions};
use crate::query::parse_spec_text;
use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

struct MockState {
    dataset: Dataset,
    installed_setups: HashSet<String>,
    term_pool: Vec<String>,
}

/// A running mock backend; shuts down when dropped.
pub struct MockServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(
        records: Vec<CanonicalRecord>,
        term_pool: Vec<String>,
    ) -> std::io::Result<MockServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let state = Arc::new(Mutex::new(MockState {
            dataset: Dataset::from_records(records),
            installed_setups: HashSet::new(),
            term_pool,
        }));
        let flag = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = handle_connection(stream, &state);
                }
            }
        });
        Ok(MockServer { addr, shutdown, handle: Some(handle) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // unblock the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(stream: TcpStream, state: &Arc<Mutex<MockState>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("").to_string();

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).into_owned();

    let (status, response) = route(&method, &path, &body, state);
    respond(stream, status, &response)
}

fn route(
    method: &str,
    path: &str,
    body: &str,
    state: &Arc<Mutex<MockState>>,
) -> (u16, String) {
    let base_path = path.split('?').next().unwrap_or(path);
    match (method, base_path) {
        ("GET", "/ping") => (200, "{\"ok\": true}".to_string()),
        ("GET", "/count") => {
            let state = state.lock().unwrap();
            (200, format!("{{\"count\": {}}}", state.dataset.record_count()))
        }
        ("POST", "/load") => match parse_json_lines(body.as_bytes()) {
            Ok(records) => {
                let mut state = state.lock().unwrap();
                state.dataset = Dataset::from_records(records);
                (200, format!("{{\"count\": {}}}", state.dataset.record_count()))
            }
            Err(e) => (400, format!("{{\"error\": {:?}}}", e.to_string())),
        },
        ("POST", "/setup") => {
            let mut state = state.lock().unwrap();
            // re-installing the same artifact is a no-op
            state.installed_setups.insert(body.to_string());
            (200, "{\"ok\": true}".to_string())
        }
        ("POST", "/query") => {
            let state = state.lock().unwrap();
            match parse_spec_text(body, &state.term_pool) {
                Ok(spec) => {
                    let rs = evaluate(&state.dataset, &spec, EvalOptions::default());
                    let sel = selectivity(&state.dataset, &spec, &rs)
                        .map(|r| r.s)
                        .unwrap_or(f64::NAN);
                    (
                        200,
                        format!(
                            "{{\"count\": {}, \"selectivity\": {:.6}}}",
                            rs.row_count(),
                            sel
                        ),
                    )
                }
                Err(e) => (400, format!("{{\"error\": {:?}}}", e.to_string())),
            }
        }
        _ => (404, "{\"error\": \"no such endpoint\"}".to_string()),
    }
}

fn respond(mut stream: TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        _ => "Not Found",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{adapter_for, AdapterKind, BackendAdapter, BackendConfig};
    use crate::model::RecordKind;
    use crate::query::default_term_pool;

    fn record(id: &str, title: &str, authors: &[&str]) -> CanonicalRecord {
        let mut r = CanonicalRecord::new(id, title, 2000, RecordKind::JournalArticle);
        r.authors = authors.iter().map(|a| a.to_string()).collect();
        r
    }

    fn adapter(server: &MockServer) -> Box<dyn BackendAdapter> {
        adapter_for(&BackendConfig {
            name: "mock".into(),
            adapter: AdapterKind::Http { url: server.url() },
            timeout_secs: 10,
        })
    }

    #[test]
    fn serves_the_adapter_contract() {
        let server = MockServer::start(
            vec![
                record("a", "database text", &["p"]),
                record("b", "mining", &["p", "q"]),
            ],
            default_term_pool(),
        )
        .unwrap();
        let adapter = adapter(&server);
        adapter.ping().unwrap();
        assert_eq!(adapter.count().unwrap(), 2);
        let response = adapter.run_query("Q2(i=1,j=2)").unwrap();
        assert_eq!(response.result_count, Some(1));
        let response = adapter.run_query("Q6").unwrap();
        assert_eq!(response.result_count, Some(2));
    }

    #[test]
    fn load_replaces_the_collection() {
        let server = MockServer::start(vec![], default_term_pool()).unwrap();
        let adapter = adapter(&server);
        assert_eq!(adapter.count().unwrap(), 0);
        let mut docs = Vec::new();
        crate::datagen::emit_json(
            &mut docs,
            &[record("a", "one", &["p"]), record("b", "two", &[])],
        )
        .unwrap();
        let loaded = adapter.load(&String::from_utf8(docs).unwrap()).unwrap();
        assert_eq!(loaded, 2);
        assert_eq!(adapter.count().unwrap(), 2);
    }

    #[test]
    fn bad_query_is_a_client_error() {
        let server = MockServer::start(vec![], default_term_pool()).unwrap();
        let adapter = adapter(&server);
        assert!(adapter.run_query("Q99(nope)").is_err());
    }
}
