use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ndarray::Array2;
use serde_json::Value;

use super::protocol::{encode_request, Payload, Request};
use crate::attack::{QueryError, QueryInterface};
use crate::models::Queries;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

fn payloads(queries: &Queries) -> Vec<Payload> {
    match queries {
        Queries::Features(x) => x.rows().into_iter().map(|r| Payload::Features(r.to_vec())).collect(),
        Queries::Nodes(ids) => ids.iter().map(|&i| Payload::NodeIds(vec![i])).collect(),
    }
}

fn resolve(endpoint: &str) -> Result<SocketAddr, QueryError> {
    endpoint
        .to_socket_addrs()
        .map_err(|e| QueryError::Connection(format!("{endpoint}: {e}")))?
        .next()
        .ok_or_else(|| QueryError::Connection(format!("{endpoint}: no address")))
}

/// Sends the whole batch over one connection and collects the posteriors in
/// order. Any failure discards the partial results.
pub fn remote_query(endpoint: &str, batch: &[Payload], timeout: Duration) -> Result<Array2<f64>, QueryError> {
    if batch.is_empty() {
        return Ok(Array2::zeros((0, 0)));
    }
    let deadline = Instant::now() + timeout;
    let addr = resolve(endpoint)?;
    let conn_err = |e: std::io::Error| QueryError::Connection(e.to_string());
    let stream = TcpStream::connect_timeout(&addr, timeout).map_err(conn_err)?;
    stream.set_nodelay(true).map_err(conn_err)?;
    let write_half = stream.try_clone().map_err(conn_err)?;
    let lines: Vec<String> = batch.iter().enumerate().map(|(i, p)| encode_request(&Request { id: i as u64, payload: p.clone() })).collect();
    // Write from a separate thread so neither side blocks on a full buffer.
    let writer = std::thread::spawn(move || -> std::io::Result<()> {
        let mut w = BufWriter::new(write_half);
        for l in lines {
            w.write_all(l.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    });
    let mut reader = BufReader::new(stream);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(batch.len());
    let mut line = String::new();
    let timeout_ms = timeout.as_millis() as u64;
    for expected in 0..batch.len() as u64 {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Err(QueryError::Timeout(timeout_ms));
        }
        reader.get_ref().set_read_timeout(Some(left)).map_err(conn_err)?;
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => return Err(QueryError::Connection("server closed the connection".into())),
            Ok(_) => {}
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                return Err(QueryError::Timeout(timeout_ms));
            }
            Err(e) => return Err(conn_err(e)),
        }
        let v: Value = serde_json::from_str(line.trim()).map_err(|e| QueryError::Connection(format!("bad response: {e}")))?;
        let id = v.get("id").cloned().unwrap_or(Value::Null);
        if id.as_u64() != Some(expected) {
            return Err(QueryError::IdMismatch { expected, got: id.to_string() });
        }
        if let Some(msg) = v.get("error").and_then(Value::as_str) {
            return Err(QueryError::AtIndex { index: expected as usize, msg: msg.to_string() });
        }
        let post = v
            .get("posterior")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
            .ok_or_else(|| QueryError::Connection("response lacks a posterior".into()))?;
        if let Some(first) = rows.first() {
            if first.len() != post.len() {
                return Err(QueryError::Connection("posterior width changed within a batch".into()));
            }
        }
        rows.push(post);
    }
    writer.join().map_err(|_| QueryError::Connection("writer thread panicked".into()))?.map_err(conn_err)?;
    let l = rows[0].len();
    Array2::from_shape_vec((rows.len(), l), rows.concat()).map_err(|e| QueryError::Connection(e.to_string()))
}

/// A served model behind the same interface as a local one.
pub struct RemoteModel {
    endpoint: String,
    timeout: Duration,
    n_classes: OnceLock<usize>,
}

impl RemoteModel {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> RemoteModel {
        RemoteModel { endpoint: endpoint.into(), timeout, n_classes: OnceLock::new() }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl QueryInterface for RemoteModel {
    /// Known after the first answered query; 0 before.
    fn n_classes(&self) -> usize {
        self.n_classes.get().copied().unwrap_or(0)
    }

    fn query(&self, queries: &Queries) -> Result<Array2<f64>, QueryError> {
        let post = remote_query(&self.endpoint, &payloads(queries), self.timeout)?;
        if post.nrows() > 0 {
            let l = *self.n_classes.get_or_init(|| post.ncols());
            if l != post.ncols() {
                return Err(QueryError::Connection(format!("expected {l} classes, server sent {}", post.ncols())));
            }
        }
        Ok(post)
    }
}
