//! Newline-delimited JSON query server and client. Each request line holds
//! one query; responses come back in request order on the same connection.

mod client;
mod protocol;

pub use client::{remote_query, RemoteModel, DEFAULT_TIMEOUT};
pub use protocol::{encode_request, Payload, Request};
pub(crate) use protocol::handle_line;

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use ndarray::Array2;
use thiserror::Error;

use crate::models::{Architecture, ModelError, TrainedModel};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {endpoint}: {msg}")]
    Bind { endpoint: String, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The model as served. Graph posteriors are computed once up front since
/// the model never changes while serving.
pub(crate) enum Served {
    Tabular(TrainedModel),
    Graph(Array2<f64>),
}

impl Served {
    pub(crate) fn new(model: TrainedModel) -> Result<Served, ModelError> {
        match model.arch() {
            Architecture::Gcn { .. } => {
                let n = model.graph().map(|g| g.n_nodes()).unwrap_or(0);
                let all: Vec<usize> = (0..n).collect();
                Ok(Served::Graph(model.predict_nodes(&all)?))
            }
            _ => Ok(Served::Tabular(model)),
        }
    }
}

/// A running server; dropping it stops accepting new connections.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for the accept loop to exit.
    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    /// Blocks until the accept loop exits (it only does after a shutdown).
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_accepting();
        }
    }
}

fn serve_connection(stream: TcpStream, model: Arc<Served>, idle_timeout: Option<Duration>) {
    let _ = stream.set_read_timeout(idle_timeout);
    let _ = stream.set_nodelay(true);
    let Ok(write_half) = stream.try_clone() else { return };
    let mut out = std::io::BufWriter::new(write_half);
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        if line.trim().is_empty() {
            continue;
        }
        let response = handle_line(&model, line.trim_end_matches(['\r', '\n']));
        if writeln!(out, "{response}").is_err() {
            break;
        }
        // Flush once the client has nothing else queued, so pipelined
        // batches go out in large writes.
        if reader.buffer().is_empty() && out.flush().is_err() {
            break;
        }
    }
    let _ = out.flush();
}

/// Serves `model` on `endpoint` (use port 0 for an ephemeral port). Each
/// connection gets its own thread; idle connections close after `idle_timeout`.
pub fn serve(model: TrainedModel, endpoint: &str, idle_timeout: Option<Duration>) -> Result<ServerHandle, ServerError> {
    let bind_err = |msg: String| ServerError::Bind { endpoint: endpoint.to_string(), msg };
    let addrs: Vec<SocketAddr> = endpoint.to_socket_addrs().map_err(|e| bind_err(e.to_string()))?.collect();
    let listener = TcpListener::bind(&addrs[..]).map_err(|e| bind_err(e.to_string()))?;
    let addr = listener.local_addr().map_err(|e| bind_err(e.to_string()))?;
    let served = Arc::new(Served::new(model)?);
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let thread = std::thread::spawn(move || {
        for conn in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            match conn {
                Ok(stream) => {
                    let model = Arc::clone(&served);
                    std::thread::spawn(move || serve_connection(stream, model, idle_timeout));
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
    });
    log::info!("serving on {addr}");
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}
