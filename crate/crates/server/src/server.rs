//! TCP listener and per-connection workers.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter};
use std::net::{IpAddr, Ipv4Addr, Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use anyhow::{bail, Context};
use vizenv_core::protocol::{
    read_message, read_preamble, write_message, write_preamble, ErrorCode, ProtocolError, Response, DEFAULT_PORT,
};
use vizenv_core::scene::{builtin_scenes, Scene};

use crate::host::SceneHost;
use crate::session::{Connection, Shared};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub tick_rate: f64,
    pub seed: u64,
    pub scenes: Vec<Scene>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: IpAddr::V4(Ipv4Addr::UNSPECIFIED),
            port: DEFAULT_PORT,
            tick_rate: 60.0,
            seed: 0,
            scenes: builtin_scenes(),
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.tick_rate.is_finite() && self.tick_rate > 0.0) {
            bail!("tick rate must be positive, got {}", self.tick_rate);
        }
        if self.scenes.is_empty() {
            bail!("no scenes to serve");
        }
        if self.scenes.len() > usize::from(u8::MAX) {
            bail!("at most 255 scenes can be served, got {}", self.scenes.len());
        }
        Ok(())
    }
}

type Registry = Arc<Mutex<HashMap<u64, TcpStream>>>;
type Workers = Arc<Mutex<Vec<JoinHandle<()>>>>;

/// A running server. Dropping the handle shuts the server down.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
    connections: Registry,
    workers: Workers,
}

/// Binds the listener, prepares every scene and starts accepting.
pub fn start(config: ServerConfig) -> anyhow::Result<ServerHandle> {
    config.validate()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let hosts = config
        .scenes
        .into_iter()
        .map(|s| {
            let name = s.name.clone();
            SceneHost::new(Arc::new(s), config.seed, config.tick_rate, shutdown.clone())
                .with_context(|| format!("preparing scene {name}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let listener = TcpListener::bind((config.bind, config.port))
        .with_context(|| format!("binding {}:{}", config.bind, config.port))?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared::new(hosts));
    let connections: Registry = Arc::default();
    let workers: Workers = Arc::default();

    let accept = {
        let (shared, shutdown, connections, workers) =
            (shared.clone(), shutdown.clone(), connections.clone(), workers.clone());
        std::thread::Builder::new()
            .name("accept".into())
            .spawn(move || accept_loop(listener, shared, shutdown, connections, workers))?
    };
    log::info!("listening on {addr} with {} scenes", shared.scenes.len());
    Ok(ServerHandle { addr, shared, shutdown, accept: Some(accept), connections, workers })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, shutdown: Arc<AtomicBool>, connections: Registry, workers: Workers) {
    let next_id = AtomicU64::new(0);
    for stream in listener.incoming() {
        if shutdown.load(Ordering::Acquire) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let id = next_id.fetch_add(1, Ordering::Relaxed);
        if let Ok(clone) = stream.try_clone() {
            connections.lock().expect("registry poisoned").insert(id, clone);
        }
        let (shared, connections) = (shared.clone(), connections.clone());
        let spawned = std::thread::Builder::new().name(format!("conn-{id}")).spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = serve_connection(&shared, stream) {
                log::info!("connection {peer:?} ended: {e}");
            }
            connections.lock().expect("registry poisoned").remove(&id);
        });
        let mut w = workers.lock().expect("worker list poisoned");
        w.retain(|h| !h.is_finished());
        match spawned {
            Ok(h) => w.push(h),
            Err(e) => log::error!("could not spawn worker: {e}"),
        }
    }
}

/// Runs one connection to completion: preamble, then request/response pairs.
pub fn serve_connection(shared: &Shared, stream: TcpStream) -> Result<(), ProtocolError> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);

    stream_timeout(&reader, Some(Duration::from_secs(10)))?;
    read_preamble(&mut reader)?;
    stream_timeout(&reader, None)?;
    write_preamble(&mut writer)?;

    let mut conn = Connection::new(shared);
    loop {
        let msg = match read_message(&mut reader) {
            Ok(Some(m)) => m,
            Ok(None) => return Ok(()),
            Err(e @ ProtocolError::Oversized(_)) => {
                // the stream cannot be resynchronized after an unread body
                let reply = Response::error(ErrorCode::BadRequest, e.to_string());
                write_message(&mut writer, &reply.to_message()?)?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let (reply, close) = conn.handle_message(&msg);
        let encoded = reply.to_message().or_else(|e| Response::error(ErrorCode::Internal, e.to_string()).to_message())?;
        write_message(&mut writer, &encoded)?;
        if close {
            return Ok(());
        }
    }
}

fn stream_timeout(reader: &BufReader<TcpStream>, t: Option<Duration>) -> std::io::Result<()> {
    reader.get_ref().set_read_timeout(t)
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn live_sessions(&self) -> usize {
        self.shared.live_sessions()
    }

    pub fn scenes(&self) -> &[Arc<SceneHost>] {
        &self.shared.scenes
    }

    /// Open TCP connections, registered or not.
    pub fn open_connections(&self) -> usize {
        self.connections.lock().expect("registry poisoned").len()
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if self.shutdown.swap(true, Ordering::AcqRel) {
            return;
        }
        // wake the blocking accept with a throwaway connection
        let mut wake = self.addr;
        if wake.ip().is_unspecified() {
            wake.set_ip(IpAddr::V4(Ipv4Addr::LOCALHOST));
        }
        let _ = TcpStream::connect_timeout(&wake, Duration::from_secs(1));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        for s in self.connections.lock().expect("registry poisoned").values() {
            let _ = s.shutdown(Shutdown::Both);
        }
        let workers = std::mem::take(&mut *self.workers.lock().expect("worker list poisoned"));
        for w in workers {
            let _ = w.join();
        }
        for host in &self.shared.scenes {
            host.stop();
        }
        log::info!("server on {} stopped", self.addr);
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}
