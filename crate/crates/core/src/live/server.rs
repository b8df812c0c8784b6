//! Session hub, NDJSON stream server and HTTP endpoint for viewers.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use parking_lot::{Condvar, Mutex, RwLock};

use crate::error::{Error, Result};
use crate::scene::export_scene;

use super::session::{LiveSession, Rejection, SceneDelta, SessionConfig};
use super::wire::{read_message, Role, WireMessage};

pub const DEFAULT_PORT: u16 = 7878;
pub const PORT_ENV: &str = "BOWTRACE_PORT";

/// Port from `BOWTRACE_PORT`, falling back to [`DEFAULT_PORT`].
pub fn port_from_env() -> Result<u16> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{PORT_ENV}={v:?} is not a port number"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

const POLL: Duration = Duration::from_millis(100);

/// One live session shared by its tracker connection and any viewers.
/// The tracker holds the write lock only for the duration of one sample.
pub struct SessionHandle {
    state: RwLock<LiveSession>,
    epoch: Mutex<u64>,
    changed: Condvar,
    tracker: AtomicBool,
}

impl SessionHandle {
    fn new(session: LiveSession) -> Self {
        Self { state: RwLock::new(session), epoch: Mutex::new(0), changed: Condvar::new(), tracker: AtomicBool::new(false) }
    }

    fn publish(&self, epoch: u64) {
        *self.epoch.lock() = epoch;
        self.changed.notify_all();
    }

    pub fn accept(&self, msg: &WireMessage) -> std::result::Result<(), Rejection> {
        let WireMessage::Sample { t_ms, p, q } = *msg else {
            return Err(Rejection::Parse);
        };
        let epoch = {
            let mut s = self.state.write();
            s.accept_sample(t_ms, p, q)?;
            s.epoch()
        };
        self.publish(epoch);
        Ok(())
    }

    pub fn finish(&self) {
        let epoch = {
            let mut s = self.state.write();
            s.finish();
            s.epoch()
        };
        self.publish(epoch);
    }

    pub fn delta(&self, since_epoch: u64) -> SceneDelta {
        self.state.read().scene_delta(since_epoch)
    }

    pub fn read<R>(&self, f: impl FnOnce(&LiveSession) -> R) -> R {
        f(&self.state.read())
    }

    /// Blocks until the epoch passes `seen` or `timeout` elapses; returns the
    /// current epoch.
    pub fn wait_newer(&self, seen: u64, timeout: Duration) -> u64 {
        let mut e = self.epoch.lock();
        if *e <= seen {
            self.changed.wait_for(&mut e, timeout);
        }
        *e
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SessionInfo {
    pub session: String,
    pub epoch: u64,
    pub samples: usize,
    pub finished: bool,
}

pub struct Hub {
    cfg: SessionConfig,
    sessions: Mutex<BTreeMap<String, Arc<SessionHandle>>>,
}

impl Hub {
    pub fn new(cfg: SessionConfig) -> Result<Self> {
        LiveSession::new("", cfg.clone())?;
        Ok(Self { cfg, sessions: Mutex::new(BTreeMap::new()) })
    }

    fn fresh(&self, id: &str) -> Arc<SessionHandle> {
        Arc::new(SessionHandle::new(LiveSession::new(id, self.cfg.clone()).expect("config checked by Hub::new")))
    }

    /// Existing session or a new empty one a tracker can later fill.
    pub fn session(&self, id: &str) -> Arc<SessionHandle> {
        self.sessions.lock().entry(id.to_string()).or_insert_with(|| self.fresh(id)).clone()
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.lock().get(id).cloned()
    }

    /// Claims the session for a tracker. A finished session is replaced by a
    /// fresh one; a session with a connected tracker is refused.
    pub fn attach_tracker(&self, id: &str) -> Result<Arc<SessionHandle>> {
        let mut map = self.sessions.lock();
        let h = map.entry(id.to_string()).or_insert_with(|| self.fresh(id));
        if h.read(LiveSession::is_finished) {
            *h = self.fresh(id);
        }
        if h.tracker.swap(true, Ordering::SeqCst) {
            return Err(Error::InvalidArgument(format!("session {id:?} already has a tracker")));
        }
        Ok(h.clone())
    }

    pub fn list(&self) -> Vec<SessionInfo> {
        self.sessions
            .lock()
            .iter()
            .map(|(id, h)| {
                h.read(|s| SessionInfo { session: id.clone(), epoch: s.epoch(), samples: s.len(), finished: s.is_finished() })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub stream_addr: SocketAddr,
    /// HTTP endpoint for scenes, deltas and static viewer assets.
    pub http_addr: Option<SocketAddr>,
    pub assets_dir: Option<PathBuf>,
    /// Served at `/scene.json`.
    pub scene_file: Option<PathBuf>,
    pub session: SessionConfig,
}

impl ServerConfig {
    pub fn local(port: u16) -> Self {
        Self {
            stream_addr: SocketAddr::from(([127, 0, 0, 1], port)),
            http_addr: None,
            assets_dir: None,
            scene_file: None,
            session: SessionConfig::default(),
        }
    }
}

pub struct Server {
    hub: Arc<Hub>,
    stream_addr: SocketAddr,
    http_addr: Option<SocketAddr>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn start(cfg: ServerConfig) -> Result<Self> {
        let hub = Arc::new(Hub::new(cfg.session.clone())?);
        let stop = Arc::new(AtomicBool::new(false));
        let listener = TcpListener::bind(cfg.stream_addr).map_err(|e| Error::net(cfg.stream_addr, e))?;
        let stream_addr = listener.local_addr().map_err(|e| Error::net(cfg.stream_addr, e))?;
        log::info!("live stream listening on {stream_addr}");

        let mut threads = Vec::new();
        {
            let (hub, stop) = (hub.clone(), stop.clone());
            threads.push(std::thread::spawn(move || accept_loop(listener, hub, stop)));
        }
        let mut http_addr = None;
        if let Some(addr) = cfg.http_addr {
            let http = tiny_http::Server::http(addr)
                .map_err(|e| Error::net(addr, std::io::Error::other(e.to_string())))?;
            let bound = http.server_addr().to_ip().unwrap_or(addr);
            log::info!("http listening on {bound}");
            http_addr = Some(bound);
            let routes = HttpRoutes { hub: hub.clone(), assets: cfg.assets_dir, scene_file: cfg.scene_file };
            let stop = stop.clone();
            threads.push(std::thread::spawn(move || http_loop(http, routes, stop)));
        }
        Ok(Self { hub, stream_addr, http_addr, stop, threads })
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }

    pub fn stream_addr(&self) -> SocketAddr {
        self.stream_addr
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http_addr
    }

    /// Blocks until the process is killed.
    pub fn wait(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.stream_addr);
        for t in self.threads {
            let _ = t.join();
        }
    }
}

fn accept_loop(listener: TcpListener, hub: Arc<Hub>, stop: Arc<AtomicBool>) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        match conn {
            Ok(stream) => {
                let (hub, stop) = (hub.clone(), stop.clone());
                std::thread::spawn(move || {
                    let peer = stream.peer_addr().ok();
                    if let Err(e) = handle_connection(stream, &hub, &stop) {
                        log::debug!("connection {peer:?} ended: {e}");
                    }
                });
            }
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}

fn send(w: &mut BufWriter<TcpStream>, m: &WireMessage) -> std::io::Result<()> {
    m.write_to(w)?;
    w.flush()
}

fn handle_connection(stream: TcpStream, hub: &Hub, stop: &AtomicBool) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let (session, role, since) = match read_message(&mut reader)? {
        None => return Ok(()),
        Some(Ok(WireMessage::Hello { session, role, since_epoch })) => (session, role, since_epoch.unwrap_or(0)),
        Some(Ok(_)) => return send(&mut writer, &WireMessage::error("expected hello")),
        Some(Err(e)) => return send(&mut writer, &WireMessage::error(format!("parse: {e}"))),
    };
    match role {
        Role::Tracker => match hub.attach_tracker(&session) {
            Ok(h) => {
                send(&mut writer, &WireMessage::Hello { session, role, since_epoch: None })?;
                let r = serve_tracker(&h, &mut reader, &mut writer);
                h.finish();
                r
            }
            Err(e) => send(&mut writer, &WireMessage::error(e.to_string())),
        },
        Role::Viewer => serve_viewer(&hub.session(&session), since, &mut writer, stop),
    }
}

fn serve_tracker(h: &SessionHandle, reader: &mut impl BufRead, writer: &mut BufWriter<TcpStream>) -> std::io::Result<()> {
    while let Some(msg) = read_message(reader)? {
        match msg {
            Ok(m @ WireMessage::Sample { .. }) => {
                if let Err(r) = h.accept(&m) {
                    send(writer, &WireMessage::error(r.as_str()))?;
                }
            }
            Ok(WireMessage::Bye) => {
                h.finish();
                return send(writer, &WireMessage::Bye);
            }
            Ok(_) => send(writer, &WireMessage::error("unexpected message"))?,
            Err(e) => send(writer, &WireMessage::error(format!("parse: {e}")))?,
        }
    }
    Ok(())
}

fn serve_viewer(h: &SessionHandle, since: u64, writer: &mut BufWriter<TcpStream>, stop: &AtomicBool) -> std::io::Result<()> {
    let mut seen = since;
    let mut first = true;
    while !stop.load(Ordering::SeqCst) {
        let now = h.wait_newer(seen, POLL);
        if now > seen || first {
            let d = h.delta(seen);
            seen = d.epoch;
            let finished = d.finished;
            send(writer, &WireMessage::SceneDelta(d))?;
            first = false;
            if finished {
                return send(writer, &WireMessage::Bye);
            }
        }
    }
    Ok(())
}

struct HttpRoutes {
    hub: Arc<Hub>,
    assets: Option<PathBuf>,
    scene_file: Option<PathBuf>,
}

fn http_loop(server: tiny_http::Server, routes: HttpRoutes, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::SeqCst) {
        match server.recv_timeout(POLL) {
            Ok(Some(req)) => {
                let (status, ctype, body) = routes.respond(req.method(), req.url());
                let mut resp = tiny_http::Response::from_data(body).with_status_code(status);
                for (k, v) in [("Content-Type", ctype), ("Access-Control-Allow-Origin", "*")] {
                    resp.add_header(tiny_http::Header::from_bytes(k, v).expect("static header"));
                }
                if let Err(e) = req.respond(resp) {
                    log::debug!("http response failed: {e}");
                }
            }
            Ok(None) => {}
            Err(e) => {
                log::warn!("http server stopped: {e}");
                break;
            }
        }
    }
}

const JSON: &str = "application/json";
const TEXT: &str = "text/plain; charset=utf-8";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => JSON,
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

fn query_param<'a>(query: &'a str, key: &str) -> Option<&'a str> {
    query.split('&').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

impl HttpRoutes {
    fn respond(&self, method: &tiny_http::Method, url: &str) -> (u16, &'static str, Vec<u8>) {
        if *method != tiny_http::Method::Get {
            return (405, TEXT, b"method not allowed\n".to_vec());
        }
        let (path, query) = url.split_once('?').unwrap_or((url, ""));
        let segs: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        match segs.as_slice() {
            ["api", "sessions"] => (200, JSON, serde_json::to_vec(&self.hub.list()).expect("serializes")),
            ["api", "sessions", id, "delta"] => match self.hub.get(id) {
                Some(h) => {
                    let since = query_param(query, "since").and_then(|s| s.parse().ok()).unwrap_or(0);
                    (200, JSON, serde_json::to_vec(&h.delta(since)).expect("serializes"))
                }
                None => (404, TEXT, format!("no session {id:?}\n").into_bytes()),
            },
            ["api", "sessions", id, "scene"] => match self.hub.get(id) {
                Some(h) => {
                    let t_now = query_param(query, "t_now").and_then(|s| s.parse().ok());
                    (200, JSON, export_scene(&h.read(|s| s.to_scene(t_now))))
                }
                None => (404, TEXT, format!("no session {id:?}\n").into_bytes()),
            },
            ["scene.json"] if self.scene_file.is_some() => self.file(self.scene_file.as_deref().expect("checked")),
            _ => match &self.assets {
                Some(dir) => {
                    let rel: PathBuf = if segs.is_empty() { PathBuf::from("index.html") } else { segs.iter().collect() };
                    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
                        return (400, TEXT, b"bad path\n".to_vec());
                    }
                    self.file(&dir.join(rel))
                }
                None => (404, TEXT, b"not found\n".to_vec()),
            },
        }
    }

    fn file(&self, path: &Path) -> (u16, &'static str, Vec<u8>) {
        match std::fs::read(path) {
            Ok(b) => (200, content_type(path), b),
            Err(_) => (404, TEXT, b"not found\n".to_vec()),
        }
    }
}

/// Connects to a stream server and identifies as `role` for `session`.
pub fn connect(addr: impl ToSocketAddrs, session: &str, role: Role, since_epoch: Option<u64>) -> Result<(BufReader<TcpStream>, BufWriter<TcpStream>)> {
    let stream = TcpStream::connect(addr).map_err(|e| Error::net("stream server", e))?;
    let reader = BufReader::new(stream.try_clone().map_err(|e| Error::net("stream server", e))?);
    let mut writer = BufWriter::new(stream);
    send(&mut writer, &WireMessage::Hello { session: session.into(), role, since_epoch })
        .map_err(|e| Error::net("stream server", e))?;
    Ok((reader, writer))
}
