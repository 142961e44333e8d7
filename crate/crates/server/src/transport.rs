//! Network front ends, one participant per connection. Plain TCP carries
//! newline-delimited JSON; WebSocket carries one JSON message per text
//! frame. Both feed the same per-connection protocol handler.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use futures_util::{SinkExt, StreamExt};

use parley_core::{Message, ParticipantId};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::protocol::WebSocketConfig;
use tokio_tungstenite::tungstenite::{Error as WsError, Message as WsMessage};

use crate::config::ServerConfig;
use crate::room::{Delivery, RoomCore, RoomError, RoomSettings};
use crate::sink::{log_id, FileSink};

/// Longest accepted message: the signal cap plus room for the envelope.
const LINE_SLACK: usize = 4096;

/// Inbound messages buffered per connection before reading pauses.
const INBOUND_QUEUE: usize = 256;

enum Inbound {
    Text(String),
    TooLong,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

type Outbox = mpsc::UnboundedSender<Message>;

struct RoomEntry {
    core: RoomCore,
    conns: HashMap<ParticipantId, (u64, Outbox)>,
}

impl RoomEntry {
    fn dispatch(&mut self, deliveries: Vec<Delivery>) {
        for d in deliveries {
            let sent = self
                .conns
                .get(&d.to)
                .map(|(_, tx)| tx.send(d.msg).is_ok())
                .unwrap_or(false);
            if !sent {
                self.conns.remove(&d.to);
                self.core.disconnect(&d.to);
            }
        }
    }
}

type SharedRoom = Arc<Mutex<RoomEntry>>;

pub struct Server {
    cfg: ServerConfig,
    settings: RoomSettings,
    rooms: Mutex<HashMap<String, SharedRoom>>,
    next_conn: AtomicU64,
}

impl Server {
    pub fn new(cfg: ServerConfig) -> anyhow::Result<Arc<Self>> {
        cfg.validate()?;
        Ok(Arc::new(Self {
            settings: RoomSettings::from(&cfg),
            cfg,
            rooms: Mutex::new(HashMap::new()),
            next_conn: AtomicU64::new(1),
        }))
    }

    pub async fn serve(self: Arc<Self>, listener: TcpListener) -> anyhow::Result<()> {
        loop {
            let (stream, addr) = listener.accept().await?;
            tracing::debug!(%addr, "connection accepted");
            let server = Arc::clone(&self);
            tokio::spawn(async move {
                if let Err(e) = server.handle(stream).await {
                    tracing::debug!(%addr, "connection closed: {e}");
                }
            });
        }
    }

    /// Ends every running room, flushing its log.
    pub fn stop_all(&self) {
        let rooms: Vec<SharedRoom> = self.rooms.lock().unwrap().drain().map(|(_, r)| r).collect();
        for room in rooms {
            let mut entry = room.lock().unwrap();
            let out = entry.core.stop();
            entry.dispatch(out);
        }
    }

    /// Ends one room; returns false when no such room is open.
    pub fn stop_room(&self, id: &str) -> bool {
        let Some(room) = self.rooms.lock().unwrap().remove(id) else {
            return false;
        };
        let mut entry = room.lock().unwrap();
        let out = entry.core.stop();
        entry.dispatch(out);
        true
    }

    fn room(
        self: &Arc<Self>,
        id: &str,
        mode: Option<parley_core::Mode>,
    ) -> Result<SharedRoom, RoomError> {
        if id.is_empty() {
            return Err(RoomError::UnknownRoom(id.to_string()));
        }
        if let Some(allowed) = &self.cfg.rooms {
            if !allowed.iter().any(|r| r == id) {
                return Err(RoomError::UnknownRoom(id.to_string()));
            }
        }
        let mut rooms = self.rooms.lock().unwrap();
        if let Some(r) = rooms.get(id) {
            return Ok(Arc::clone(r));
        }
        let sink = FileSink::new(&self.cfg.log_dir, log_id(id, now_ms()));
        let core = RoomCore::new(
            id,
            self.settings.clone(),
            mode.unwrap_or(self.cfg.default_mode),
            Box::new(sink),
        );
        let room = Arc::new(Mutex::new(RoomEntry {
            core,
            conns: HashMap::new(),
        }));
        rooms.insert(id.to_string(), Arc::clone(&room));
        self.spawn_clock(id.to_string(), Arc::clone(&room));
        Ok(room)
    }

    fn spawn_clock(self: &Arc<Self>, id: String, room: SharedRoom) {
        let server = Arc::clone(self);
        let period = Duration::from_millis(self.settings.tick.millis() as u64);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
            loop {
                interval.tick().await;
                let ended = {
                    let mut entry = room.lock().unwrap();
                    let out = entry.core.advance(now_ms());
                    entry.dispatch(out);
                    entry.core.is_ended()
                };
                if ended {
                    let mut rooms = server.rooms.lock().unwrap();
                    if rooms.get(&id).is_some_and(|r| Arc::ptr_eq(r, &room)) {
                        rooms.remove(&id);
                    }
                    break;
                }
            }
        });
    }

    /// Accepts WebSocket connections; each text frame carries one message.
    pub async fn serve_ws(self: Arc<Self>, listener: TcpListener) -> anyhow::Result<()> {
        loop {
            let (stream, addr) = listener.accept().await?;
            tracing::debug!(%addr, "websocket connection accepted");
            let server = Arc::clone(&self);
            tokio::spawn(async move {
                if let Err(e) = server.handle_ws(stream).await {
                    tracing::debug!(%addr, "websocket closed: {e}");
                }
            });
        }
    }

    fn max_message(&self) -> usize {
        self.cfg.signal_cap_bytes + LINE_SLACK
    }

    async fn handle(self: Arc<Self>, stream: TcpStream) -> anyhow::Result<()> {
        let (read, mut write) = stream.into_split();
        let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
        let writer = tokio::spawn(async move {
            while let Some(msg) = rx.recv().await {
                let closing = matches!(msg, Message::End { .. });
                if write.write_all(msg.to_line().as_bytes()).await.is_err() {
                    break;
                }
                if closing {
                    break;
                }
            }
            let _ = write.shutdown().await;
        });

        let (in_tx, in_rx) = mpsc::channel::<Inbound>(INBOUND_QUEUE);
        let max_line = self.max_message();
        let reader = tokio::spawn(async move {
            let mut lines = BufReader::new(read);
            let mut line = String::new();
            loop {
                line.clear();
                let n = match (&mut lines)
                    .take(max_line as u64 + 1)
                    .read_line(&mut line)
                    .await
                {
                    Ok(n) => n,
                    Err(_) => break,
                };
                if n == 0 {
                    break;
                }
                let item = if line.len() > max_line {
                    Inbound::TooLong
                } else {
                    Inbound::Text(line.clone())
                };
                let stop = matches!(item, Inbound::TooLong);
                if in_tx.send(item).await.is_err() || stop {
                    break;
                }
            }
        });

        self.session(in_rx, tx).await;
        reader.abort();
        let _ = writer.await;
        Ok(())
    }

    async fn handle_ws(self: Arc<Self>, stream: TcpStream) -> anyhow::Result<()> {
        let config = WebSocketConfig::default().max_message_size(Some(self.max_message()));
        let ws = tokio_tungstenite::accept_async_with_config(stream, Some(config)).await?;
        let (mut sink, mut source) = ws.split();
        let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
        let writer = tokio::spawn(async move {
            while let Some(msg) = rx.recv().await {
                let closing = matches!(msg, Message::End { .. });
                let line = msg.to_line();
                let text = line.trim_end();
                if sink.send(WsMessage::text(text)).await.is_err() {
                    break;
                }
                if closing {
                    break;
                }
            }
            let _ = sink.close().await;
        });

        let (in_tx, in_rx) = mpsc::channel::<Inbound>(INBOUND_QUEUE);
        let reader = tokio::spawn(async move {
            while let Some(frame) = source.next().await {
                let item = match frame {
                    Ok(WsMessage::Text(t)) => Inbound::Text(t.as_str().to_owned()),
                    Ok(WsMessage::Binary(b)) => match String::from_utf8(b.to_vec()) {
                        Ok(t) => Inbound::Text(t),
                        Err(_) => Inbound::Text(String::from("\u{fffd}")),
                    },
                    Ok(WsMessage::Close(_)) => break,
                    Ok(_) => continue,
                    Err(WsError::Capacity(_)) => Inbound::TooLong,
                    Err(_) => break,
                };
                let stop = matches!(item, Inbound::TooLong);
                if in_tx.send(item).await.is_err() || stop {
                    break;
                }
            }
        });

        self.session(in_rx, tx).await;
        reader.abort();
        let _ = writer.await;
        Ok(())
    }

    /// Protocol state machine for one connection, independent of framing.
    async fn session(self: &Arc<Self>, mut inbound: mpsc::Receiver<Inbound>, tx: Outbox) {
        let conn_id = self.next_conn.fetch_add(1, Ordering::Relaxed);
        let mut session: Option<(ParticipantId, SharedRoom)> = None;

        while let Some(item) = inbound.recv().await {
            let line = match item {
                Inbound::Text(line) => line,
                Inbound::TooLong => {
                    let _ = tx.send(RoomError::Protocol("message too long".into()).to_message());
                    break;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let msg = match Message::from_line(&line) {
                Ok(m) => m,
                Err(e) => {
                    let _ = tx.send(RoomError::Protocol(e.to_string()).to_message());
                    continue;
                }
            };

            match (&session, msg) {
                (None, Message::Join { room, pid, mode }) => {
                    let shared = match self.room(&room, mode) {
                        Ok(r) => r,
                        Err(e) => {
                            let _ = tx.send(e.to_message());
                            continue;
                        }
                    };
                    let mut entry = shared.lock().unwrap();
                    match entry.core.join(pid.clone(), mode, now_ms()) {
                        Ok(out) => {
                            entry.conns.insert(pid.clone(), (conn_id, tx.clone()));
                            entry.dispatch(out);
                            drop(entry);
                            tracing::info!(%room, %pid, "joined");
                            session = Some((pid, shared));
                        }
                        Err(e) => {
                            let _ = tx.send(e.to_message());
                        }
                    }
                }
                (None, _) => {
                    let _ = tx.send(RoomError::Protocol("join first".into()).to_message());
                }
                (Some((pid, shared)), msg) => {
                    let mut entry = shared.lock().unwrap();
                    let result = match msg {
                        Message::Frame(f) => entry.core.ingest(pid, f, now_ms()),
                        Message::Sig { to, data, .. } => {
                            entry.core.relay_signal(pid, to, data).map(|d| vec![d])
                        }
                        Message::Leave { .. } => {
                            let out = entry.core.leave(pid, now_ms());
                            entry.conns.remove(pid);
                            if let Ok(out) = out {
                                entry.dispatch(out);
                            }
                            break;
                        }
                        Message::Join { .. } => Err(RoomError::Protocol("already joined".into())),
                        _ => Err(RoomError::Protocol("unexpected message from client".into())),
                    };
                    match result {
                        Ok(out) => entry.dispatch(out),
                        Err(e) => {
                            let _ = tx.send(e.to_message());
                        }
                    }
                }
            }
        }

        if let Some((pid, shared)) = session {
            let mut entry = shared.lock().unwrap();
            if entry.conns.get(&pid).is_some_and(|(id, _)| *id == conn_id) {
                entry.conns.remove(&pid);
                entry.core.disconnect(&pid);
            }
        }
    }
}
