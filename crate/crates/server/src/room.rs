//! One discussion room as a synchronous state machine.
//!
//! A [`RoomCore`] owns membership, the authoritative tick clock, the frame
//! buffer and the session log. It never reads a clock itself: every
//! operation takes the current time in milliseconds, so the same code runs
//! under the network transport and under simulated time in tests. Every
//! operation returns the messages to deliver; each [`Delivery`] names
//! exactly one recipient.

use std::collections::{BTreeMap, BTreeSet};

use parley_core::{
    FeatureFrame, FrameMsg, LogHeader, LogRecord, Message, Mode, ParticipantId, SessionRecorder,
    Tick, TickDuration, ZoneConfig,
};
use thiserror::Error;

use crate::config::ServerConfig;
use crate::sink::LogSink;

/// How many ticks behind the room clock a tick may fall before missing
/// frames are synthesized.
pub const DEADLINE_TICKS: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RoomSettings {
    pub max_members: usize,
    pub tick: TickDuration,
    pub session_ticks: u64,
    pub emit_every: u64,
    pub zones: ZoneConfig,
    pub signal_cap_bytes: usize,
    pub max_lead_ticks: u64,
}

impl From<&ServerConfig> for RoomSettings {
    fn from(cfg: &ServerConfig) -> Self {
        Self {
            max_members: cfg.max_members,
            tick: cfg.tick(),
            session_ticks: cfg.session_ticks(),
            emit_every: cfg.emit_every(),
            zones: cfg.zones,
            signal_cap_bytes: cfg.signal_cap_bytes,
            max_lead_ticks: cfg.max_lead_ticks,
        }
    }
}

impl Default for RoomSettings {
    fn default() -> Self {
        Self::from(&ServerConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoomError {
    #[error("room is full")]
    RoomFull,
    #[error("{0} is already in the room")]
    DuplicateId(ParticipantId),
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("room mode is {0:?}")]
    ModeMismatch(Mode),
    #[error("{0} has not joined this room")]
    NotMember(ParticipantId),
    #[error("frame for {claimed} sent by {sender}")]
    Spoofed {
        sender: ParticipantId,
        claimed: ParticipantId,
    },
    #[error("room clock has not started")]
    NotStarted,
    #[error("tick {tick} already processed (next is {next})")]
    StaleTick { tick: Tick, next: Tick },
    #[error("tick {tick} is too far ahead of the room clock ({clock})")]
    FutureTick { tick: Tick, clock: Tick },
    #[error("second frame for tick {0}")]
    DuplicateFrame(Tick),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("{0} is not reachable in this room")]
    UnknownPeer(ParticipantId),
    #[error("signal payload of {size} bytes exceeds {cap}")]
    PayloadTooLarge { size: usize, cap: usize },
    #[error("room session has ended")]
    RoomClosed,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl RoomError {
    pub fn code(&self) -> &'static str {
        match self {
            RoomError::RoomFull => "room_full",
            RoomError::DuplicateId(_) => "duplicate_id",
            RoomError::UnknownRoom(_) => "unknown_room",
            RoomError::ModeMismatch(_) => "mode_mismatch",
            RoomError::NotMember(_) => "not_member",
            RoomError::Spoofed { .. } => "spoofed",
            RoomError::NotStarted => "not_started",
            RoomError::StaleTick { .. } => "stale_tick",
            RoomError::FutureTick { .. } => "future_tick",
            RoomError::DuplicateFrame(_) => "duplicate_frame",
            RoomError::InvalidFrame(_) => "invalid_frame",
            RoomError::UnknownPeer(_) => "unknown_peer",
            RoomError::PayloadTooLarge { .. } => "payload_too_large",
            RoomError::RoomClosed => "room_closed",
            RoomError::Protocol(_) => "protocol",
        }
    }

    pub fn to_message(&self) -> Message {
        Message::error(self.code(), self.to_string())
    }
}

/// A message addressed to a single participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub to: ParticipantId,
    pub msg: Message,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoomStats {
    pub ticks: u64,
    pub frames_accepted: u64,
    pub frames_synthesized: u64,
    pub feedback_sent: u64,
    /// Snapshots logged but not delivered because the subject was offline.
    pub feedback_skipped: u64,
    pub signals_relayed: u64,
}

#[derive(Debug, Clone)]
struct Member {
    connected: bool,
    last_valence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Waiting,
    Running { start_ms: u64 },
    Ended,
}

pub struct RoomCore {
    id: String,
    settings: RoomSettings,
    mode: Mode,
    phase: Phase,
    members: BTreeMap<ParticipantId, Member>,
    recorder: Option<SessionRecorder>,
    pending: BTreeMap<Tick, BTreeMap<ParticipantId, FeatureFrame>>,
    sink: Box<dyn LogSink>,
    persist_failed: bool,
    log_id: Option<String>,
    flagged: BTreeSet<ParticipantId>,
    stats: RoomStats,
}

impl RoomCore {
    pub fn new(
        id: impl Into<String>,
        settings: RoomSettings,
        mode: Mode,
        sink: Box<dyn LogSink>,
    ) -> Self {
        Self {
            id: id.into(),
            settings,
            mode,
            phase: Phase::Waiting,
            members: BTreeMap::new(),
            recorder: None,
            pending: BTreeMap::new(),
            sink,
            persist_failed: false,
            log_id: None,
            flagged: BTreeSet::new(),
            stats: RoomStats::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn settings(&self) -> &RoomSettings {
        &self.settings
    }

    pub fn is_running(&self) -> bool {
        matches!(self.phase, Phase::Running { .. })
    }

    pub fn is_ended(&self) -> bool {
        self.phase == Phase::Ended
    }

    pub fn members(&self) -> impl Iterator<Item = &ParticipantId> {
        self.members.keys()
    }

    pub fn is_member(&self, pid: &ParticipantId) -> bool {
        self.members.contains_key(pid)
    }

    pub fn is_connected(&self, pid: &ParticipantId) -> bool {
        self.members.get(pid).is_some_and(|m| m.connected)
    }

    /// Next tick to be processed, once the clock runs.
    pub fn next_tick(&self) -> Option<Tick> {
        self.recorder.as_ref().map(SessionRecorder::next_tick)
    }

    pub fn log_id(&self) -> Option<&str> {
        self.log_id.as_deref()
    }

    /// Participants caught sending frames under another id.
    pub fn flagged(&self) -> &BTreeSet<ParticipantId> {
        &self.flagged
    }

    pub fn stats(&self) -> RoomStats {
        self.stats
    }

    fn clock_tick(&self, now_ms: u64) -> Option<Tick> {
        match self.phase {
            Phase::Running { start_ms } => {
                Some(now_ms.saturating_sub(start_ms) / self.settings.tick.millis() as u64)
            }
            _ => None,
        }
    }

    /// Registers a participant. A member whose connection dropped may rejoin
    /// under the same id and keeps its state; a participant who left starts
    /// over with empty windows.
    pub fn join(
        &mut self,
        pid: ParticipantId,
        mode: Option<Mode>,
        now_ms: u64,
    ) -> Result<Vec<Delivery>, RoomError> {
        if self.is_ended() {
            return Err(RoomError::RoomClosed);
        }
        if let Some(m) = mode {
            if m != self.mode {
                return Err(RoomError::ModeMismatch(self.mode));
            }
        }
        let mut out = Vec::new();
        match self.members.get_mut(&pid) {
            Some(m) if m.connected => return Err(RoomError::DuplicateId(pid)),
            Some(m) => m.connected = true,
            None => {
                if self.members.len() >= self.settings.max_members {
                    return Err(RoomError::RoomFull);
                }
                self.members.insert(
                    pid.clone(),
                    Member {
                        connected: true,
                        last_valence: 0.0,
                    },
                );
                if let Some(rec) = self.recorder.as_mut() {
                    let record = rec
                        .join(pid.clone())
                        .expect("recorder membership mirrors the room");
                    self.append(&record);
                }
            }
        }

        let quorum =
            self.phase == Phase::Waiting && self.members.len() == self.settings.max_members;
        if quorum {
            self.start(now_ms);
        }
        out.push(Delivery {
            to: pid.clone(),
            msg: Message::Ack {
                room: self.id.clone(),
                pid: pid.clone(),
                tick_ms: self.settings.tick.millis(),
                cfg: self.settings.zones,
                mode: self.mode,
                tick: self.next_tick(),
            },
        });
        if quorum {
            out.extend(self.broadcast(Message::Start { tick: 0 }));
        }
        Ok(out)
    }

    fn start(&mut self, now_ms: u64) {
        let header = LogHeader {
            version: parley_core::log::LOG_VERSION,
            room: self.id.clone(),
            start_ms: now_ms,
            tick_ms: self.settings.tick,
            emit_every: self.settings.emit_every,
            mode: self.mode,
            cfg: self.settings.zones,
            members: self.members.keys().cloned().collect(),
        };
        self.recorder = Some(SessionRecorder::new(&header).expect("room settings are validated"));
        self.append(&LogRecord::Hdr(header));
        self.phase = Phase::Running { start_ms: now_ms };
        tracing::info!(room = %self.id, members = self.members.len(), "room clock started");
    }

    /// Accepts one frame from `sender` and runs every tick that became ready.
    pub fn ingest(
        &mut self,
        sender: &ParticipantId,
        frame: FrameMsg,
        now_ms: u64,
    ) -> Result<Vec<Delivery>, RoomError> {
        if self.is_ended() {
            return Err(RoomError::RoomClosed);
        }
        if !self.members.contains_key(sender) {
            return Err(RoomError::NotMember(sender.clone()));
        }
        if &frame.pid != sender {
            self.flagged.insert(sender.clone());
            tracing::warn!(room = %self.id, %sender, claimed = %frame.pid, "spoofed frame");
            return Err(RoomError::Spoofed {
                sender: sender.clone(),
                claimed: frame.pid,
            });
        }
        let (Some(next), Some(clock)) = (self.next_tick(), self.clock_tick(now_ms)) else {
            return Err(RoomError::NotStarted);
        };
        let frame = FeatureFrame::from(frame);
        frame
            .validate()
            .map_err(|e| RoomError::InvalidFrame(e.to_string()))?;
        if frame.tick < next {
            return Err(RoomError::StaleTick {
                tick: frame.tick,
                next,
            });
        }
        if frame.tick > clock + self.settings.max_lead_ticks {
            return Err(RoomError::FutureTick {
                tick: frame.tick,
                clock,
            });
        }
        let slot = self.pending.entry(frame.tick).or_default();
        if slot.contains_key(sender) {
            return Err(RoomError::DuplicateFrame(frame.tick));
        }
        slot.insert(sender.clone(), frame);
        self.stats.frames_accepted += 1;
        Ok(self.drain(now_ms))
    }

    /// Moves the clock to `now_ms`: runs overdue ticks and ends the session
    /// when its duration is reached.
    pub fn advance(&mut self, now_ms: u64) -> Vec<Delivery> {
        self.drain(now_ms)
    }

    pub fn leave(&mut self, pid: &ParticipantId, now_ms: u64) -> Result<Vec<Delivery>, RoomError> {
        if self.members.remove(pid).is_none() {
            return Err(RoomError::NotMember(pid.clone()));
        }
        for slot in self.pending.values_mut() {
            slot.remove(pid);
        }
        if let Some(record) = self.recorder.as_mut().and_then(|r| r.leave(pid)) {
            self.append(&record);
        }
        Ok(self.drain(now_ms))
    }

    /// The participant's connection went away without a `leave`. It stays a
    /// member; its frames are synthesized and its feedback is only logged.
    pub fn disconnect(&mut self, pid: &ParticipantId) {
        if let Some(m) = self.members.get_mut(pid) {
            m.connected = false;
        }
    }

    pub fn relay_signal(
        &mut self,
        from: &ParticipantId,
        to: ParticipantId,
        data: String,
    ) -> Result<Delivery, RoomError> {
        if self.is_ended() {
            return Err(RoomError::RoomClosed);
        }
        if !self.members.contains_key(from) {
            return Err(RoomError::NotMember(from.clone()));
        }
        if data.len() > self.settings.signal_cap_bytes {
            return Err(RoomError::PayloadTooLarge {
                size: data.len(),
                cap: self.settings.signal_cap_bytes,
            });
        }
        if !self.is_connected(&to) {
            return Err(RoomError::UnknownPeer(to));
        }
        tracing::debug!(room = %self.id, %from, %to, bytes = data.len(), "signal relayed");
        self.stats.signals_relayed += 1;
        Ok(Delivery {
            to: to.clone(),
            msg: Message::Sig {
                from: from.clone(),
                to,
                data,
            },
        })
    }

    /// Operator stop: ends the session now, keeping the log recorded so far.
    pub fn stop(&mut self) -> Vec<Delivery> {
        if self.is_ended() {
            return Vec::new();
        }
        self.end()
    }

    fn drain(&mut self, now_ms: u64) -> Vec<Delivery> {
        let mut out = Vec::new();
        while let (Some(next), Some(clock)) = (self.next_tick(), self.clock_tick(now_ms)) {
            if next >= self.settings.session_ticks {
                out.extend(self.end());
                break;
            }
            let complete = !self.members.is_empty()
                && self
                    .pending
                    .get(&next)
                    .is_some_and(|slot| slot.len() == self.members.len());
            let overdue = clock >= next + DEADLINE_TICKS;
            if !(complete || overdue) {
                break;
            }
            out.extend(self.run_tick(next));
        }
        out
    }

    fn run_tick(&mut self, tick: Tick) -> Vec<Delivery> {
        let received = self.pending.remove(&tick).unwrap_or_default();
        let mut frames = Vec::with_capacity(self.members.len());
        for (pid, member) in self.members.iter_mut() {
            match received.get(pid) {
                Some(f) => {
                    member.last_valence = f.raw_valence;
                    frames.push(f.clone());
                }
                None => {
                    self.stats.frames_synthesized += 1;
                    frames.push(FeatureFrame::silent(pid.clone(), tick, member.last_valence));
                }
            }
        }

        let recorder = self.recorder.as_mut().expect("running room has a recorder");
        let step = recorder
            .step(tick, &frames)
            .expect("frames are validated and complete");
        for record in &step.records {
            self.append(record);
        }
        self.stats.ticks += 1;

        let mut out = Vec::new();
        if step.emitted && self.mode == Mode::Feedback {
            for snap in &step.snapshots {
                if self.is_connected(&snap.participant) {
                    self.stats.feedback_sent += 1;
                    out.push(Delivery {
                        to: snap.participant.clone(),
                        msg: Message::Fb(snap.into()),
                    });
                } else {
                    self.stats.feedback_skipped += 1;
                }
            }
        }
        out
    }

    fn end(&mut self) -> Vec<Delivery> {
        let started = self.recorder.is_some();
        self.phase = Phase::Ended;
        self.pending.clear();
        if !started {
            return self.broadcast(Message::End { log: String::new() });
        }
        let finished = self.sink.finish();
        match finished {
            Ok(id) if !self.persist_failed => {
                tracing::info!(room = %self.id, log = %id, "session ended");
                self.log_id = Some(id.clone());
                self.broadcast(Message::End { log: id })
            }
            Ok(_) | Err(_) => {
                tracing::error!(room = %self.id, "session log could not be persisted");
                self.broadcast(Message::error(
                    "persistence",
                    "session log could not be persisted; partial log retained for recovery",
                ))
            }
        }
    }

    fn append(&mut self, record: &LogRecord) {
        if let Err(e) = self.sink.append(record) {
            if !self.persist_failed {
                tracing::error!(room = %self.id, "log append failed: {e}");
            }
            self.persist_failed = true;
        }
    }

    fn broadcast(&self, msg: Message) -> Vec<Delivery> {
        self.members
            .iter()
            .filter(|(_, m)| m.connected)
            .map(|(pid, _)| Delivery {
                to: pid.clone(),
                msg: msg.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sink::MemorySink;
    use parley_core::SessionLog;

    fn settings() -> RoomSettings {
        RoomSettings {
            session_ticks: 100,
            ..RoomSettings::default()
        }
    }

    fn room(mode: Mode) -> (RoomCore, MemorySink) {
        let sink = MemorySink::new("log-1");
        (
            RoomCore::new("r", settings(), mode, Box::new(sink.clone())),
            sink,
        )
    }

    fn pid(s: &str) -> ParticipantId {
        s.into()
    }

    fn frame(p: &str, tick: Tick, spk: bool) -> FrameMsg {
        FrameMsg {
            pid: pid(p),
            tick,
            spk,
            vol: if spk { 10.0 } else { 0.0 },
            val: 0.0,
        }
    }

    fn full_room(mode: Mode) -> (RoomCore, MemorySink) {
        let (mut r, sink) = room(mode);
        for p in ["a", "b", "c", "d"] {
            r.join(pid(p), None, 0).unwrap();
        }
        (r, sink)
    }

    #[test]
    fn quorum_starts_clock() {
        let (mut r, _) = room(Mode::Feedback);
        for p in ["a", "b", "c"] {
            let out = r.join(pid(p), None, 0).unwrap();
            assert_eq!(out.len(), 1);
            assert!(matches!(out[0].msg, Message::Ack { tick: None, .. }));
        }
        assert!(!r.is_running());
        let out = r.join(pid("d"), None, 0).unwrap();
        assert!(r.is_running());
        assert_eq!(r.next_tick(), Some(0));
        assert!(matches!(out[0].msg, Message::Ack { tick: Some(0), .. }));
        let starts: BTreeSet<_> = out[1..]
            .iter()
            .filter(|d| d.msg == Message::Start { tick: 0 })
            .map(|d| d.to.clone())
            .collect();
        assert_eq!(starts.len(), 4);
    }

    #[test]
    fn capacity_and_duplicates() {
        let (mut r, _) = full_room(Mode::Feedback);
        assert_eq!(r.join(pid("e"), None, 0), Err(RoomError::RoomFull));
        assert_eq!(
            r.join(pid("a"), None, 0),
            Err(RoomError::DuplicateId(pid("a")))
        );
        let (mut r, _) = room(Mode::Feedback);
        r.join(pid("a"), None, 0).unwrap();
        assert_eq!(
            r.join(pid("b"), Some(Mode::NoFeedback), 0),
            Err(RoomError::ModeMismatch(Mode::Feedback))
        );
    }

    #[test]
    fn complete_tick_steps_immediately() {
        let (mut r, _) = full_room(Mode::NoFeedback);
        for p in ["a", "b", "c"] {
            assert!(r.ingest(&pid(p), frame(p, 0, false), 0).unwrap().is_empty());
        }
        assert_eq!(r.next_tick(), Some(0));
        r.ingest(&pid("d"), frame("d", 0, true), 0).unwrap();
        assert_eq!(r.next_tick(), Some(1));
        assert_eq!(r.stats().frames_synthesized, 0);
    }

    #[test]
    fn deadline_synthesizes_missing_frames() {
        let (mut r, _) = full_room(Mode::Feedback);
        for p in ["a", "b", "c"] {
            r.ingest(&pid(p), frame(p, 0, true), 0).unwrap();
        }
        // Tick 0 is forced once the clock is two ticks past it.
        assert!(r.advance(199).is_empty());
        assert_eq!(r.next_tick(), Some(0));
        r.advance(200);
        assert_eq!(r.next_tick(), Some(1));
        assert_eq!(r.stats().frames_synthesized, 1);
        r.advance(300);
        assert_eq!(r.next_tick(), Some(2));
        assert_eq!(r.stats().frames_synthesized, 1 + 4);
    }

    #[test]
    fn feedback_goes_to_subject_only() {
        let (mut r, _) = full_room(Mode::Feedback);
        let mut delivered = Vec::new();
        for t in 0..10 {
            for p in ["a", "b", "c", "d"] {
                delivered.extend(r.ingest(&pid(p), frame(p, t, p == "a"), t * 100).unwrap());
            }
        }
        let fbs: Vec<_> = delivered
            .iter()
            .filter_map(|d| match &d.msg {
                Message::Fb(f) => Some((d.to.clone(), f.pid.clone(), f.tick)),
                _ => None,
            })
            .collect();
        assert_eq!(fbs.len(), 4);
        assert!(fbs
            .iter()
            .all(|(to, subject, tick)| to == subject && *tick == 9));
        let recipients: BTreeSet<_> = fbs.iter().map(|f| f.0.clone()).collect();
        assert_eq!(recipients.len(), 4);
    }

    #[test]
    fn no_feedback_mode_only_logs() {
        let (mut r, sink) = full_room(Mode::NoFeedback);
        let mut delivered = Vec::new();
        for t in 0..20 {
            for p in ["a", "b", "c", "d"] {
                delivered.extend(r.ingest(&pid(p), frame(p, t, true), t * 100).unwrap());
            }
        }
        assert!(delivered.is_empty());
        let log = SessionLog::parse(sink.contents().as_bytes()).unwrap();
        let fbs = log
            .records
            .iter()
            .filter(|(_, r)| matches!(r, LogRecord::Fb(_)))
            .count();
        assert_eq!(fbs, 8);
    }

    #[test]
    fn disconnected_recipient_is_skipped() {
        let (mut r, _) = full_room(Mode::Feedback);
        r.disconnect(&pid("b"));
        let mut delivered = Vec::new();
        for t in 0..10 {
            for p in ["a", "c", "d"] {
                delivered.extend(r.ingest(&pid(p), frame(p, t, false), t * 100).unwrap());
            }
        }
        delivered.extend(r.advance(1100));
        let to: Vec<_> = delivered.iter().map(|d| d.to.as_str()).collect();
        assert_eq!(to, vec!["a", "c", "d"]);
        assert_eq!(r.stats().feedback_skipped, 1);
    }

    #[test]
    fn ingest_errors() {
        let (mut r, _) = room(Mode::Feedback);
        r.join(pid("a"), None, 0).unwrap();
        assert_eq!(
            r.ingest(&pid("a"), frame("a", 0, true), 0),
            Err(RoomError::NotStarted)
        );
        for p in ["b", "c", "d"] {
            r.join(pid(p), None, 0).unwrap();
        }
        assert!(matches!(
            r.ingest(&pid("a"), frame("b", 0, true), 0),
            Err(RoomError::Spoofed { .. })
        ));
        assert!(r.flagged().contains(&pid("a")));
        assert_eq!(
            r.ingest(&pid("z"), frame("z", 0, true), 0),
            Err(RoomError::NotMember(pid("z")))
        );
        r.ingest(&pid("a"), frame("a", 0, true), 0).unwrap();
        assert_eq!(
            r.ingest(&pid("a"), frame("a", 0, true), 0),
            Err(RoomError::DuplicateFrame(0))
        );
        assert!(matches!(
            r.ingest(&pid("a"), frame("a", 500, true), 0),
            Err(RoomError::FutureTick { .. })
        ));
        let mut bad = frame("a", 1, true);
        bad.vol = 101.0;
        assert!(matches!(
            r.ingest(&pid("a"), bad, 0),
            Err(RoomError::InvalidFrame(_))
        ));
        r.advance(1000);
        assert_eq!(
            r.ingest(&pid("a"), frame("a", 3, true), 1000),
            Err(RoomError::StaleTick { tick: 3, next: 9 })
        );
    }

    #[test]
    fn rejoin_after_leave_resets_participant() {
        let (mut r, sink) = full_room(Mode::Feedback);
        let mut last = Vec::new();
        for t in 0..10 {
            for p in ["a", "b", "c", "d"] {
                last.extend(r.ingest(&pid(p), frame(p, t, true), t * 100).unwrap());
            }
        }
        r.leave(&pid("b"), 1000).unwrap();
        assert_eq!(r.join(pid("e"), None, 1000).unwrap().len(), 1);
        assert_eq!(r.join(pid("b"), None, 1000), Err(RoomError::RoomFull));
        r.leave(&pid("e"), 1000).unwrap();
        let ack = r.join(pid("b"), None, 1000).unwrap();
        assert!(matches!(ack[0].msg, Message::Ack { tick: Some(10), .. }));
        let mut out = Vec::new();
        for t in 10..20 {
            for p in ["a", "b", "c", "d"] {
                out.extend(r.ingest(&pid(p), frame(p, t, p != "b"), t * 100).unwrap());
            }
        }
        let fb_b = out
            .iter()
            .find_map(|d| match &d.msg {
                Message::Fb(f) if f.pid == pid("b") => Some(f.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(fb_b.part_pct, 0.0);
        assert_eq!(fb_b.intr, 0);
        let log = sink.contents();
        assert!(log.contains(r#"{"t":"leave","pid":"b","tick":10}"#));
        assert!(log.contains(r#"{"t":"join","pid":"b","tick":10}"#));
    }

    #[test]
    fn reattach_after_disconnect_keeps_state() {
        let (mut r, _) = full_room(Mode::Feedback);
        r.disconnect(&pid("a"));
        let out = r.join(pid("a"), None, 0).unwrap();
        assert!(matches!(out[0].msg, Message::Ack { tick: Some(0), .. }));
        assert!(r.is_connected(&pid("a")));
    }

    #[test]
    fn session_ends_after_duration() {
        let (mut r, sink) = full_room(Mode::Feedback);
        let out = r.advance(100 * 100 + 200);
        assert!(r.is_ended());
        let ends: Vec<_> = out
            .iter()
            .filter(|d| {
                d.msg
                    == Message::End {
                        log: "log-1".into(),
                    }
            })
            .collect();
        assert_eq!(ends.len(), 4);
        assert!(sink.is_finished());
        assert_eq!(r.stats().ticks, 100);
        assert_eq!(
            r.ingest(&pid("a"), frame("a", 100, true), 10_200),
            Err(RoomError::RoomClosed)
        );
    }

    #[test]
    fn operator_stop_truncates() {
        let (mut r, sink) = full_room(Mode::Feedback);
        r.advance(3000);
        let out = r.stop();
        assert_eq!(out.len(), 4);
        let log = SessionLog::parse(sink.contents().as_bytes()).unwrap();
        let last = log.records.last().unwrap().1.tick().unwrap();
        assert_eq!(last, 28);
        assert!(r.stop().is_empty());
    }

    #[test]
    fn signals() {
        let (mut r, _) = full_room(Mode::Feedback);
        let payload = "x".repeat(64 * 1024);
        let d = r
            .relay_signal(&pid("a"), pid("b"), payload.clone())
            .unwrap();
        assert_eq!(d.to, pid("b"));
        assert_eq!(
            d.msg,
            Message::Sig {
                from: pid("a"),
                to: pid("b"),
                data: payload
            }
        );
        assert_eq!(
            r.relay_signal(&pid("a"), pid("q"), "hi".into()),
            Err(RoomError::UnknownPeer(pid("q")))
        );
        assert!(matches!(
            r.relay_signal(&pid("a"), pid("b"), "x".repeat(256 * 1024 + 1)),
            Err(RoomError::PayloadTooLarge { .. })
        ));
        assert!(r
            .relay_signal(&pid("a"), pid("b"), "x".repeat(256 * 1024))
            .is_ok());
    }

    struct FailingSink;

    impl LogSink for FailingSink {
        fn append(&mut self, _: &LogRecord) -> std::io::Result<()> {
            Ok(())
        }
        fn finish(&mut self) -> std::io::Result<String> {
            Err(std::io::Error::other("disk gone"))
        }
    }

    #[test]
    fn persistence_failure_reported_to_all() {
        let mut r = RoomCore::new("r", settings(), Mode::Feedback, Box::new(FailingSink));
        for p in ["a", "b", "c", "d"] {
            r.join(pid(p), None, 0).unwrap();
        }
        let out = r.stop();
        assert_eq!(out.len(), 4);
        assert!(out
            .iter()
            .all(|d| matches!(&d.msg, Message::Err { code, .. } if code == "persistence")));
    }
}
