//! Session log: a header line followed by tick-ordered records, one JSON
//! object per line, sharing the wire schema for frames and feedback.
//!
//! Within a tick, records appear as membership changes (effective from that
//! tick), then every frame fed to the step, then the feedback emitted for it.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ConfigError, StepError};
use crate::frame::{FeatureFrame, ParticipantId, Tick, TickDuration};
use crate::room::{FeedbackSnapshot, RoomState};
use crate::wire::{FeedbackMsg, FrameMsg, Mode};
use crate::zone::ZoneConfig;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub room: String,
    /// Wall-clock start of the session, milliseconds since the Unix epoch.
    pub start_ms: u64,
    pub tick_ms: TickDuration,
    /// Feedback is emitted on ticks where `(tick + 1) % emit_every == 0`.
    pub emit_every: u64,
    pub mode: Mode,
    pub cfg: ZoneConfig,
    /// Participants present when the clock started at tick 0.
    pub members: Vec<ParticipantId>,
}

impl LogHeader {
    pub fn validate(&self) -> Result<(), LogError> {
        if self.version != LOG_VERSION {
            return Err(LogError::UnsupportedVersion(self.version));
        }
        self.cfg.validate()?;
        if self.emit_every == 0 {
            return Err(LogError::Config(ConfigError::NonPositive("emit_every")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum LogRecord {
    Hdr(LogHeader),
    Join { pid: ParticipantId, tick: Tick },
    Leave { pid: ParticipantId, tick: Tick },
    Frame(FrameMsg),
    Fb(FeedbackMsg),
}

impl LogRecord {
    pub fn tick(&self) -> Option<Tick> {
        match self {
            LogRecord::Hdr(_) => None,
            LogRecord::Join { tick, .. } | LogRecord::Leave { tick, .. } => Some(*tick),
            LogRecord::Frame(f) => Some(f.tick),
            LogRecord::Fb(f) => Some(f.tick),
        }
    }

    pub fn write_line<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("record serialization is infallible");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("log has no header record")]
    MissingHeader,
    #[error("unsupported log version {0}")]
    UnsupportedVersion(u32),
    #[error("header config rejected: {0}")]
    Config(#[from] ConfigError),
    #[error("line {line}: tick {tick} precedes tick {prev}")]
    Unordered { line: usize, tick: Tick, prev: Tick },
}

/// A parsed log. Records keep their 1-based source line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<(usize, LogRecord)>,
}

impl SessionLog {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, LogError> {
        let mut header = None;
        let mut records = Vec::new();
        let mut prev: Option<Tick> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            match (rec, header.is_some()) {
                (LogRecord::Hdr(h), false) => {
                    h.validate()?;
                    header = Some(h);
                }
                (LogRecord::Hdr(_), true) => {
                    return Err(LogError::Parse {
                        line: lineno,
                        msg: "second header record".into(),
                    })
                }
                (_, false) => return Err(LogError::MissingHeader),
                (rec, true) => {
                    let tick = rec.tick().expect("non-header records carry a tick");
                    if let Some(p) = prev {
                        if tick < p {
                            return Err(LogError::Unordered {
                                line: lineno,
                                tick,
                                prev: p,
                            });
                        }
                    }
                    prev = Some(tick);
                    records.push((lineno, rec));
                }
            }
        }
        let header = header.ok_or(LogError::MissingHeader)?;
        Ok(Self { header, records })
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        LogRecord::Hdr(self.header.clone()).write_line(&mut w)?;
        for (_, r) in &self.records {
            r.write_line(&mut w)?;
        }
        Ok(())
    }
}

pub fn is_emission_tick(tick: Tick, emit_every: u64) -> bool {
    (tick + 1).is_multiple_of(emit_every)
}

/// Output of one recorded tick.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedTick {
    /// Every participant's snapshot, emitted or not.
    pub snapshots: Vec<FeedbackSnapshot>,
    /// Whether this tick falls on the emission cadence.
    pub emitted: bool,
    /// Log lines for the tick: frames, then feedback when emitted.
    pub records: Vec<LogRecord>,
}

/// Drives a [`RoomState`] and turns each step into log records.
#[derive(Debug, Clone)]
pub struct SessionRecorder {
    state: RoomState,
    emit_every: u64,
}

impl SessionRecorder {
    pub fn new(header: &LogHeader) -> Result<Self, LogError> {
        header.validate()?;
        let mut state = RoomState::new(header.cfg, header.tick_ms)?;
        for pid in &header.members {
            state
                .add_participant(pid.clone())
                .map_err(|e| LogError::Parse {
                    line: 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(Self {
            state,
            emit_every: header.emit_every,
        })
    }

    pub fn state(&self) -> &RoomState {
        &self.state
    }

    pub fn next_tick(&self) -> Tick {
        self.state.next_tick()
    }

    pub fn join(&mut self, pid: ParticipantId) -> Result<LogRecord, StepError> {
        self.state.add_participant(pid.clone())?;
        Ok(LogRecord::Join {
            pid,
            tick: self.state.next_tick(),
        })
    }

    pub fn leave(&mut self, pid: &ParticipantId) -> Option<LogRecord> {
        self.state
            .remove_participant(pid)
            .then(|| LogRecord::Leave {
                pid: pid.clone(),
                tick: self.state.next_tick(),
            })
    }

    pub fn step(&mut self, tick: Tick, frames: &[FeatureFrame]) -> Result<RecordedTick, StepError> {
        let snapshots = self.state.step(tick, frames)?;
        let emitted = is_emission_tick(tick, self.emit_every);
        let mut sorted: Vec<&FeatureFrame> = frames.iter().collect();
        sorted.sort_by(|a, b| a.participant.cmp(&b.participant));
        let mut records: Vec<LogRecord> = sorted
            .into_iter()
            .map(|f| LogRecord::Frame(f.into()))
            .collect();
        if emitted {
            records.extend(snapshots.iter().map(|s| LogRecord::Fb(s.into())));
        }
        Ok(RecordedTick {
            snapshots,
            emitted,
            records,
        })
    }
}
