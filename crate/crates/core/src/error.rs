use thiserror::Error;

use crate::frame::{ParticipantId, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} bounds must be strictly increasing within [0, 100]")]
    Bounds(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("tick duration {0} ms outside [20, 1000]")]
    TickDuration(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("participant id must be non-empty")]
    EmptyParticipant,
    #[error("volume {0} outside [0, 100]")]
    Volume(f64),
    #[error("valence {0} outside [-100, 100]")]
    Valence(f64),
}

/// A per-participant update arrived for a tick other than the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("expected tick {expected}, got {got}")]
pub struct SequenceError {
    pub expected: Tick,
    pub got: Tick,
}

/// Errors raised while advancing metrics state.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("{participant}: expected tick {expected}, got {got}")]
    OutOfOrder {
        participant: ParticipantId,
        expected: u64,
        got: u64,
    },
    #[error("frames for tick {0} span more than one tick")]
    MixedTicks(u64),
    #[error("missing frame for {0}")]
    MissingFrame(ParticipantId),
    #[error("duplicate frame for {0}")]
    DuplicateFrame(ParticipantId),
    #[error("frame for {0}, who is not in the room")]
    UnknownParticipant(ParticipantId),
    #[error("{0} is already in the room")]
    AlreadyPresent(ParticipantId),
    #[error("step called with no frames")]
    Empty,
    #[error(transparent)]
    InvalidFrame(#[from] FrameError),
}
