use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FrameError};

/// Opaque participant handle, unique within a room.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParticipantId(String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Result<Self, FrameError> {
        let id = id.into();
        if id.is_empty() {
            return Err(FrameError::EmptyParticipant);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ParticipantId {
    type Error = FrameError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<ParticipantId> for String {
    fn from(p: ParticipantId) -> String {
        p.0
    }
}

impl From<&str> for ParticipantId {
    /// Panics on an empty string; use [`ParticipantId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        Self::new(s).expect("participant id must be non-empty")
    }
}

/// Index of a fixed-length sampling interval since the session clock started.
pub type Tick = u64;

/// Length of one tick in milliseconds, constrained to `[20, 1000]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct TickDuration(u32);

impl TickDuration {
    pub const DEFAULT: TickDuration = TickDuration(100);

    pub fn from_millis(ms: u32) -> Result<Self, ConfigError> {
        if (20..=1000).contains(&ms) {
            Ok(Self(ms))
        } else {
            Err(ConfigError::TickDuration(ms))
        }
    }

    pub fn millis(self) -> u32 {
        self.0
    }

    /// Whole number of ticks needed to cover `seconds`, rounding up.
    pub fn ticks_for(self, seconds: f64) -> u64 {
        let ms = (seconds * 1000.0).round() as u64;
        ms.div_ceil(self.0 as u64).max(1)
    }
}

impl Default for TickDuration {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<u32> for TickDuration {
    type Error = ConfigError;

    fn try_from(ms: u32) -> Result<Self, Self::Error> {
        Self::from_millis(ms)
    }
}

impl From<TickDuration> for u32 {
    fn from(d: TickDuration) -> u32 {
        d.0
    }
}

/// One participant's raw signals for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub participant: ParticipantId,
    pub tick: Tick,
    /// Voice-activity decision.
    pub speaking: bool,
    /// Microphone level, percent of range.
    pub volume: f64,
    /// Facial valence on the signed `[-100, 100]` scale.
    pub raw_valence: f64,
}

impl FeatureFrame {
    pub fn new(
        participant: ParticipantId,
        tick: Tick,
        speaking: bool,
        volume: f64,
        raw_valence: f64,
    ) -> Self {
        Self {
            participant,
            tick,
            speaking,
            volume,
            raw_valence,
        }
    }

    /// Stand-in for a participant who sent nothing this tick.
    pub fn silent(participant: ParticipantId, tick: Tick, raw_valence: f64) -> Self {
        Self::new(participant, tick, false, 0.0, raw_valence)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !(0.0..=100.0).contains(&self.volume) {
            return Err(FrameError::Volume(self.volume));
        }
        if !(-100.0..=100.0).contains(&self.raw_valence) {
            return Err(FrameError::Valence(self.raw_valence));
        }
        Ok(())
    }
}
