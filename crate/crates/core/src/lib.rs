//! Feedback metrics for small-group discussions.
//!
//! Each participant streams one [`FeatureFrame`] per tick: a voice-activity
//! flag, a microphone level and a facial valence score. [`RoomState::step`]
//! folds a complete set of frames into four private feedback signals per
//! participant:
//!
//! - participation: share of the trailing window spent speaking, banded
//!   low / mid / high;
//! - interruptions: how many sustained overlapping-speech episodes the
//!   participant was part of;
//! - volume: smoothed microphone level, banded with a noise floor;
//! - emotion: smoothed valence rescaled to 0-100, banded negative / neutral
//!   / positive.
//!
//! Everything here is a pure function of the frames fed in. There is no
//! clock and no I/O apart from the session-log codec in [`log`].

pub mod error;
pub mod frame;
pub mod log;
pub mod overlap;
pub mod room;
pub mod window;
pub mod wire;
pub mod zone;

pub use error::{ConfigError, FrameError, SequenceError, StepError};
pub use frame::{FeatureFrame, ParticipantId, Tick, TickDuration};
pub use log::{LogError, LogHeader, LogRecord, SessionLog, SessionRecorder};
pub use overlap::OverlapTracker;
pub use room::{FeedbackSnapshot, RoomState};
pub use window::{smooth, ParticipationWindow, RecentSamples};
pub use wire::{FeedbackMsg, FrameMsg, Message, Mode};
pub use zone::{
    classify_emotion, classify_participation, classify_volume, remap_valence, EmotionZone, Level,
    VolumeZone, ZoneColor, ZoneConfig,
};
