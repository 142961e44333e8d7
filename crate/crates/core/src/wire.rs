//! Newline-delimited JSON messages exchanged between clients and the room server.
//!
//! Every message is one JSON object on its own line (or in its own WebSocket
//! text frame), discriminated by `"t"`.

use serde::{Deserialize, Serialize};

use crate::frame::{FeatureFrame, ParticipantId, Tick};
use crate::room::FeedbackSnapshot;
use crate::zone::{EmotionZone, Level, VolumeZone, ZoneConfig};

/// Whether computed feedback is shown to participants or only recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Feedback,
    NoFeedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMsg {
    pub pid: ParticipantId,
    pub tick: Tick,
    pub spk: bool,
    pub vol: f64,
    pub val: f64,
}

impl From<&FeatureFrame> for FrameMsg {
    fn from(f: &FeatureFrame) -> Self {
        Self {
            pid: f.participant.clone(),
            tick: f.tick,
            spk: f.speaking,
            vol: f.volume,
            val: f.raw_valence,
        }
    }
}

impl From<FrameMsg> for FeatureFrame {
    fn from(m: FrameMsg) -> Self {
        FeatureFrame::new(m.pid, m.tick, m.spk, m.vol, m.val)
    }
}

/// Wire form of a [`FeedbackSnapshot`]. The smoothed volume level is not
/// transmitted; only its zone is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMsg {
    pub pid: ParticipantId,
    pub tick: Tick,
    pub part_pct: f64,
    pub part_zone: Level,
    pub intr: u64,
    pub vol_zone: VolumeZone,
    pub emo: f64,
    pub emo_zone: EmotionZone,
}

impl From<&FeedbackSnapshot> for FeedbackMsg {
    fn from(s: &FeedbackSnapshot) -> Self {
        Self {
            pid: s.participant.clone(),
            tick: s.tick,
            part_pct: s.participation_pct,
            part_zone: s.participation_zone,
            intr: s.interruption_count,
            vol_zone: s.volume_zone,
            emo: s.emotion_score,
            emo_zone: s.emotion_zone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum Message {
    Join {
        room: String,
        pid: ParticipantId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Mode>,
    },
    Ack {
        room: String,
        pid: ParticipantId,
        tick_ms: u32,
        cfg: ZoneConfig,
        mode: Mode,
        /// First tick this participant sends, once the room clock runs.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tick: Option<Tick>,
    },
    /// Room clock started; frames are expected from `tick` on.
    Start {
        tick: Tick,
    },
    Frame(FrameMsg),
    Fb(FeedbackMsg),
    Sig {
        from: ParticipantId,
        to: ParticipantId,
        data: String,
    },
    Leave {
        pid: ParticipantId,
    },
    End {
        log: String,
    },
    Err {
        code: String,
        msg: String,
    },
}

impl Message {
    pub fn error(code: impl Into<String>, msg: impl Into<String>) -> Self {
        Message::Err {
            code: code.into(),
            msg: msg.into(),
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("message serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
    }
}
