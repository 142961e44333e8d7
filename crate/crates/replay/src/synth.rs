//! Scripted session generator.
//!
//! A script gives each participant a list of piecewise-constant segments.
//! Outside every segment a participant is silent at volume 0 with neutral
//! valence. Optional jitter perturbs volume and valence with seeded uniform
//! noise, so a script plus a seed always yields the same log.

use parley_core::log::LOG_VERSION;
use parley_core::{
    FeatureFrame, LogError, LogHeader, Mode, ParticipantId, SessionLog, SessionRecorder, StepError,
    TickDuration, ZoneConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from_s: f64,
    pub to_s: f64,
    #[serde(default)]
    pub speaking: bool,
    #[serde(default)]
    pub volume: f64,
    #[serde(default)]
    pub valence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantScript {
    pub pid: ParticipantId,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    #[serde(default)]
    pub volume: f64,
    #[serde(default)]
    pub valence: f64,
}

fn default_room() -> String {
    "synth".into()
}

fn default_tick() -> TickDuration {
    TickDuration::DEFAULT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_room")]
    pub room: String,
    #[serde(default = "default_tick")]
    pub tick_ms: TickDuration,
    pub duration_s: f64,
    /// Ticks between feedback emissions; one second's worth when absent.
    #[serde(default)]
    pub emit_every: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub start_ms: u64,
    #[serde(default)]
    pub cfg: ZoneConfig,
    #[serde(default)]
    pub jitter: Jitter,
    pub participants: Vec<ParticipantScript>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{pid}: segments [{a_from}, {a_to}) and [{b_from}, {b_to}) overlap")]
    Conflict {
        pid: ParticipantId,
        a_from: f64,
        a_to: f64,
        b_from: f64,
        b_to: f64,
    },
    #[error("{pid}: invalid segment [{from}, {to}): {why}")]
    Segment {
        pid: ParticipantId,
        from: f64,
        to: f64,
        why: &'static str,
    },
    #[error("participant {0} listed twice")]
    DuplicateParticipant(ParticipantId),
    #[error("script needs at least one participant and a positive duration")]
    Empty,
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Step(#[from] StepError),
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.participants.is_empty() || self.duration_s.is_nan() || self.duration_s <= 0.0 {
            return Err(SynthError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.participants {
            if !seen.insert(&p.pid) {
                return Err(SynthError::DuplicateParticipant(p.pid.clone()));
            }
            let bad = |s: &Segment, why| SynthError::Segment {
                pid: p.pid.clone(),
                from: s.from_s,
                to: s.to_s,
                why,
            };
            for s in &p.segments {
                if !(s.from_s >= 0.0 && s.from_s < s.to_s) {
                    return Err(bad(s, "needs 0 <= from < to"));
                }
                if !(0.0..=100.0).contains(&s.volume) {
                    return Err(bad(s, "volume outside [0, 100]"));
                }
                if !(-100.0..=100.0).contains(&s.valence) {
                    return Err(bad(s, "valence outside [-100, 100]"));
                }
            }
            let mut sorted: Vec<&Segment> = p.segments.iter().collect();
            sorted.sort_by(|a, b| a.from_s.total_cmp(&b.from_s));
            for w in sorted.windows(2) {
                if w[1].from_s < w[0].to_s {
                    return Err(SynthError::Conflict {
                        pid: p.pid.clone(),
                        a_from: w[0].from_s,
                        a_to: w[0].to_s,
                        b_from: w[1].from_s,
                        b_to: w[1].to_s,
                    });
                }
            }
        }
        Ok(())
    }

    fn header(&self) -> LogHeader {
        LogHeader {
            version: LOG_VERSION,
            room: self.room.clone(),
            start_ms: self.start_ms,
            tick_ms: self.tick_ms,
            emit_every: self
                .emit_every
                .unwrap_or_else(|| self.tick_ms.ticks_for(1.0)),
            mode: self.mode,
            cfg: self.cfg,
            members: self.participants.iter().map(|p| p.pid.clone()).collect(),
        }
    }
}

/// Segment bounds snapped to the nearest tick, so `[0.0, 2.9)` at 100 ms
/// covers exactly 29 ticks.
fn tick_of(seconds: f64, tick: TickDuration) -> u64 {
    (seconds * 1000.0 / tick.millis() as f64).round() as u64
}

fn segment_at(segments: &[Segment], tick: u64, dur: TickDuration) -> Option<&Segment> {
    segments
        .iter()
        .find(|s| tick_of(s.from_s, dur) <= tick && tick < tick_of(s.to_s, dur))
}

/// Builds the session log a room fed with this script would have written.
pub fn synth(spec: &SynthSpec, seed: u64) -> Result<SessionLog, SynthError> {
    spec.validate()?;
    let header = spec.header();
    let mut recorder = SessionRecorder::new(&header)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ticks = spec.tick_ms.ticks_for(spec.duration_s);

    let mut records = Vec::new();
    for tick in 0..ticks {
        let frames: Vec<FeatureFrame> = spec
            .participants
            .iter()
            .map(|p| {
                let (speaking, mut volume, mut valence) =
                    match segment_at(&p.segments, tick, spec.tick_ms) {
                        Some(s) => (s.speaking, s.volume, s.valence),
                        None => (false, 0.0, 0.0),
                    };
                if spec.jitter.volume > 0.0 {
                    volume += rng.gen_range(-spec.jitter.volume..=spec.jitter.volume);
                }
                if spec.jitter.valence > 0.0 {
                    valence += rng.gen_range(-spec.jitter.valence..=spec.jitter.valence);
                }
                FeatureFrame::new(
                    p.pid.clone(),
                    tick,
                    speaking,
                    volume.clamp(0.0, 100.0),
                    valence.clamp(-100.0, 100.0),
                )
            })
            .collect();
        let out = recorder.step(tick, &frames)?;
        records.extend(out.records);
    }
    Ok(SessionLog {
        header,
        records: records
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i + 2, r))
            .collect(),
    })
}
