//! Per-room metrics state and the tick step that turns frames into feedback.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, StepError};
use crate::frame::{FeatureFrame, ParticipantId, Tick, TickDuration};
use crate::overlap::OverlapTracker;
use crate::window::{ParticipationWindow, RecentSamples};
use crate::zone::{
    classify_emotion, classify_participation, classify_volume, remap_valence, EmotionZone, Level,
    VolumeZone, ZoneConfig,
};

/// One participant's private feedback state after a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSnapshot {
    pub participant: ParticipantId,
    pub tick: Tick,
    pub participation_pct: f64,
    pub participation_zone: Level,
    pub interruption_count: u64,
    pub volume_zone: VolumeZone,
    /// Smoothed level over non-noise samples; 0 when there is none.
    pub volume_smoothed: f64,
    pub emotion_score: f64,
    pub emotion_zone: EmotionZone,
}

impl FeedbackSnapshot {
    /// True when every zone matches its score under `cfg`.
    pub fn zones_consistent(&self, cfg: &ZoneConfig) -> bool {
        classify_participation(self.participation_pct, cfg) == self.participation_zone
            && classify_emotion(self.emotion_score, cfg) == self.emotion_zone
            && classify_volume(self.volume_smoothed, cfg) == self.volume_zone
    }
}

#[derive(Debug, Clone)]
struct ParticipantState {
    talk: ParticipationWindow,
    volume: RecentSamples,
    valence: RecentSamples,
}

/// Metrics state for one room: windows and smoothers per participant plus
/// the shared overlap tracker.
#[derive(Debug, Clone)]
pub struct RoomState {
    cfg: ZoneConfig,
    tick_duration: TickDuration,
    next_tick: Tick,
    members: BTreeMap<ParticipantId, ParticipantState>,
    overlaps: OverlapTracker,
}

impl RoomState {
    pub fn new(cfg: ZoneConfig, tick_duration: TickDuration) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            overlaps: OverlapTracker::new(tick_duration.ticks_for(cfg.interruption_threshold_s)),
            cfg,
            tick_duration,
            next_tick: 0,
            members: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &ZoneConfig {
        &self.cfg
    }

    pub fn tick_duration(&self) -> TickDuration {
        self.tick_duration
    }

    /// The tick the next call to [`RoomState::step`] must carry.
    pub fn next_tick(&self) -> Tick {
        self.next_tick
    }

    pub fn members(&self) -> impl Iterator<Item = &ParticipantId> {
        self.members.keys()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, pid: &ParticipantId) -> bool {
        self.members.contains_key(pid)
    }

    pub fn interruption_count(&self, pid: &ParticipantId) -> Option<u64> {
        self.overlaps.count(pid)
    }

    /// Adds a participant with empty windows; it takes part from the next tick on.
    pub fn add_participant(&mut self, pid: ParticipantId) -> Result<(), StepError> {
        if self.members.contains_key(&pid) {
            return Err(StepError::AlreadyPresent(pid));
        }
        self.overlaps.add_participant(pid.clone())?;
        let d = self.tick_duration;
        self.members.insert(
            pid,
            ParticipantState {
                talk: ParticipationWindow::new(
                    d.ticks_for(self.cfg.participation_window_s) as usize
                ),
                volume: RecentSamples::new(d.ticks_for(self.cfg.volume_smoothing_s) as usize),
                valence: RecentSamples::new(d.ticks_for(self.cfg.valence_smoothing_s) as usize),
            },
        );
        Ok(())
    }

    /// Drops all state for a participant. A later re-add starts from scratch.
    pub fn remove_participant(&mut self, pid: &ParticipantId) -> bool {
        self.overlaps.remove_participant(pid);
        self.members.remove(pid).is_some()
    }

    /// Advances the room by one tick. `frames` must hold exactly one frame
    /// per member, all stamped `tick`, and `tick` must equal
    /// [`RoomState::next_tick`]. On error the state is left unchanged.
    /// Snapshots come back ordered by participant id.
    pub fn step(
        &mut self,
        tick: Tick,
        frames: &[FeatureFrame],
    ) -> Result<Vec<FeedbackSnapshot>, StepError> {
        if tick != self.next_tick {
            let participant = frames
                .first()
                .map(|f| f.participant.clone())
                .or_else(|| self.members.keys().next().cloned())
                .unwrap_or_else(|| ParticipantId::from("-"));
            return Err(StepError::OutOfOrder {
                participant,
                expected: self.next_tick,
                got: tick,
            });
        }
        for f in frames {
            if f.tick != tick {
                return Err(StepError::OutOfOrder {
                    participant: f.participant.clone(),
                    expected: tick,
                    got: f.tick,
                });
            }
            f.validate()?;
        }

        if self.members.is_empty() {
            if let Some(f) = frames.first() {
                return Err(StepError::UnknownParticipant(f.participant.clone()));
            }
        } else {
            // Checks membership and completeness before anything is touched.
            self.overlaps.update(frames)?;
        }

        let mut snapshots = Vec::with_capacity(frames.len());
        for f in frames {
            let state = self
                .members
                .get_mut(&f.participant)
                .expect("membership checked");
            let pct = state
                .talk
                .update(tick, f.speaking)
                .map_err(|e| StepError::OutOfOrder {
                    participant: f.participant.clone(),
                    expected: e.expected,
                    got: e.got,
                })?;
            state.volume.push(f.volume);
            state.valence.push(f.raw_valence);

            let volume_smoothed = state
                .volume
                .mean_above(self.cfg.volume.noise_max)
                .unwrap_or(0.0);
            let valence = state.valence.mean().unwrap_or(0.0);
            let emotion_score = remap_valence(valence);
            snapshots.push(FeedbackSnapshot {
                participant: f.participant.clone(),
                tick,
                participation_pct: pct,
                participation_zone: classify_participation(pct, &self.cfg),
                interruption_count: self.overlaps.count(&f.participant).unwrap_or(0),
                volume_zone: classify_volume(volume_smoothed, &self.cfg),
                volume_smoothed,
                emotion_score,
                emotion_zone: classify_emotion(emotion_score, &self.cfg),
            });
        }
        snapshots.sort_by(|a, b| a.participant.cmp(&b.participant));
        self.next_tick = tick + 1;
        Ok(snapshots)
    }
}
