//! Pairwise simultaneous-speech tracking.
//!
//! Every unordered pair of participants has its own run counter. A run that
//! reaches the threshold charges one interruption to both members of the
//! pair and latches until the pair stops overlapping, so one continuous
//! episode counts once no matter how long it lasts. With three or more
//! simultaneous speakers each pair is charged independently.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::StepError;
use crate::frame::{FeatureFrame, ParticipantId, Tick};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct PairRun {
    ticks: u64,
    latched: bool,
}

#[derive(Debug, Clone)]
pub struct OverlapTracker {
    threshold_ticks: u64,
    counts: BTreeMap<ParticipantId, u64>,
    // Only pairs currently overlapping have an entry.
    runs: BTreeMap<(ParticipantId, ParticipantId), PairRun>,
}

impl OverlapTracker {
    pub fn new(threshold_ticks: u64) -> Self {
        assert!(
            threshold_ticks > 0,
            "interruption threshold must be positive"
        );
        Self {
            threshold_ticks,
            counts: BTreeMap::new(),
            runs: BTreeMap::new(),
        }
    }

    pub fn threshold_ticks(&self) -> u64 {
        self.threshold_ticks
    }

    pub fn add_participant(&mut self, pid: ParticipantId) -> Result<(), StepError> {
        if self.counts.contains_key(&pid) {
            return Err(StepError::AlreadyPresent(pid));
        }
        self.counts.insert(pid, 0);
        Ok(())
    }

    /// Forgets the participant, its counter and every pair it belonged to.
    pub fn remove_participant(&mut self, pid: &ParticipantId) -> bool {
        self.runs.retain(|(a, b), _| a != pid && b != pid);
        self.counts.remove(pid).is_some()
    }

    pub fn count(&self, pid: &ParticipantId) -> Option<u64> {
        self.counts.get(pid).copied()
    }

    pub fn counts(&self) -> &BTreeMap<ParticipantId, u64> {
        &self.counts
    }

    /// Consecutive overlapping ticks for a pair, in either order.
    pub fn run_length(&self, a: &ParticipantId, b: &ParticipantId) -> u64 {
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.runs.get(&key).map_or(0, |r| r.ticks)
    }

    /// Advances every pair by one tick. All tracked participants must have
    /// exactly one frame and all frames must share a tick; otherwise nothing
    /// is modified. Returns the participants whose counter moved, with the
    /// new value.
    pub fn update(
        &mut self,
        frames: &[FeatureFrame],
    ) -> Result<Vec<(ParticipantId, u64)>, StepError> {
        let speakers = self.check_frames(frames)?;

        let speakers: Vec<&ParticipantId> = speakers.into_iter().collect();
        let mut next_runs = BTreeMap::new();
        let mut charged: BTreeMap<ParticipantId, u64> = BTreeMap::new();
        for (i, a) in speakers.iter().enumerate() {
            for b in &speakers[i + 1..] {
                let key = ((*a).clone(), (*b).clone());
                let mut run = self.runs.get(&key).copied().unwrap_or_default();
                run.ticks += 1;
                if !run.latched && run.ticks >= self.threshold_ticks {
                    run.latched = true;
                    *charged.entry((*a).clone()).or_default() += 1;
                    *charged.entry((*b).clone()).or_default() += 1;
                }
                next_runs.insert(key, run);
            }
        }
        self.runs = next_runs;

        Ok(charged
            .into_iter()
            .map(|(pid, inc)| {
                let c = self.counts.get_mut(&pid).expect("speaker is tracked");
                *c += inc;
                (pid, *c)
            })
            .collect())
    }

    fn check_frames<'a>(
        &self,
        frames: &'a [FeatureFrame],
    ) -> Result<BTreeSet<&'a ParticipantId>, StepError> {
        let tick: Tick = frames.first().ok_or(StepError::Empty)?.tick;
        let mut seen = BTreeSet::new();
        let mut speakers = BTreeSet::new();
        for f in frames {
            if f.tick != tick {
                return Err(StepError::MixedTicks(tick));
            }
            if !self.counts.contains_key(&f.participant) {
                return Err(StepError::UnknownParticipant(f.participant.clone()));
            }
            if !seen.insert(&f.participant) {
                return Err(StepError::DuplicateFrame(f.participant.clone()));
            }
            if f.speaking {
                speakers.insert(&f.participant);
            }
        }
        if let Some(missing) = self.counts.keys().find(|p| !seen.contains(p)) {
            return Err(StepError::MissingFrame(missing.clone()));
        }
        Ok(speakers)
    }
}
