//! Deterministic re-execution of a session log.
//!
//! The logged frames are fed back through a fresh [`RoomState`] and every
//! snapshot that falls on the emission cadence is compared field by field
//! with the feedback line recorded for it.

use std::collections::BTreeMap;

use parley_core::log::is_emission_tick;
use parley_core::{
    FeatureFrame, FeedbackMsg, FeedbackSnapshot, LogError, LogRecord, ParticipantId, RoomState,
    SessionLog, StepError, Tick,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("line {line}: tick {tick}: {source}")]
    Step {
        line: usize,
        tick: Tick,
        source: StepError,
    },
    #[error("line {line}: no frames logged for tick {tick} while the room had members")]
    Gap { line: usize, tick: Tick },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    /// Logged feedback differs from the recomputed snapshot.
    Mismatch {
        line: usize,
        logged: FeedbackMsg,
        recomputed: FeedbackMsg,
    },
    /// A snapshot on the cadence has no logged feedback line.
    Missing { tick: Tick, pid: ParticipantId },
    /// A feedback line with no matching recomputed snapshot.
    Unexpected { line: usize, logged: FeedbackMsg },
}

impl Divergence {
    pub fn tick(&self) -> Tick {
        match self {
            Divergence::Mismatch { logged, .. } | Divergence::Unexpected { logged, .. } => {
                logged.tick
            }
            Divergence::Missing { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    /// Recomputed snapshots on the emission cadence, in log order.
    pub snapshots: Vec<FeedbackSnapshot>,
    pub divergences: Vec<Divergence>,
    pub ticks: u64,
}

#[derive(Default)]
struct TickGroup {
    tick: Tick,
    first_line: usize,
    frames: Vec<FeatureFrame>,
    feedback: Vec<(usize, FeedbackMsg)>,
}

struct Replayer {
    state: RoomState,
    emit_every: u64,
    report: ReplayReport,
}

impl Replayer {
    fn fast_forward(&mut self, until: Tick, line: usize) -> Result<(), ReplayError> {
        while self.state.next_tick() < until {
            let tick = self.state.next_tick();
            if !self.state.is_empty() {
                return Err(ReplayError::Gap { line, tick });
            }
            self.state
                .step(tick, &[])
                .map_err(|source| ReplayError::Step { line, tick, source })?;
            self.report.ticks += 1;
        }
        Ok(())
    }

    fn run(&mut self, group: TickGroup) -> Result<(), ReplayError> {
        let TickGroup {
            tick,
            first_line,
            frames,
            feedback,
        } = group;
        self.fast_forward(tick, first_line)?;
        let snaps = self
            .state
            .step(tick, &frames)
            .map_err(|source| ReplayError::Step {
                line: first_line,
                tick,
                source,
            })?;
        self.report.ticks += 1;

        let mut logged: BTreeMap<ParticipantId, (usize, FeedbackMsg)> = BTreeMap::new();
        for (line, fb) in feedback {
            if let Some((dup_line, dup)) = logged.insert(fb.pid.clone(), (line, fb)) {
                self.report.divergences.push(Divergence::Unexpected {
                    line: dup_line,
                    logged: dup,
                });
            }
        }
        if is_emission_tick(tick, self.emit_every) {
            for snap in snaps {
                let recomputed = FeedbackMsg::from(&snap);
                match logged.remove(&snap.participant) {
                    Some((line, fb)) if fb != recomputed => {
                        self.report.divergences.push(Divergence::Mismatch {
                            line,
                            logged: fb,
                            recomputed,
                        })
                    }
                    Some(_) => {}
                    None => self.report.divergences.push(Divergence::Missing {
                        tick,
                        pid: snap.participant.clone(),
                    }),
                }
                self.report.snapshots.push(snap);
            }
        }
        for (_, (line, fb)) in logged {
            self.report
                .divergences
                .push(Divergence::Unexpected { line, logged: fb });
        }
        Ok(())
    }
}

pub fn replay(log: &SessionLog) -> Result<ReplayReport, ReplayError> {
    let header = &log.header;
    header.validate()?;
    let mut state = RoomState::new(header.cfg, header.tick_ms).map_err(LogError::from)?;
    for pid in &header.members {
        state
            .add_participant(pid.clone())
            .map_err(|source| ReplayError::Step {
                line: 1,
                tick: 0,
                source,
            })?;
    }
    let mut r = Replayer {
        state,
        emit_every: header.emit_every,
        report: ReplayReport::default(),
    };

    let mut group: Option<TickGroup> = None;
    for (line, record) in &log.records {
        let line = *line;
        let tick = record.tick().expect("body records carry a tick");
        if group.as_ref().is_some_and(|g| g.tick != tick) {
            r.run(group.take().expect("checked"))?;
        }
        match record {
            LogRecord::Hdr(_) => unreachable!("parser rejects a second header"),
            LogRecord::Join { pid, .. } => {
                if group.is_some() {
                    return Err(ReplayError::Step {
                        line,
                        tick,
                        source: StepError::AlreadyPresent(pid.clone()),
                    });
                }
                r.fast_forward(tick, line)?;
                r.state
                    .add_participant(pid.clone())
                    .map_err(|source| ReplayError::Step { line, tick, source })?;
            }
            LogRecord::Leave { pid, .. } => {
                r.fast_forward(tick, line)?;
                r.state.remove_participant(pid);
            }
            LogRecord::Frame(f) => {
                group
                    .get_or_insert_with(|| TickGroup {
                        tick,
                        first_line: line,
                        ..Default::default()
                    })
                    .frames
                    .push(f.clone().into());
            }
            LogRecord::Fb(fb) => match group.as_mut() {
                Some(g) => g.feedback.push((line, fb.clone())),
                None => r.report.divergences.push(Divergence::Unexpected {
                    line,
                    logged: fb.clone(),
                }),
            },
        }
    }
    if let Some(g) = group {
        r.run(g)?;
    }
    Ok(r.report)
}
