use std::collections::BTreeMap;
use std::io::Write;

use parley_core::{EmotionZone, FeedbackSnapshot, Level, ParticipantId, VolumeZone};
use serde::Serialize;

/// Share of a participant's emitted snapshots spent in each zone, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneOccupancy {
    pub participant: ParticipantId,
    pub snapshots: usize,
    pub part_low: f64,
    pub part_mid: f64,
    pub part_high: f64,
    pub vol_silent: f64,
    pub vol_low: f64,
    pub vol_mid: f64,
    pub vol_high: f64,
    pub emo_neg: f64,
    pub emo_neu: f64,
    pub emo_pos: f64,
    /// Counter value on the participant's last snapshot.
    pub interruptions: u64,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "participant",
    "snapshots",
    "part_low",
    "part_mid",
    "part_high",
    "vol_silent",
    "vol_low",
    "vol_mid",
    "vol_high",
    "emo_neg",
    "emo_neu",
    "emo_pos",
    "interruptions",
];

#[derive(Default)]
struct Tally {
    n: usize,
    part: [usize; 3],
    vol: [usize; 4],
    emo: [usize; 3],
    last_tick: u64,
    interruptions: u64,
}

/// Rows are ordered by participant id regardless of log order.
pub fn summarize(snapshots: &[FeedbackSnapshot]) -> Vec<ZoneOccupancy> {
    let mut tallies: BTreeMap<&ParticipantId, Tally> = BTreeMap::new();
    for s in snapshots {
        let t = tallies.entry(&s.participant).or_default();
        t.n += 1;
        t.part[Level::ALL
            .iter()
            .position(|l| *l == s.participation_zone)
            .unwrap()] += 1;
        t.vol[VolumeZone::ALL
            .iter()
            .position(|v| *v == s.volume_zone)
            .unwrap()] += 1;
        t.emo[EmotionZone::ALL
            .iter()
            .position(|e| *e == s.emotion_zone)
            .unwrap()] += 1;
        if t.n == 1 || s.tick >= t.last_tick {
            t.last_tick = s.tick;
            t.interruptions = s.interruption_count;
        }
    }
    tallies
        .into_iter()
        .map(|(pid, t)| {
            let pct = |k: usize| 100.0 * k as f64 / t.n as f64;
            ZoneOccupancy {
                participant: pid.clone(),
                snapshots: t.n,
                part_low: pct(t.part[0]),
                part_mid: pct(t.part[1]),
                part_high: pct(t.part[2]),
                vol_silent: pct(t.vol[0]),
                vol_low: pct(t.vol[1]),
                vol_mid: pct(t.vol[2]),
                vol_high: pct(t.vol[3]),
                emo_neg: pct(t.emo[0]),
                emo_neu: pct(t.emo[1]),
                emo_pos: pct(t.emo[2]),
                interruptions: t.interruptions,
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ZoneOccupancy], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}
