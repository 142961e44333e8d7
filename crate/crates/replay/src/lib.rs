//! Offline tooling for recorded discussion sessions: deterministic replay,
//! per-participant zone summaries, scripted log generation and the two-way
//! ANOVA used to compare conditions across sessions.

pub mod cli;
pub mod replay;
pub mod stats;
pub mod summary;
pub mod synth;

pub use replay::{replay, Divergence, ReplayError, ReplayReport};
pub use stats::{
    anova2x2, bonferroni, pvalue_from_f, AnovaTable, CellSample, Condition, Session, StatsError,
};
pub use summary::{summarize, write_csv, ZoneOccupancy};
pub use synth::{synth, SynthError, SynthSpec};
