use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use parley_core::SessionLog;

use crate::stats::{anova2x2, bonferroni, read_samples};
use crate::{replay, summarize, synth, write_csv, Divergence, SynthSpec};

#[derive(Parser)]
#[command(
    name = "parley-replay",
    version,
    about = "Replay, summarize and analyse session logs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Recompute every emitted snapshot and report divergences from the log.
    Replay {
        log: PathBuf,
        /// Print at most this many divergences.
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Per-participant share of snapshots in each zone.
    Summarize {
        log: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Two-way ANOVA (condition x session) over a CSV of samples.
    Anova {
        samples: PathBuf,
        /// Number of outcome families to correct for.
        #[arg(long, default_value_t = 1)]
        bonferroni: u32,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Generate a log from a JSON session script.
    Synth {
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load_log(path: &Path) -> Result<SessionLog> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    SessionLog::parse(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(stdout),
    })
}

fn describe(d: &Divergence) -> String {
    match d {
        Divergence::Mismatch {
            line,
            logged,
            recomputed,
        } => format!(
            "line {line}: tick {} {}: logged {} recomputed {}",
            logged.tick,
            logged.pid,
            serde_json::to_string(logged).unwrap_or_default(),
            serde_json::to_string(recomputed).unwrap_or_default(),
        ),
        Divergence::Missing { tick, pid } => {
            format!("tick {tick} {pid}: feedback missing from log")
        }
        Divergence::Unexpected { line, logged } => {
            format!(
                "line {line}: tick {} {}: unexpected feedback",
                logged.tick, logged.pid
            )
        }
    }
}

/// Runs one command, writing its report to `out`. Returns the process exit
/// status: 0 on success, 2 when a replay found divergences.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.cmd {
        Cmd::Replay { log, limit } => {
            let report = replay(&load_log(&log)?)?;
            for d in report.divergences.iter().take(limit) {
                writeln!(out, "{}", describe(d))?;
            }
            writeln!(
                out,
                "{} ticks, {} snapshots, {} divergences",
                report.ticks,
                report.snapshots.len(),
                report.divergences.len()
            )?;
            Ok(if report.divergences.is_empty() { 0 } else { 2 })
        }
        Cmd::Summarize { log, csv } => {
            let report = replay(&load_log(&log)?)?;
            let rows = summarize(&report.snapshots);
            write_csv(&rows, output(csv.as_deref(), out)?)?;
            Ok(0)
        }
        Cmd::Anova {
            samples,
            bonferroni: m,
            alpha,
        } => {
            let f =
                File::open(&samples).with_context(|| format!("opening {}", samples.display()))?;
            let table = anova2x2(&read_samples(f)?)?;
            writeln!(
                out,
                "{:<18} {:>10} {:>4} {:>10} {:>9} {:>9} {:>9}",
                "effect", "SS", "df", "MS", "F", "p", "p_adj"
            )?;
            for (name, row) in table.rows() {
                let adj = bonferroni(row.p, m);
                writeln!(
                    out,
                    "{name:<18} {:>10.4} {:>4} {:>10.4} {:>9.4} {:>9.4} {:>9.4}{}",
                    row.ss,
                    row.df,
                    row.ms,
                    row.f,
                    row.p,
                    adj,
                    if adj < alpha { " *" } else { "" }
                )?;
            }
            writeln!(
                out,
                "{:<18} {:>10.4} {:>4} {:>10.4}",
                "within", table.ss_within, table.df_within, table.ms_within
            )?;
            if table.degenerate {
                eprintln!("warning: zero within-cell variance, F is undefined");
            }
            Ok(0)
        }
        Cmd::Synth {
            script,
            seed,
            out: dest,
        } => {
            let text = std::fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?;
            let spec: SynthSpec = serde_json::from_str(&text).context("parsing session script")?;
            let log = synth(&spec, seed)?;
            let mut w = output(dest.as_deref(), out)?;
            log.write(&mut w)?;
            w.flush()?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write) -> Result<u8>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run(Cli::try_parse_from(args)?, out)
}
