use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use parley_core::{Mode, TickDuration, ZoneConfig};
use serde::{Deserialize, Serialize};

/// Server settings, loadable from TOML. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    /// WebSocket listener for browser clients; disabled when unset.
    pub ws_bind: Option<String>,
    /// Room capacity; the clock starts once this many have joined.
    pub max_members: usize,
    pub tick_ms: u32,
    pub session_duration_s: f64,
    /// Feedback messages per second sent to each participant.
    pub emission_hz: f64,
    pub default_mode: Mode,
    pub log_dir: PathBuf,
    pub signal_cap_bytes: usize,
    /// How far ahead of the room clock a frame may be stamped, in ticks.
    pub max_lead_ticks: u64,
    /// When set, only these room ids may be joined.
    pub rooms: Option<Vec<String>>,
    pub zones: ZoneConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:7878".into(),
            ws_bind: None,
            max_members: 4,
            tick_ms: 100,
            session_duration_s: 900.0,
            emission_hz: 1.0,
            default_mode: Mode::Feedback,
            log_dir: PathBuf::from("sessions"),
            signal_cap_bytes: 256 * 1024,
            max_lead_ticks: 100,
            rooms: None,
            zones: ZoneConfig::default(),
        }
    }
}

impl ServerConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ServerConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(
            (2..=8).contains(&self.max_members),
            "max_members must be within 2..=8, got {}",
            self.max_members
        );
        TickDuration::from_millis(self.tick_ms)?;
        ensure!(
            self.session_duration_s.is_finite() && self.session_duration_s > 0.0,
            "session_duration_s must be positive"
        );
        ensure!(
            self.emission_hz.is_finite() && self.emission_hz > 0.0,
            "emission_hz must be positive"
        );
        ensure!(self.max_lead_ticks > 0, "max_lead_ticks must be positive");
        self.zones.validate()?;
        Ok(())
    }

    pub fn tick(&self) -> TickDuration {
        TickDuration::from_millis(self.tick_ms).expect("validated tick duration")
    }

    pub fn emit_every(&self) -> u64 {
        self.tick().ticks_for(1.0 / self.emission_hz)
    }

    pub fn session_ticks(&self) -> u64 {
        self.tick().ticks_for(self.session_duration_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ServerConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.emit_every(), 10);
        assert_eq!(cfg.session_ticks(), 9000);
    }

    #[test]
    fn partial_toml() {
        let cfg: ServerConfig = toml::from_str(
            r#"
            max_members = 3
            tick_ms = 50
            [zones]
            interruption_threshold_s = 1.7
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_members, 3);
        assert_eq!(cfg.emit_every(), 20);
        assert_eq!(cfg.zones.interruption_threshold_s, 1.7);
        assert_eq!(cfg.zones.participation_window_s, 240.0);
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = ServerConfig {
            max_members: 9,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ServerConfig {
            tick_ms: 5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
