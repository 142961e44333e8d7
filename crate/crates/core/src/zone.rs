//! Feedback zones and the classifiers that map raw scores onto them.
//!
//! Participation and emotion bands are published as integer ranges
//! (`0-19 / 20-30 / 31-100` and `0-44 / 45-55 / 56-100`). For real-valued
//! scores the middle band is closed on both ends and everything strictly
//! outside it falls into the neighbouring band. Volume bands are closed
//! above: `(1.0, 7.0]` is low, `(7.0, 20.0]` is mid.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Display color attached to every zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneColor {
    Red,
    Green,
    Yellow,
}

/// Band for participation and volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Mid,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Mid, Level::High];

    /// Mid is the target band; both extremes are flagged red.
    pub fn color(self) -> ZoneColor {
        match self {
            Level::Low | Level::High => ZoneColor::Red,
            Level::Mid => ZoneColor::Green,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Mid => "mid",
            Level::High => "high",
        }
    }
}

/// Volume zone; `Silent` means the smoothed level sits at or under the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeZone {
    Silent,
    Low,
    Mid,
    High,
}

impl VolumeZone {
    pub const ALL: [VolumeZone; 4] = [
        VolumeZone::Silent,
        VolumeZone::Low,
        VolumeZone::Mid,
        VolumeZone::High,
    ];

    /// `None` for `Silent`, which has no widget color.
    pub fn color(self) -> Option<ZoneColor> {
        self.level().map(Level::color)
    }

    pub fn level(self) -> Option<Level> {
        match self {
            VolumeZone::Silent => None,
            VolumeZone::Low => Some(Level::Low),
            VolumeZone::Mid => Some(Level::Mid),
            VolumeZone::High => Some(Level::High),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VolumeZone::Silent => "silent",
            VolumeZone::Low => "low",
            VolumeZone::Mid => "mid",
            VolumeZone::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmotionZone {
    #[serde(rename = "neg")]
    Negative,
    #[serde(rename = "neu")]
    Neutral,
    #[serde(rename = "pos")]
    Positive,
}

impl EmotionZone {
    pub const ALL: [EmotionZone; 3] = [
        EmotionZone::Negative,
        EmotionZone::Neutral,
        EmotionZone::Positive,
    ];

    pub fn color(self) -> ZoneColor {
        match self {
            EmotionZone::Negative => ZoneColor::Red,
            EmotionZone::Neutral => ZoneColor::Yellow,
            EmotionZone::Positive => ZoneColor::Green,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionZone::Negative => "neg",
            EmotionZone::Neutral => "neu",
            EmotionZone::Positive => "pos",
        }
    }
}

/// Inclusive bounds of the balanced participation band, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipationBounds {
    pub mid_min: f64,
    pub mid_max: f64,
}

/// Volume thresholds in percent of the microphone range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBounds {
    pub noise_max: f64,
    pub low_max: f64,
    pub mid_max: f64,
}

/// Inclusive bounds of the neutral band on the 0-100 emotion scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionBounds {
    pub neutral_min: f64,
    pub neutral_max: f64,
}

/// All tunable thresholds of the metrics engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneConfig {
    pub participation: ParticipationBounds,
    pub volume: VolumeBounds,
    pub emotion: EmotionBounds,
    /// Continuous two-speaker overlap, in seconds, that counts as an interruption.
    pub interruption_threshold_s: f64,
    /// Trailing window for talk-time, in seconds.
    pub participation_window_s: f64,
    /// Averaging horizon for the volume meter, in seconds.
    pub volume_smoothing_s: f64,
    /// Averaging horizon for valence, in seconds.
    pub valence_smoothing_s: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            participation: ParticipationBounds {
                mid_min: 20.0,
                mid_max: 30.0,
            },
            volume: VolumeBounds {
                noise_max: 1.0,
                low_max: 7.0,
                mid_max: 20.0,
            },
            emotion: EmotionBounds {
                neutral_min: 45.0,
                neutral_max: 55.0,
            },
            interruption_threshold_s: 3.0,
            participation_window_s: 240.0,
            volume_smoothing_s: 3.0,
            valence_smoothing_s: 2.0,
        }
    }
}

impl ZoneConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.participation;
        if !(0.0 <= p.mid_min && p.mid_min <= p.mid_max && p.mid_max < 100.0) {
            return Err(ConfigError::Bounds("participation"));
        }
        let v = &self.volume;
        if !(0.0 <= v.noise_max
            && v.noise_max < v.low_max
            && v.low_max < v.mid_max
            && v.mid_max < 100.0)
        {
            return Err(ConfigError::Bounds("volume"));
        }
        let e = &self.emotion;
        if !(0.0 < e.neutral_min && e.neutral_min <= e.neutral_max && e.neutral_max < 100.0) {
            return Err(ConfigError::Bounds("emotion"));
        }
        for (name, value) in [
            ("interruption_threshold_s", self.interruption_threshold_s),
            ("participation_window_s", self.participation_window_s),
            ("volume_smoothing_s", self.volume_smoothing_s),
            ("valence_smoothing_s", self.valence_smoothing_s),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        Ok(())
    }
}

pub fn classify_participation(pct: f64, cfg: &ZoneConfig) -> Level {
    let b = &cfg.participation;
    if pct < b.mid_min {
        Level::Low
    } else if pct <= b.mid_max {
        Level::Mid
    } else {
        Level::High
    }
}

/// Linear map from the signed classifier scale `[-100, 100]` onto `[0, 100]`.
pub fn remap_valence(raw: f64) -> f64 {
    raw / 2.0 + 50.0
}

pub fn classify_emotion(score: f64, cfg: &ZoneConfig) -> EmotionZone {
    let b = &cfg.emotion;
    if score < b.neutral_min {
        EmotionZone::Negative
    } else if score <= b.neutral_max {
        EmotionZone::Neutral
    } else {
        EmotionZone::Positive
    }
}

pub fn classify_volume(v: f64, cfg: &ZoneConfig) -> VolumeZone {
    let b = &cfg.volume;
    if v <= b.noise_max {
        VolumeZone::Silent
    } else if v <= b.low_max {
        VolumeZone::Low
    } else if v <= b.mid_max {
        VolumeZone::Mid
    } else {
        VolumeZone::High
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn participation_bands() {
        let cfg = ZoneConfig::default();
        for (pct, want) in [
            (0.0, Level::Low),
            (19.0, Level::Low),
            (19.999, Level::Low),
            (20.0, Level::Mid),
            (25.0, Level::Mid),
            (30.0, Level::Mid),
            (30.001, Level::High),
            (31.0, Level::High),
            (100.0, Level::High),
        ] {
            assert_eq!(classify_participation(pct, &cfg), want, "pct={pct}");
        }
    }

    #[test]
    fn emotion_bands() {
        let cfg = ZoneConfig::default();
        for (score, want) in [
            (0.0, EmotionZone::Negative),
            (44.0, EmotionZone::Negative),
            (45.0, EmotionZone::Neutral),
            (50.0, EmotionZone::Neutral),
            (55.0, EmotionZone::Neutral),
            (56.0, EmotionZone::Positive),
            (100.0, EmotionZone::Positive),
        ] {
            assert_eq!(classify_emotion(score, &cfg), want, "score={score}");
        }
    }

    #[test]
    fn volume_bands() {
        let cfg = ZoneConfig::default();
        for (v, want) in [
            (0.0, VolumeZone::Silent),
            (0.9, VolumeZone::Silent),
            (1.0, VolumeZone::Silent),
            (1.1, VolumeZone::Low),
            (7.0, VolumeZone::Low),
            (7.1, VolumeZone::Mid),
            (20.0, VolumeZone::Mid),
            (20.1, VolumeZone::High),
            (100.0, VolumeZone::High),
        ] {
            assert_eq!(classify_volume(v, &cfg), want, "v={v}");
        }
    }

    #[test]
    fn remap_anchor_points() {
        assert_eq!(remap_valence(-100.0), 0.0);
        assert_eq!(remap_valence(0.0), 50.0);
        assert_eq!(remap_valence(100.0), 100.0);
        assert_eq!(remap_valence(-12.0), 44.0);
    }

    #[test]
    fn colors() {
        assert_eq!(Level::Low.color(), ZoneColor::Red);
        assert_eq!(Level::Mid.color(), ZoneColor::Green);
        assert_eq!(Level::High.color(), ZoneColor::Red);
        assert_eq!(VolumeZone::Silent.color(), None);
        assert_eq!(VolumeZone::Mid.color(), Some(ZoneColor::Green));
        assert_eq!(EmotionZone::Negative.color(), ZoneColor::Red);
        assert_eq!(EmotionZone::Neutral.color(), ZoneColor::Yellow);
        assert_eq!(EmotionZone::Positive.color(), ZoneColor::Green);
    }

    #[test]
    fn default_config_is_valid() {
        ZoneConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_unordered_bounds() {
        let mut cfg = ZoneConfig::default();
        cfg.volume.low_max = 0.5;
        assert_eq!(cfg.validate(), Err(ConfigError::Bounds("volume")));

        let cfg = ZoneConfig {
            interruption_threshold_s: 0.0,
            ..ZoneConfig::default()
        };
        assert_eq!(
            cfg.validate(),
            Err(ConfigError::NonPositive("interruption_threshold_s"))
        );
    }

    #[test]
    fn config_fills_missing_fields_from_defaults() {
        let cfg: ZoneConfig = serde_json::from_str(r#"{"interruption_threshold_s":1.7}"#).unwrap();
        assert_eq!(cfg.interruption_threshold_s, 1.7);
        assert_eq!(cfg.participation_window_s, 240.0);
    }

    proptest! {
        #[test]
        fn remap_is_monotone(a in -100.0f64..=100.0, b in -100.0f64..=100.0) {
            prop_assume!(a < b);
            prop_assert!(remap_valence(a) < remap_valence(b));
            prop_assert!((0.0..=100.0).contains(&remap_valence(a)));
        }

        #[test]
        fn participation_partitions(pct in 0.0f64..=100.0) {
            let cfg = ZoneConfig::default();
            let hits = [pct < 20.0, (20.0..=30.0).contains(&pct), pct > 30.0];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            let idx = hits.iter().position(|h| *h).unwrap();
            prop_assert_eq!(classify_participation(pct, &cfg), Level::ALL[idx]);
        }

        #[test]
        fn volume_partitions(v in 0.0f64..=100.0) {
            let cfg = ZoneConfig::default();
            let want = if v <= 1.0 {
                VolumeZone::Silent
            } else if v <= 7.0 {
                VolumeZone::Low
            } else if v <= 20.0 {
                VolumeZone::Mid
            } else {
                VolumeZone::High
            };
            prop_assert_eq!(classify_volume(v, &cfg), want);
        }
    }
}
