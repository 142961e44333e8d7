//! Trailing-window accumulators: talk-time share and display smoothing.

use std::collections::VecDeque;

use crate::error::SequenceError;
use crate::frame::Tick;

/// Ring buffer of speaking flags over the trailing participation window.
///
/// Until the buffer has filled, the share is taken over the ticks seen so
/// far rather than the full window length.
#[derive(Debug, Clone)]
pub struct ParticipationWindow {
    flags: VecDeque<bool>,
    capacity: usize,
    speaking: usize,
    last_tick: Option<Tick>,
}

impl ParticipationWindow {
    pub fn new(capacity_ticks: usize) -> Self {
        assert!(
            capacity_ticks > 0,
            "participation window must hold at least one tick"
        );
        Self {
            flags: VecDeque::with_capacity(capacity_ticks),
            capacity: capacity_ticks,
            speaking: 0,
            last_tick: None,
        }
    }

    /// Pushes one tick's flag and returns the updated share in percent.
    pub fn update(&mut self, tick: Tick, speaking: bool) -> Result<f64, SequenceError> {
        if let Some(last) = self.last_tick {
            if tick != last + 1 {
                return Err(SequenceError {
                    expected: last + 1,
                    got: tick,
                });
            }
        }
        self.last_tick = Some(tick);

        if self.flags.len() == self.capacity && self.flags.pop_front() == Some(true) {
            self.speaking -= 1;
        }
        self.flags.push_back(speaking);
        if speaking {
            self.speaking += 1;
        }
        Ok(self.percent())
    }

    pub fn percent(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            100.0 * self.speaking as f64 / self.flags.len() as f64
        }
    }

    pub fn speaking_ticks(&self) -> usize {
        self.speaking
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn last_tick(&self) -> Option<Tick> {
        self.last_tick
    }

    pub fn flags(&self) -> impl Iterator<Item = bool> + '_ {
        self.flags.iter().copied()
    }
}

/// Arithmetic mean of the last `horizon` entries of `series`, or `None`
/// when there is nothing to average.
pub fn smooth(series: &[f64], horizon: usize) -> Option<f64> {
    let start = series.len().saturating_sub(horizon);
    mean(series[start..].iter().copied())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Fixed-horizon buffer of recent samples used for meter smoothing.
#[derive(Debug, Clone)]
pub struct RecentSamples {
    values: VecDeque<f64>,
    horizon: usize,
}

impl RecentSamples {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon > 0, "smoothing horizon must be positive");
        Self {
            values: VecDeque::with_capacity(horizon),
            horizon,
        }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.horizon {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn mean(&self) -> Option<f64> {
        mean(self.values.iter().copied())
    }

    /// Mean over the samples above `floor`; samples at or below it are noise.
    pub fn mean_above(&self, floor: f64) -> Option<f64> {
        mean(self.values.iter().copied().filter(|v| *v > floor))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(history: &[bool], window: usize) -> f64 {
        let start = history.len().saturating_sub(window);
        let tail = &history[start..];
        if tail.is_empty() {
            return 0.0;
        }
        100.0 * tail.iter().filter(|s| **s).count() as f64 / tail.len() as f64
    }

    #[test]
    fn full_window_share() {
        // 60 s spoken in the last 240 s at 100 ms ticks.
        let mut w = ParticipationWindow::new(2400);
        let mut pct = 0.0;
        for t in 0..3000u64 {
            let speaking = (2400..3000).contains(&t);
            pct = w.update(t, speaking).unwrap();
        }
        assert_eq!(pct, 25.0);
        assert_eq!(w.len(), 2400);
        assert_eq!(w.speaking_ticks(), 600);
    }

    #[test]
    fn warm_up_uses_elapsed_ticks() {
        // 120 s elapsed, spoke for the first 60 s.
        let mut w = ParticipationWindow::new(2400);
        let history: Vec<bool> = (0..1200).map(|t| t < 600).collect();
        let mut pct = 0.0;
        for (t, s) in history.iter().enumerate() {
            pct = w.update(t as u64, *s).unwrap();
        }
        assert_eq!(pct, brute_force(&history, 2400));
        assert_eq!(pct, 50.0);
    }

    #[test]
    fn silent_participant_is_zero() {
        let mut w = ParticipationWindow::new(10);
        assert_eq!(w.percent(), 0.0);
        for t in 0..25 {
            assert_eq!(w.update(t, false).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_gaps_and_duplicates() {
        let mut w = ParticipationWindow::new(10);
        w.update(5, true).unwrap();
        assert_eq!(
            w.update(5, true),
            Err(SequenceError {
                expected: 6,
                got: 5
            })
        );
        assert_eq!(
            w.update(7, true),
            Err(SequenceError {
                expected: 6,
                got: 7
            })
        );
        assert_eq!(w.update(6, false).unwrap(), 50.0);
    }

    #[test]
    fn smooth_examples() {
        assert_eq!(smooth(&[4.5, 4.5, 4.5], 30), Some(4.5));
        assert_eq!(smooth(&[0.0, 100.0, 0.0, 100.0], 4), Some(50.0));
        assert_eq!(smooth(&[100.0, 0.0, 0.0, 100.0], 2), Some(50.0));
        assert_eq!(smooth(&[], 3), None);
    }

    #[test]
    fn volume_smoothing_skips_noise() {
        let mut s = RecentSamples::new(30);
        for v in [0.5, 10.0, 10.0] {
            s.push(v);
        }
        // Oracle: drop samples at or below the floor, then average.
        let kept: Vec<f64> = [0.5, 10.0, 10.0].into_iter().filter(|v| *v > 1.0).collect();
        let want = kept.iter().sum::<f64>() / kept.len() as f64;
        assert_eq!(s.mean_above(1.0), Some(want));
        assert_eq!(want, 10.0);

        let mut quiet = RecentSamples::new(30);
        quiet.push(0.3);
        assert_eq!(quiet.mean_above(1.0), None);
    }

    #[test]
    fn recent_samples_evicts() {
        let mut s = RecentSamples::new(2);
        for v in [1.0, 2.0, 3.0] {
            s.push(v);
        }
        assert_eq!(s.len(), 2);
        assert_eq!(s.mean(), Some(2.5));
    }

    proptest! {
        #[test]
        fn running_count_matches_recount(
            history in proptest::collection::vec(any::<bool>(), 0..400),
            window in 1usize..64,
        ) {
            let mut w = ParticipationWindow::new(window);
            for (t, s) in history.iter().enumerate() {
                let pct = w.update(t as u64, *s).unwrap();
                prop_assert_eq!(pct, brute_force(&history[..=t], window));
                prop_assert_eq!(w.speaking_ticks(), w.flags().filter(|f| *f).count());
            }
        }
    }
}
