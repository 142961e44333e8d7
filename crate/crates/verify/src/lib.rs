//! Brute-force reference computations. Each one works from the raw per-tick
//! history with no incremental state, so it shares nothing with the code it
//! is used to check.

use rand::Rng;

/// Cumulative interruption count per participant after every tick.
///
/// Enumerates every maximal run of joint speech for every pair. A run of at
/// least `threshold` ticks credits both speakers once, at the tick where it
/// reaches the threshold.
pub fn episode_counts(speaking: &[Vec<bool>], threshold: usize) -> Vec<Vec<u64>> {
    let n = speaking.len();
    let ticks = speaking.first().map_or(0, Vec::len);
    let mut credit = vec![vec![0u64; ticks]; n];
    for a in 0..n {
        for b in a + 1..n {
            let joint: Vec<bool> = (0..ticks)
                .map(|t| speaking[a][t] && speaking[b][t])
                .collect();
            let mut t = 0;
            while t < ticks {
                if !joint[t] {
                    t += 1;
                    continue;
                }
                let start = t;
                while t < ticks && joint[t] {
                    t += 1;
                }
                if t - start >= threshold {
                    credit[a][start + threshold - 1] += 1;
                    credit[b][start + threshold - 1] += 1;
                }
            }
        }
    }
    for row in &mut credit {
        for t in 1..ticks {
            row[t] += row[t - 1];
        }
    }
    credit
}

/// Percentage of speaking ticks among the last `window` ticks up to and
/// including `t`, fewer while the session is younger than the window.
pub fn window_percent(flags: &[bool], t: usize, window: usize) -> f64 {
    let lo = (t + 1).saturating_sub(window);
    let mut spoken = 0usize;
    for f in &flags[lo..=t] {
        if *f {
            spoken += 1;
        }
    }
    100.0 * spoken as f64 / (t + 1 - lo) as f64
}

/// Share of emitted snapshots, in percent, whose participation falls below
/// `mid_min`.
pub fn low_share(flags: &[bool], window: usize, emit_every: usize, mid_min: f64) -> f64 {
    let mut low = 0;
    let mut total = 0;
    for t in (emit_every - 1..flags.len()).step_by(emit_every) {
        if window_percent(flags, t, window) < mid_min {
            low += 1;
        }
        total += 1;
    }
    100.0 * low as f64 / total as f64
}

/// Per-participant speaking flags that toggle at a random per-participant
/// rate, giving both short blips and long turns.
pub fn random_speaking<R: Rng>(rng: &mut R, participants: usize, ticks: usize) -> Vec<Vec<bool>> {
    (0..participants)
        .map(|_| {
            let p_switch = rng.gen_range(0.005..0.2);
            let mut on = rng.gen_bool(0.5);
            (0..ticks)
                .map(|_| {
                    if rng.gen_bool(p_switch) {
                        on = !on;
                    }
                    on
                })
                .collect()
        })
        .collect()
}

/// Rounds half away from zero to `decimals` places.
pub fn round_to(x: f64, decimals: u32) -> f64 {
    let k = 10f64.powi(decimals as i32);
    (x * k).round() / k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn episodes_by_hand() {
        let a = [true, true, true, true, false, true, true, true];
        let b = [true, true, true, true, true, true, true, false];
        let c = [false, true, true, true, false, false, false, false];
        let rows = vec![a.to_vec(), b.to_vec(), c.to_vec()];
        let got = episode_counts(&rows, 3);
        // a-b: runs of 4 and 2; a-c: run of 3; b-c: run of 3.
        assert_eq!(got[0], vec![0, 0, 1, 2, 2, 2, 2, 2]);
        assert_eq!(got[1], vec![0, 0, 1, 2, 2, 2, 2, 2]);
        assert_eq!(got[2], vec![0, 0, 0, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn percent_by_hand() {
        let f = [true, false, true, true, false];
        assert_eq!(window_percent(&f, 0, 3), 100.0);
        assert_eq!(window_percent(&f, 1, 3), 50.0);
        assert_eq!(window_percent(&f, 4, 3), 100.0 * 2.0 / 3.0);
        assert_eq!(low_share(&f, 3, 1, 60.0), 20.0);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_to(0.032318, 3), 0.032);
        assert_eq!(round_to(0.0327, 2), 0.03);
    }
}
