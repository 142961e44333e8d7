use parley_core::{Mode, TickDuration, ZoneConfig};
use parley_replay::stats::{anova2x2, bonferroni, pvalue_from_f, CellSample, Condition, Session};
use parley_replay::synth::{Jitter, ParticipantScript, Segment};
use parley_replay::{replay, summarize, synth, SynthSpec};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

const CELLS: [(Condition, Session); 4] = [
    (Condition::Control, Session::S1),
    (Condition::Control, Session::S2),
    (Condition::Treatment, Session::S1),
    (Condition::Treatment, Session::S2),
];

/// Sums of squares straight from the definitions: squared deviations of
/// the marginal and cell means from the grand mean.
fn brute_force_ss(cells: &[Vec<f64>; 4]) -> [f64; 5] {
    let n = cells[0].len() as f64;
    let all: Vec<f64> = cells.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let cm: Vec<f64> = cells.iter().map(|c| mean(c)).collect();
    let cond = [(cm[0] + cm[1]) / 2.0, (cm[2] + cm[3]) / 2.0];
    let sess = [(cm[0] + cm[2]) / 2.0, (cm[1] + cm[3]) / 2.0];

    let ss_a: f64 = cond.iter().map(|m| 2.0 * n * (m - grand).powi(2)).sum();
    let ss_b: f64 = sess.iter().map(|m| 2.0 * n * (m - grand).powi(2)).sum();
    let mut ss_ab = 0.0;
    for (i, c) in cond.iter().enumerate() {
        for (j, s) in sess.iter().enumerate() {
            ss_ab += n * (cm[i * 2 + j] - c - s + grand).powi(2);
        }
    }
    let ss_w: f64 = cells
        .iter()
        .zip(&cm)
        .map(|(c, m)| c.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let ss_t: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();
    [ss_a, ss_b, ss_ab, ss_w, ss_t]
}

fn balanced() -> impl Strategy<Value = [Vec<f64>; 4]> {
    (2usize..25).prop_flat_map(|n| {
        let cell = prop::collection::vec(-50.0f64..150.0, n);
        [cell.clone(), cell.clone(), cell.clone(), cell]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn anova_matches_definitions(cells in balanced()) {
        let samples: Vec<CellSample> = CELLS
            .iter()
            .zip(&cells)
            .flat_map(|((c, s), xs)| {
                xs.iter().map(move |x| CellSample {
                    condition: *c,
                    session: *s,
                    participant: String::new(),
                    value: *x,
                })
            })
            .collect();
        let t = anova2x2(&samples).unwrap();
        let want = brute_force_ss(&cells);
        let got = [t.condition.ss, t.session.ss, t.interaction.ss, t.ss_within, t.ss_total];
        for (g, w) in got.iter().zip(want) {
            prop_assert!(close(*g, w, 1e-9), "{got:?} vs {want:?}");
            prop_assert!(*g >= 0.0);
        }
        let parts = t.condition.ss + t.session.ss + t.interaction.ss + t.ss_within;
        prop_assert!(close(parts, t.ss_total, 1e-9));
        prop_assert_eq!(t.df_within as usize, samples.len() - 4);
    }

    #[test]
    fn pvalue_decreases_with_f(a in 0.0f64..50.0, b in 0.0f64..50.0, df2 in 1u32..1000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = pvalue_from_f(lo, 1, df2).unwrap();
        let p_hi = pvalue_from_f(hi, 1, df2).unwrap();
        prop_assert!(p_hi <= p_lo + 1e-15);
        prop_assert!((0.0..=1.0).contains(&p_lo));
    }

    #[test]
    fn pvalue_agrees_with_reference_library(f in 0.0f64..40.0, df2 in 1u32..=1000) {
        let reference = 1.0 - FisherSnedecor::new(1.0, df2 as f64).unwrap().cdf(f);
        let got = pvalue_from_f(f, 1, df2).unwrap();
        prop_assert!((got - reference).abs() < 1e-6, "F={f} df2={df2}: {got} vs {reference}");
    }

    #[test]
    fn bonferroni_bounds(p in 0.0f64..=1.0, m in 1u32..50) {
        let adj = bonferroni(p, m);
        prop_assert!(adj >= p && adj <= 1.0);
        prop_assert_eq!(bonferroni(p, 1), p);
    }

    #[test]
    fn occupancies_partition(seed in any::<u64>(), cuts in prop::collection::vec((0.0f64..60.0, 0.5f64..20.0, 0.0f64..40.0, -100.0f64..100.0), 1..6)) {
        let mut segments: Vec<Segment> = Vec::new();
        let mut at = 0.0;
        for (gap, len, volume, valence) in cuts {
            let from_s = at + gap;
            segments.push(Segment { from_s, to_s: from_s + len, speaking: true, volume, valence });
            at = from_s + len;
        }
        let spec = SynthSpec {
            room: "p".into(),
            tick_ms: TickDuration::DEFAULT,
            duration_s: 60.0,
            emit_every: None,
            mode: Mode::NoFeedback,
            start_ms: 0,
            cfg: ZoneConfig::default(),
            jitter: Jitter { volume: 3.0, valence: 30.0 },
            participants: vec![
                ParticipantScript { pid: "x".into(), segments },
                ParticipantScript { pid: "y".into(), segments: vec![] },
            ],
        };
        let report = replay(&synth(&spec, seed).unwrap()).unwrap();
        prop_assert!(report.divergences.is_empty());
        for r in summarize(&report.snapshots) {
            prop_assert!(close(r.part_low + r.part_mid + r.part_high, 100.0, 1e-9));
            prop_assert!(close(r.vol_silent + r.vol_low + r.vol_mid + r.vol_high, 100.0, 1e-9));
            prop_assert!(close(r.emo_neg + r.emo_neu + r.emo_pos, 100.0, 1e-9));
        }
    }
}
