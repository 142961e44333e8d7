//! Two-way fixed-effects ANOVA for a balanced 2x2 design, F-distribution
//! tail probabilities and Bonferroni correction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("F statistic must be a non-negative number, got {0}")]
    Domain(f64),
    #[error("degrees of freedom must be at least 1")]
    DegreesOfFreedom,
    #[error("unbalanced design: cell sizes {0:?}")]
    Unbalanced([usize; 4]),
    #[error("each cell needs at least 2 observations, smallest has {0}")]
    TooFewObservations(usize),
    #[error("unknown {kind} {value:?}")]
    Label { kind: &'static str, value: String },
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    // The fraction converges fast only below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Upper tail `P(F > f)` for an F distribution with `(df1, df2)` degrees of freedom.
pub fn pvalue_from_f(f: f64, df1: u32, df2: u32) -> Result<f64, StatsError> {
    if f.is_nan() || f < 0.0 {
        return Err(StatsError::Domain(f));
    }
    if df1 == 0 || df2 == 0 {
        return Err(StatsError::DegreesOfFreedom);
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let x = d2 / (d2 + d1 * f);
    Ok(regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x).clamp(0.0, 1.0))
}

/// Bonferroni-adjusted p-value for `m` simultaneous tests.
pub fn bonferroni(p: f64, m: u32) -> f64 {
    assert!(m >= 1, "number of comparisons must be at least 1");
    (p * m as f64).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Control,
    Treatment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    S1,
    S2,
}

impl FromStr for Condition {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Ok(Condition::Control),
            "treatment" => Ok(Condition::Treatment),
            _ => Err(StatsError::Label {
                kind: "condition",
                value: s.to_string(),
            }),
        }
    }
}

impl FromStr for Session {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "session-1" | "1" => Ok(Session::S1),
            "s2" | "session-2" | "2" => Ok(Session::S2),
            _ => Err(StatsError::Label {
                kind: "session",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Control => "control",
            Condition::Treatment => "treatment",
        })
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Session::S1 => "s1",
            Session::S2 => "s2",
        })
    }
}

/// One observation: a participant's value in one condition and session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSample {
    pub condition: Condition,
    pub session: Session,
    #[serde(default)]
    pub participant: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectRow {
    pub ss: f64,
    pub df: u32,
    pub ms: f64,
    pub f: f64,
    pub p: f64,
}

impl EffectRow {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    /// Condition main effect (control vs treatment).
    pub condition: EffectRow,
    /// Session main effect (s1 vs s2).
    pub session: EffectRow,
    pub interaction: EffectRow,
    pub ss_within: f64,
    pub df_within: u32,
    pub ms_within: f64,
    pub ss_total: f64,
    /// Indexed `[condition][session]`.
    pub cells: [[CellStats; 2]; 2],
    /// Set when the within-cell variance is zero and F is undefined.
    pub degenerate: bool,
}

impl AnovaTable {
    pub fn rows(&self) -> [(&'static str, &EffectRow); 3] {
        [
            ("condition", &self.condition),
            ("session", &self.session),
            ("condition:session", &self.interaction),
        ]
    }
}

fn cell_index(c: Condition, s: Session) -> (usize, usize) {
    (c as usize, s as usize)
}

/// Balanced 2x2 two-way ANOVA with interaction.
pub fn anova2x2(samples: &[CellSample]) -> Result<AnovaTable, StatsError> {
    let mut cells: [[Vec<f64>; 2]; 2] = Default::default();
    for s in samples {
        let (i, j) = cell_index(s.condition, s.session);
        cells[i][j].push(s.value);
    }
    let sizes = [
        cells[0][0].len(),
        cells[0][1].len(),
        cells[1][0].len(),
        cells[1][1].len(),
    ];
    let n = sizes[0];
    if sizes.iter().any(|s| *s != n) {
        return Err(StatsError::Unbalanced(sizes));
    }
    if n < 2 {
        return Err(StatsError::TooFewObservations(n));
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut cell_mean = [[0.0; 2]; 2];
    let mut stats = [[CellStats {
        n,
        mean: 0.0,
        sd: 0.0,
    }; 2]; 2];
    let mut ss_within = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let m = mean(&cells[i][j]);
            let ss: f64 = cells[i][j].iter().map(|x| (x - m).powi(2)).sum();
            ss_within += ss;
            cell_mean[i][j] = m;
            stats[i][j] = CellStats {
                n,
                mean: m,
                sd: (ss / (n - 1) as f64).sqrt(),
            };
        }
    }
    let all: Vec<f64> = cells.iter().flatten().flatten().copied().collect();
    let grand = mean(&all);
    let ss_total: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();

    let row_mean = [
        (cell_mean[0][0] + cell_mean[0][1]) / 2.0,
        (cell_mean[1][0] + cell_mean[1][1]) / 2.0,
    ];
    let col_mean = [
        (cell_mean[0][0] + cell_mean[1][0]) / 2.0,
        (cell_mean[0][1] + cell_mean[1][1]) / 2.0,
    ];
    let nf = n as f64;
    let ss_condition = 2.0 * nf * row_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_session = 2.0 * nf * col_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_interaction = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            ss_interaction += nf * (cell_mean[i][j] - row_mean[i] - col_mean[j] + grand).powi(2);
        }
    }

    let df_within = (4 * n - 4) as u32;
    let ms_within = ss_within / df_within as f64;
    let degenerate = ms_within == 0.0;
    let row = |ss: f64| -> EffectRow {
        let ms = ss;
        let (f, p) = if degenerate {
            if ms == 0.0 {
                (f64::NAN, f64::NAN)
            } else {
                (f64::INFINITY, 0.0)
            }
        } else {
            let f = ms / ms_within;
            (
                f,
                pvalue_from_f(f, 1, df_within).expect("F is finite and non-negative"),
            )
        };
        EffectRow {
            ss,
            df: 1,
            ms,
            f,
            p,
        }
    };

    Ok(AnovaTable {
        condition: row(ss_condition),
        session: row(ss_session),
        interaction: row(ss_interaction),
        ss_within,
        df_within,
        ms_within,
        ss_total,
        cells: stats,
        degenerate,
    })
}

/// Reads `condition,session,participant,value` rows with a header line.
pub fn read_samples<R: std::io::Read>(reader: R) -> anyhow::Result<Vec<CellSample>> {
    #[derive(Deserialize)]
    struct Row {
        condition: String,
        session: String,
        #[serde(default)]
        participant: String,
        value: f64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.push(CellSample {
            condition: row.condition.parse()?,
            session: row.session.parse()?,
            participant: row.participant,
            value: row.value,
        });
    }
    Ok(out)
}
