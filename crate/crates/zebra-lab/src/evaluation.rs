//! Evaluation: per-window error rates and their (w, m) grids, survival
//! curves by window and by minute, confusion matrices, and the Wilcoxon
//! signed-rank comparison with effect size.

use std::fmt::Write as _;

use thiserror::Error;

use crate::auth::{SessionVerdict, WindowOutcome};
use crate::interaction::{InteractionKind, ALL_CLASSES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no verdicts to aggregate")]
    EmptyInput,
    #[error("need at least {0} non-zero paired differences")]
    TooFewPairs(usize),
    #[error("sequence lengths differ")]
    LengthMismatch,
}

/// Which error rate the pooled Fail/Pass fraction represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Legitimate runs: Fail fraction is the false negative rate.
    Legit,
    /// Mismatched runs: Fail fraction is the true negative rate.
    Wrong,
    /// Attacker runs: Pass fraction is the false positive rate.
    Attacker,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRates {
    pub windows: usize,
    pub fail_fraction: f64,
    /// FNR, TNR or FPR depending on the polarity it was computed under.
    pub rate: f64,
}

/// Pools all evaluated windows of a suite of verdicts into one rate.
pub fn window_rates(verdicts: &[SessionVerdict], polarity: Polarity) -> Result<WindowRates, EvalError> {
    if verdicts.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut windows = 0usize;
    let mut fails = 0usize;
    for v in verdicts {
        for w in &v.windows {
            windows += 1;
            if w.outcome == WindowOutcome::Fail {
                fails += 1;
            }
        }
    }
    if windows == 0 {
        return Err(EvalError::EmptyInput);
    }
    let fail_fraction = fails as f64 / windows as f64;
    let rate = match polarity {
        Polarity::Legit | Polarity::Wrong => fail_fraction,
        Polarity::Attacker => 1.0 - fail_fraction,
    };
    Ok(WindowRates {
        windows,
        fail_fraction,
        rate,
    })
}

/// A rate per (w, m) combination, as plotted in the figure analogs.
#[derive(Debug, Clone)]
pub struct RateGrid {
    pub w_values: Vec<usize>,
    pub m_values: Vec<f64>,
    /// rates[i][j] is the rate at (w_values[i], m_values[j]).
    pub rates: Vec<Vec<f64>>,
}

impl RateGrid {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:>4}", "w");
        for m in &self.m_values {
            let _ = write!(out, " {:>8}", format!("m={m}"));
        }
        let _ = writeln!(out);
        for (i, w) in self.w_values.iter().enumerate() {
            let _ = write!(out, "{w:>4}");
            for r in &self.rates[i] {
                let _ = write!(out, " {r:>8.4}");
            }
            let _ = writeln!(out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalAxis {
    Windows,
    Minutes,
}

/// Fraction of sessions still logged in after x windows (or minutes).
/// Starts at 1.0 for x = 0 and never increases.
pub fn survival_curve(verdicts: &[SessionVerdict], axis: SurvivalAxis) -> Vec<(f64, f64)> {
    let n = verdicts.len();
    if n == 0 {
        return Vec::new();
    }
    let max_x = match axis {
        SurvivalAxis::Windows => verdicts
            .iter()
            .map(|v| v.windows_elapsed)
            .max()
            .unwrap_or(0) as f64,
        SurvivalAxis::Minutes => verdicts
            .iter()
            .flat_map(|v| v.windows.last().map(|w| w.end_ms))
            .fold(0.0f64, |acc, t| acc.max(t as f64 / 60_000.0))
            .ceil(),
    };
    let mut curve = Vec::new();
    let steps = max_x as usize;
    for x in 0..=steps {
        let x = x as f64;
        let alive = verdicts
            .iter()
            .filter(|v| match axis {
                SurvivalAxis::Windows => v.deauth_window.map_or(true, |d| d as f64 > x),
                SurvivalAxis::Minutes => v
                    .deauth_time_ms
                    .map_or(true, |t| t as f64 / 60_000.0 > x),
            })
            .count();
        curve.push((x, alive as f64 / n as f64));
    }
    curve
}

/// Signed-rank result: z statistic, two-sided p, effect size r = z/√n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsResult {
    pub z: f64,
    pub p: f64,
    pub r: f64,
    pub n_pairs: usize,
}

/// Wilcoxon signed-rank test on paired samples: zero differences dropped,
/// average ranks for ties, normal approximation with continuity correction
/// and tie-corrected variance.
pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64]) -> Result<StatsResult, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch);
    }
    let mut diffs: Vec<f64> = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n < 5 {
        return Err(EvalError::TooFewPairs(5));
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut w_plus = 0.0f64;
    let mut tie_correction = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let tied = (j - i + 1) as f64;
        // Average rank of positions i..=j (1-based ranks).
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for d in &diffs[i..=j] {
            if *d > 0.0 {
                w_plus += avg_rank;
            }
        }
        if tied > 1.0 {
            tie_correction += tied.powi(3) - tied;
        }
        i = j + 1;
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction / 48.0;
    let num = w_plus - mean;
    let z = if var <= 0.0 {
        0.0
    } else {
        (num - 0.5 * num.signum()) / var.sqrt()
    };
    let p = (2.0 * (1.0 - std_normal_cdf(z.abs()))).clamp(0.0, 1.0);
    Ok(StatsResult {
        z,
        p,
        r: z / nf.sqrt(),
        n_pairs: n,
    })
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Class-by-class counts with per-class precision and recall over the five
/// possible classes (unused classes keep zero rows/columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 5]; 5],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        truth: &[InteractionKind],
        predicted: &[InteractionKind],
    ) -> Result<Self, EvalError> {
        if truth.len() != predicted.len() {
            return Err(EvalError::LengthMismatch);
        }
        let mut counts = [[0usize; 5]; 5];
        for (t, p) in truth.iter().zip(predicted.iter()) {
            counts[t.index()][p.index()] += 1;
        }
        Ok(Self { counts })
    }

    pub fn precision(&self, kind: InteractionKind) -> f64 {
        let j = kind.index();
        let col: usize = (0..5).map(|i| self.counts[i][j]).sum();
        if col == 0 {
            return 0.0;
        }
        self.counts[j][j] as f64 / col as f64
    }

    pub fn recall(&self, kind: InteractionKind) -> f64 {
        let i = kind.index();
        let row: usize = self.counts[i].iter().sum();
        if row == 0 {
            return 0.0;
        }
        self.counts[i][i] as f64 / row as f64
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.counts.iter().flatten().sum();
        if total == 0 {
            return 0.0;
        }
        let diag: usize = (0..5).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }

    pub fn present_classes(&self) -> Vec<InteractionKind> {
        ALL_CLASSES
            .into_iter()
            .filter(|k| {
                let i = k.index();
                self.counts[i].iter().sum::<usize>() > 0
                    || (0..5).map(|r| self.counts[r][i]).sum::<usize>() > 0
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let classes = self.present_classes();
        let mut out = String::new();
        let _ = write!(out, "{:>12}", "actual\\pred");
        for c in &classes {
            let _ = write!(out, " {:>10}", c.token());
        }
        let _ = writeln!(out, " {:>8}", "recall");
        for c in &classes {
            let _ = write!(out, "{:>12}", c.token());
            for p in &classes {
                let _ = write!(out, " {:>10}", self.counts[c.index()][p.index()]);
            }
            let _ = writeln!(out, " {:>8.4}", self.recall(*c));
        }
        let _ = write!(out, "{:>12}", "precision");
        for c in &classes {
            let _ = write!(out, " {:>10.4}", self.precision(*c));
        }
        let _ = writeln!(out);
        out
    }
}

/// Plot-ready series file: one `x y` pair per line.
pub fn series_to_text(series: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (x, y) in series {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}

/// Human-readable verdict report plus machine-readable window records,
/// with both window-indexed and minute-indexed views.
pub fn render_verdict_report(verdict: &SessionVerdict, label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "session {label}");
    let _ = writeln!(
        out,
        "windows_elapsed {}  deauth_window {}  deauth_minute {}",
        verdict.windows_elapsed,
        verdict
            .deauth_window
            .map_or("-".to_string(), |w| w.to_string()),
        verdict
            .deauth_time_ms
            .map_or("-".to_string(), |t| format!("{:.2}", t as f64 / 60_000.0)),
    );
    let _ = writeln!(
        out,
        "{:>7} {:>9} {:>9} {:>8} {:>7} {:>6}",
        "window", "matches", "fraction", "end_min", "probe", "result"
    );
    for w in &verdict.windows {
        let frac = w.matches as f64 / w.window_len.max(1) as f64;
        let _ = writeln!(
            out,
            "{:>7} {:>9} {:>9.3} {:>8.2} {:>7} {:>6}",
            w.index,
            format!("{}/{}", w.matches, w.window_len),
            frac,
            w.end_ms as f64 / 60_000.0,
            if w.probe { "yes" } else { "no" },
            match w.outcome {
                WindowOutcome::Pass => "PASS",
                WindowOutcome::Fail => "FAIL",
            }
        );
    }
    for w in &verdict.windows {
        let _ = writeln!(
            out,
            "#record window={} matches={} len={} end_ms={} probe={} outcome={}",
            w.index,
            w.matches,
            w.window_len,
            w.end_ms,
            u8::from(w.probe),
            match w.outcome {
                WindowOutcome::Pass => "pass",
                WindowOutcome::Fail => "fail",
            }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::WindowRecord;

    fn verdict(outcomes: &[WindowOutcome], deauth: Option<usize>) -> SessionVerdict {
        let windows: Vec<WindowRecord> = outcomes
            .iter()
            .enumerate()
            .map(|(i, &outcome)| WindowRecord {
                index: i + 1,
                start_offset: i,
                matches: if outcome == WindowOutcome::Pass { 20 } else { 0 },
                window_len: 20,
                end_ms: (i as i64 + 1) * 13_000,
                outcome,
                probe: false,
            })
            .collect();
        SessionVerdict {
            deauth_time_ms: deauth.map(|d| windows[d - 1].end_ms),
            windows,
            deauth_window: deauth,
            windows_elapsed: outcomes.len(),
        }
    }

    #[test]
    fn rates_by_polarity() {
        use WindowOutcome::{Fail, Pass};
        let legit = vec![verdict(&[Pass, Pass, Pass], None)];
        assert_eq!(window_rates(&legit, Polarity::Legit).unwrap().rate, 0.0);
        let wrong = vec![verdict(&[Fail, Fail], Some(2))];
        assert_eq!(window_rates(&wrong, Polarity::Wrong).unwrap().rate, 1.0);
        let attacker = vec![verdict(&[Pass, Fail, Pass, Pass], None)];
        assert_eq!(window_rates(&attacker, Polarity::Attacker).unwrap().rate, 0.75);
        assert_eq!(window_rates(&[], Polarity::Legit), Err(EvalError::EmptyInput));
    }

    #[test]
    fn survival_shapes() {
        use WindowOutcome::{Fail, Pass};
        let none = vec![
            verdict(&[Pass, Pass], None),
            verdict(&[Pass, Pass], None),
        ];
        let curve = survival_curve(&none, SurvivalAxis::Windows);
        assert!(curve.iter().all(|(_, f)| *f == 1.0));

        let all_first = vec![verdict(&[Fail], Some(1)), verdict(&[Fail], Some(1))];
        let curve = survival_curve(&all_first, SurvivalAxis::Windows);
        assert_eq!(curve[0], (0.0, 1.0));
        assert_eq!(curve[1], (1.0, 0.0));

        // Non-increasing in general.
        let mixed = vec![
            verdict(&[Pass, Fail, Fail], Some(3)),
            verdict(&[Pass, Pass, Pass], None),
        ];
        let curve = survival_curve(&mixed, SurvivalAxis::Windows);
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn wilcoxon_textbook_vector_matches_reference() {
        // Classic paired example (n = 10, one zero difference dropped).
        let xs = [125.0, 115.0, 130.0, 140.0, 140.0, 115.0, 140.0, 125.0, 140.0, 135.0];
        let ys = [110.0, 122.0, 125.0, 120.0, 140.0, 124.0, 123.0, 137.0, 135.0, 145.0];
        let res = wilcoxon_signed_rank(&xs, &ys).unwrap();
        let reference = reference_wilcoxon_z(&xs, &ys);
        assert!(
            (res.z - reference).abs() <= 1e-6,
            "z = {}, reference = {}",
            res.z,
            reference
        );
        assert_eq!(res.n_pairs, 9);
        assert!(res.p > 0.0 && res.p < 1.0);
        assert!((res.r - res.z / (res.n_pairs as f64).sqrt()).abs() < 1e-12);
    }

    /// Independent reimplementation used as the test oracle: ranks computed
    /// by explicit lookup, W− convention, same continuity correction.
    fn reference_wilcoxon_z(xs: &[f64], ys: &[f64]) -> f64 {
        let diffs: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| x - y)
            .filter(|d| *d != 0.0)
            .collect();
        let n = diffs.len();
        let mut abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let rank_of = |v: f64| -> f64 {
            let ranks: Vec<f64> = abs
                .iter()
                .enumerate()
                .filter(|(_, a)| **a == v)
                .map(|(i, _)| (i + 1) as f64)
                .collect();
            ranks.iter().sum::<f64>() / ranks.len() as f64
        };
        let w_minus: f64 = diffs
            .iter()
            .filter(|d| **d < 0.0)
            .map(|d| rank_of(d.abs()))
            .sum();
        let w_plus: f64 = diffs
            .iter()
            .filter(|d| **d > 0.0)
            .map(|d| rank_of(d.abs()))
            .sum();
        assert!((w_plus + w_minus - (n * (n + 1)) as f64 / 2.0).abs() < 1e-9);
        let mean = (n * (n + 1)) as f64 / 4.0;
        let mut tie_corr = 0.0;
        let mut i = 0;
        while i < abs.len() {
            let mut j = i;
            while j + 1 < abs.len() && abs[j + 1] == abs[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            if t > 1.0 {
                tie_corr += t * t * t - t;
            }
            i = j + 1;
        }
        let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_corr / 48.0;
        let num = w_plus - mean;
        (num - 0.5 * num.signum()) / var.sqrt()
    }

    #[test]
    fn wilcoxon_degenerate_and_antisymmetric() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(
            wilcoxon_signed_rank(&xs, &xs),
            Err(EvalError::TooFewPairs(5))
        );
        let ys = [2.0, 1.5, 5.0, 3.0, 4.0, 9.0];
        let ab = wilcoxon_signed_rank(&xs, &ys).unwrap();
        let ba = wilcoxon_signed_rank(&ys, &xs).unwrap();
        assert!((ab.z + ba.z).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn confusion_counts_and_marginals() {
        use InteractionKind::{Scrolling, Typing};
        let truth = vec![Typing, Typing, Scrolling, Scrolling];
        let perfect = ConfusionMatrix::from_pairs(&truth, &truth).unwrap();
        assert_eq!(perfect.accuracy(), 1.0);
        assert_eq!(perfect.precision(Typing), 1.0);

        // One off-diagonal insertion changes exactly two marginal rates.
        let predicted = vec![Typing, Scrolling, Scrolling, Scrolling];
        let m = ConfusionMatrix::from_pairs(&truth, &predicted).unwrap();
        assert_eq!(m.recall(Typing), 0.5);
        assert_eq!(m.precision(Scrolling), 2.0 / 3.0);
        assert_eq!(m.precision(Typing), 1.0);
        assert_eq!(m.recall(Scrolling), 1.0);
    }
}
