//! Authenticator: compares the actual and predicted interaction sequences in
//! sliding windows and decides when to deauthenticate, plus the hardening
//! mechanisms (proximity-escalated thresholds, offside-typing blacklist).

use thiserror::Error;

use crate::interaction::{Interaction, InteractionKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("actual and predicted sequences differ in length")]
    LengthMismatch,
    #[error("empty sequence")]
    EmptySequence,
}

/// Window size `w`, matching threshold `m`, grace period `g` and overlap
/// fraction `f`. With `strict_threshold` a window passes only when the match
/// fraction strictly exceeds `m`; the default convention is ≥.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthParams {
    pub w: usize,
    pub m: f64,
    pub g: usize,
    pub f: f64,
    pub strict_threshold: bool,
}

impl Default for AuthParams {
    fn default() -> Self {
        Self {
            w: 20,
            m: 0.6,
            g: 1,
            f: 0.0,
            strict_threshold: false,
        }
    }
}

impl AuthParams {
    pub fn validate(&self) -> bool {
        self.w >= 1 && self.m > 0.0 && self.m <= 1.0 && self.g >= 1 && (0.0..1.0).contains(&self.f)
    }

    /// Window stride: `max(1, round(w · (1 − f)))`.
    pub fn stride(&self) -> usize {
        ((self.w as f64 * (1.0 - self.f)).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowOutcome {
    Pass,
    Fail,
}

/// Compares two equal-length label windows: Pass iff the fraction of equal
/// positions reaches the threshold (≥ by default, > when `strict`).
pub fn compare_window(
    actual: &[InteractionKind],
    predicted: &[InteractionKind],
    m: f64,
    strict: bool,
) -> Result<WindowOutcome, AuthError> {
    if actual.len() != predicted.len() {
        return Err(AuthError::LengthMismatch);
    }
    if actual.is_empty() {
        return Err(AuthError::EmptySequence);
    }
    let matches = count_matches(actual, predicted);
    let frac = matches as f64 / actual.len() as f64;
    let pass = if strict { frac > m } else { frac >= m };
    Ok(if pass {
        WindowOutcome::Pass
    } else {
        WindowOutcome::Fail
    })
}

pub fn count_matches(actual: &[InteractionKind], predicted: &[InteractionKind]) -> usize {
    actual
        .iter()
        .zip(predicted.iter())
        .filter(|(a, p)| a == p)
        .count()
}

/// One evaluated window. `probe` marks forced-fail pseudo-windows injected by
/// continuous mode when bracelet activity was detected during terminal idle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    /// 1-based position in the evaluated stream.
    pub index: usize,
    /// Offset of the first interaction of the window (0 for probes).
    pub start_offset: usize,
    pub matches: usize,
    pub window_len: usize,
    pub end_ms: i64,
    pub outcome: WindowOutcome,
    pub probe: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionVerdict {
    pub windows: Vec<WindowRecord>,
    /// 1-based index of the last Fail of the first run of `g` consecutive
    /// fails, when deauthentication happened.
    pub deauth_window: Option<usize>,
    /// End timestamp of the last interaction of the deauthenticating window.
    pub deauth_time_ms: Option<i64>,
    pub windows_elapsed: usize,
}

impl SessionVerdict {
    pub fn deauthenticated(&self) -> bool {
        self.deauth_window.is_some()
    }

    pub fn fail_fraction(&self) -> f64 {
        if self.windows.is_empty() {
            return 0.0;
        }
        let fails = self
            .windows
            .iter()
            .filter(|w| w.outcome == WindowOutcome::Fail)
            .count();
        fails as f64 / self.windows.len() as f64
    }
}

/// Runs the windowed comparison over a whole session. Windows start at
/// offsets 0, s, 2s, …; only full windows are evaluated; the fail-run
/// counter resets on every Pass; the first run of `g` consecutive fails
/// deauthenticates and evaluation stops there.
pub fn run_session(
    actual: &[Interaction],
    predicted: &[InteractionKind],
    params: &AuthParams,
) -> Result<SessionVerdict, AuthError> {
    debug_assert!(params.validate());
    if actual.len() != predicted.len() {
        return Err(AuthError::LengthMismatch);
    }
    if actual.is_empty() {
        return Err(AuthError::EmptySequence);
    }
    let n = actual.len();
    let w = params.w;
    let stride = params.stride();
    let mut verdict = SessionVerdict::default();
    let mut fail_run = 0usize;
    let mut offset = 0usize;
    let mut index = 0usize;
    while offset + w <= n {
        index += 1;
        let actual_kinds: Vec<InteractionKind> =
            actual[offset..offset + w].iter().map(|i| i.kind).collect();
        let matches = count_matches(&actual_kinds, &predicted[offset..offset + w]);
        let frac = matches as f64 / w as f64;
        let pass = if params.strict_threshold {
            frac > params.m
        } else {
            frac >= params.m
        };
        let outcome = if pass {
            WindowOutcome::Pass
        } else {
            WindowOutcome::Fail
        };
        let end_ms = actual[offset + w - 1].end_ms;
        verdict.windows.push(WindowRecord {
            index,
            start_offset: offset,
            matches,
            window_len: w,
            end_ms,
            outcome,
            probe: false,
        });
        match outcome {
            WindowOutcome::Pass => fail_run = 0,
            WindowOutcome::Fail => {
                fail_run += 1;
                if fail_run >= params.g {
                    verdict.deauth_window = Some(index);
                    verdict.deauth_time_ms = Some(end_ms);
                    break;
                }
            }
        }
        offset += stride;
    }
    verdict.windows_elapsed = verdict.windows.len();
    Ok(verdict)
}

/// A bracelet-side probe classified during a terminal-idle period:
/// (end timestamp, predicted class).
pub type IdleProbe = (i64, InteractionKind);

/// Continuous-mode session run: idle-period probes classified as one of the
/// three interaction classes fail immediately, entering the outcome stream
/// as forced-fail pseudo-windows in timestamp order.
pub fn run_session_continuous(
    actual: &[Interaction],
    predicted: &[InteractionKind],
    probes: &[IdleProbe],
    params: &AuthParams,
) -> Result<SessionVerdict, AuthError> {
    debug_assert!(params.validate());
    if actual.len() != predicted.len() {
        return Err(AuthError::LengthMismatch);
    }
    if actual.is_empty() && probes.is_empty() {
        return Err(AuthError::EmptySequence);
    }
    let n = actual.len();
    let w = params.w;
    let stride = params.stride();

    enum Item {
        Window(usize),
        Violation(i64),
    }
    let mut items: Vec<(i64, Item)> = Vec::new();
    let mut offset = 0usize;
    while offset + w <= n {
        items.push((actual[offset + w - 1].end_ms, Item::Window(offset)));
        offset += stride;
    }
    for &(t, kind) in probes {
        if kind.is_base() {
            items.push((t, Item::Violation(t)));
        }
    }
    items.sort_by_key(|(t, item)| (*t, matches!(item, Item::Violation(_)) as u8));

    let mut verdict = SessionVerdict::default();
    let mut fail_run = 0usize;
    let mut index = 0usize;
    for (_, item) in items {
        index += 1;
        let record = match item {
            Item::Window(offset) => {
                let actual_kinds: Vec<InteractionKind> =
                    actual[offset..offset + w].iter().map(|i| i.kind).collect();
                let matches = count_matches(&actual_kinds, &predicted[offset..offset + w]);
                let frac = matches as f64 / w as f64;
                let pass = if params.strict_threshold {
                    frac > params.m
                } else {
                    frac >= params.m
                };
                WindowRecord {
                    index,
                    start_offset: offset,
                    matches,
                    window_len: w,
                    end_ms: actual[offset + w - 1].end_ms,
                    outcome: if pass {
                        WindowOutcome::Pass
                    } else {
                        WindowOutcome::Fail
                    },
                    probe: false,
                }
            }
            Item::Violation(t) => WindowRecord {
                index,
                start_offset: 0,
                matches: 0,
                window_len: w,
                end_ms: t,
                outcome: WindowOutcome::Fail,
                probe: true,
            },
        };
        let outcome = record.outcome;
        let end_ms = record.end_ms;
        verdict.windows.push(record);
        match outcome {
            WindowOutcome::Pass => fail_run = 0,
            WindowOutcome::Fail => {
                fail_run += 1;
                if fail_run >= params.g {
                    verdict.deauth_window = Some(index);
                    verdict.deauth_time_ms = Some(end_ms);
                    break;
                }
            }
        }
    }
    verdict.windows_elapsed = verdict.windows.len();
    Ok(verdict)
}

/// Bluetooth proximity classes derived from the received signal strength
/// relative to a close-range reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityLevel {
    Immediate,
    Near,
    Far,
}

/// Δ ≥ −5 dB ⇒ immediate; −15 dB ≤ Δ < −5 dB ⇒ near; below ⇒ far.
pub fn proximity_level(rssi_db: f64, reference_db: f64) -> ProximityLevel {
    let delta = rssi_db - reference_db;
    if delta >= -5.0 {
        ProximityLevel::Immediate
    } else if delta >= -15.0 {
        ProximityLevel::Near
    } else {
        ProximityLevel::Far
    }
}

/// Escalates the matching threshold with distance: +0.10 when near, +0.20
/// when far, capped at 1.
pub fn escalate_threshold(base_m: f64, level: ProximityLevel) -> f64 {
    debug_assert!(base_m > 0.0 && base_m <= 1.0);
    let bumped = match level {
        ProximityLevel::Immediate => base_m,
        ProximityLevel::Near => base_m + 0.10,
        ProximityLevel::Far => base_m + 0.20,
    };
    bumped.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlacklistOutcome {
    Pass,
    TriggerDeauth,
}

/// Blacklist defense: deauthenticate when `run_threshold` or more
/// consecutive offside-flagged typing interactions occur.
pub fn blacklist_offside_typing(seq: &[Interaction], run_threshold: usize) -> BlacklistOutcome {
    debug_assert!(run_threshold >= 1);
    let mut run = 0usize;
    for i in seq {
        if i.kind == InteractionKind::Typing && i.offside {
            run += 1;
            if run >= run_threshold {
                return BlacklistOutcome::TriggerDeauth;
            }
        } else {
            run = 0;
        }
    }
    BlacklistOutcome::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::InteractionKind::{Mkkm, Scrolling, Typing};

    fn interactions(n: usize) -> Vec<Interaction> {
        (0..n)
            .map(|i| Interaction::new(Typing, i as i64 * 1000, i as i64 * 1000 + 500))
            .collect()
    }

    /// Builds (actual, predicted) with the requested number of matches.
    fn labels(w: usize, matches: usize) -> (Vec<InteractionKind>, Vec<InteractionKind>) {
        let actual = vec![Typing; w];
        let mut predicted = vec![Typing; w];
        for p in predicted.iter_mut().take(w) .skip(matches) {
            *p = Scrolling;
        }
        (actual, predicted)
    }

    #[test]
    fn threshold_boundaries() {
        let (a, p) = labels(20, 13);
        assert_eq!(compare_window(&a, &p, 0.6, false).unwrap(), WindowOutcome::Pass);
        let (a, p) = labels(20, 11);
        assert_eq!(compare_window(&a, &p, 0.6, false).unwrap(), WindowOutcome::Fail);
        // Exactly 12/20 at m = 0.6: Pass under ≥, Fail under strict >.
        let (a, p) = labels(20, 12);
        assert_eq!(compare_window(&a, &p, 0.6, false).unwrap(), WindowOutcome::Pass);
        assert_eq!(compare_window(&a, &p, 0.6, true).unwrap(), WindowOutcome::Fail);
    }

    #[test]
    fn compare_window_errors() {
        assert_eq!(
            compare_window(&[Typing], &[Typing, Mkkm], 0.5, false),
            Err(AuthError::LengthMismatch)
        );
        assert_eq!(compare_window(&[], &[], 0.5, false), Err(AuthError::EmptySequence));
    }

    /// Forces per-window outcomes by making whole windows match or mismatch.
    fn run_forced(outcomes: &[bool], g: usize) -> SessionVerdict {
        let params = AuthParams {
            w: 2,
            m: 0.6,
            g,
            f: 0.0,
            strict_threshold: false,
        };
        let n = outcomes.len() * 2;
        let actual = interactions(n);
        let predicted: Vec<InteractionKind> = outcomes
            .iter()
            .flat_map(|&pass| {
                if pass {
                    [Typing, Typing]
                } else {
                    [Scrolling, Scrolling]
                }
            })
            .collect();
        run_session(&actual, &predicted, &params).unwrap()
    }

    #[test]
    fn grace_period_counts_successive_fails() {
        // Pass, Fail, Pass, Fail, Fail with g = 2 → deauth at window 5.
        let v = run_forced(&[true, false, true, false, false], 2);
        assert_eq!(v.deauth_window, Some(5));
        assert_eq!(v.windows_elapsed, 5);
        // The same stream with g = 1 deauthenticates at the first fail.
        let v = run_forced(&[true, false, true, false, false], 1);
        assert_eq!(v.deauth_window, Some(2));
    }

    #[test]
    fn no_deauth_counts_all_full_windows() {
        let params = AuthParams::default();
        let n = 47;
        let actual = interactions(n);
        let predicted: Vec<InteractionKind> = actual.iter().map(|i| i.kind).collect();
        let v = run_session(&actual, &predicted, &params).unwrap();
        assert_eq!(v.deauth_window, None);
        // floor((47 - 20) / 20) + 1 = 2 full windows; trailing partial skipped.
        assert_eq!(v.windows_elapsed, 2);
    }

    #[test]
    fn deauth_time_is_window_end() {
        let v = run_forced(&[false], 1);
        assert_eq!(v.deauth_time_ms, Some(1500));
    }

    #[test]
    fn proximity_levels() {
        assert_eq!(proximity_level(-53.0, -50.0), ProximityLevel::Immediate);
        assert_eq!(proximity_level(-60.0, -50.0), ProximityLevel::Near);
        assert_eq!(proximity_level(-90.0, -50.0), ProximityLevel::Far);
        // Boundary: exactly −5 dB is immediate, exactly −15 dB is near.
        assert_eq!(proximity_level(-55.0, -50.0), ProximityLevel::Immediate);
        assert_eq!(proximity_level(-65.0, -50.0), ProximityLevel::Near);
    }

    #[test]
    fn threshold_escalation() {
        assert!((escalate_threshold(0.70, ProximityLevel::Near) - 0.80).abs() < 1e-12);
        assert!((escalate_threshold(0.70, ProximityLevel::Far) - 0.90).abs() < 1e-12);
        assert_eq!(escalate_threshold(0.95, ProximityLevel::Far), 1.0);
        assert_eq!(escalate_threshold(0.6, ProximityLevel::Immediate), 0.6);
    }

    fn offside_typing(start: i64) -> Interaction {
        Interaction {
            kind: Typing,
            start_ms: start,
            end_ms: start + 500,
            offside: true,
        }
    }

    #[test]
    fn blacklist_runs() {
        let run5: Vec<Interaction> = (0..5).map(|i| offside_typing(i * 1000)).collect();
        assert_eq!(blacklist_offside_typing(&run5, 5), BlacklistOutcome::TriggerDeauth);
        let run4: Vec<Interaction> = (0..4).map(|i| offside_typing(i * 1000)).collect();
        assert_eq!(blacklist_offside_typing(&run4, 5), BlacklistOutcome::Pass);

        // Two runs of 3 separated by an MKKM never concatenate.
        let mut seq: Vec<Interaction> = (0..3).map(|i| offside_typing(i * 1000)).collect();
        seq.push(Interaction::new(Mkkm, 3000, 4000));
        seq.extend((4..7).map(|i| offside_typing(i * 1000)));
        assert_eq!(blacklist_offside_typing(&seq, 5), BlacklistOutcome::Pass);
    }
}
