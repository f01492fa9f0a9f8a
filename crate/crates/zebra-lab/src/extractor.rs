//! Interaction extractor: turns a terminal event log into the actual
//! interaction sequence (typing, scrolling, mouse↔keyboard hand movements).
//!
//! Rules:
//!
//! * Consecutive key presses with gaps under the idle threshold merge into a
//!   typing run; runs are split greedily left-to-right into pieces of at most
//!   the maximum duration, each piece starting at the first uncovered key
//!   event. Pieces shorter than the minimum duration are discarded.
//! * Scroll events merge the same way (mouse moves and clicks neither break
//!   nor extend a scroll run); a piece is emitted only if it spans the
//!   minimum duration and contains at least `min_scroll_events` scrolls.
//! * A device transition whose gap is positive and at most `mkkm_max_ms`
//!   emits an MKKM interaction covering exactly the gap interval.
//! * Dominant-hand rule: a mouse→keyboard transition yields an MKKM only if
//!   the first keypress lands on the bracelet side of the keyboard or in the
//!   middle. Otherwise the bracelet hand is assumed to have stayed on the
//!   mouse, no MKKM is emitted, and all typing up to the next mouse activity
//!   is emitted flagged `offside`.
//! * Mouse moves and clicks establish mouse activity for transition
//!   detection but never form interactions of their own.

use crate::interaction::{Interaction, InteractionKind};
use crate::trace::{EventKind, EventLog, KeySide, TerminalEvent};

/// Hand the bracelet is worn on (the mouse-controlling hand).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    fn matches(self, side: KeySide) -> bool {
        matches!(
            (self, side),
            (Hand::Left, KeySide::Left) | (Hand::Right, KeySide::Right) | (_, KeySide::Middle)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractorConfig {
    pub min_duration_ms: i64,
    pub max_duration_ms: i64,
    pub idle_threshold_ms: i64,
    pub mkkm_max_ms: i64,
    pub min_scroll_events: usize,
    pub bracelet_hand: Hand,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            min_duration_ms: 25,
            max_duration_ms: 1000,
            idle_threshold_ms: 1000,
            mkkm_max_ms: 5000,
            min_scroll_events: 5,
            bracelet_hand: Hand::Right,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> bool {
        0 < self.min_duration_ms
            && self.min_duration_ms <= self.max_duration_ms
            && self.mkkm_max_ms >= self.max_duration_ms
            && self.min_scroll_events >= 1
            && self.idle_threshold_ms > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Device {
    Keyboard,
    Mouse,
}

fn device_of(kind: EventKind) -> Device {
    if kind.is_keyboard() {
        Device::Keyboard
    } else {
        Device::Mouse
    }
}

/// A maximal stretch of same-device events.
struct Block<'a> {
    device: Device,
    events: &'a [TerminalEvent],
}

fn partition_blocks(events: &[TerminalEvent]) -> Vec<Block<'_>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=events.len() {
        if i == events.len() || device_of(events[i].kind) != device_of(events[start].kind) {
            blocks.push(Block {
                device: device_of(events[start].kind),
                events: &events[start..i],
            });
            start = i;
        }
    }
    blocks
}

/// Splits ascending event times into runs at gaps >= `idle_threshold`, then
/// greedily cuts each run into pieces spanning at most `max_duration`. Each
/// piece is the index range `[i, j]` (inclusive) into `times`.
fn run_pieces(times: &[i64], idle_threshold: i64, max_duration: i64) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut run_start = 0;
    for i in 1..=times.len() {
        if i == times.len() || times[i] - times[i - 1] >= idle_threshold {
            // Greedy left-to-right cap split within times[run_start..i].
            let mut a = run_start;
            while a < i {
                let mut b = a;
                while b + 1 < i && times[b + 1] - times[a] <= max_duration {
                    b += 1;
                }
                pieces.push((a, b));
                a = b + 1;
            }
            run_start = i;
        }
    }
    pieces
}

/// Extracts the actual interaction sequence from a terminal event log.
/// Output is sorted by start time with pairwise non-overlapping intervals;
/// an empty log yields an empty sequence.
pub fn extract_interactions(log: &EventLog, cfg: &ExtractorConfig) -> Vec<Interaction> {
    debug_assert!(cfg.validate(), "invalid extractor config");
    let blocks = partition_blocks(&log.events);
    let mut out: Vec<Interaction> = Vec::new();

    // Whether the pending keyboard block follows a suppressed mouse→keyboard
    // transition (typing untrusted until the next mouse activity).
    let mut offside_block = vec![false; blocks.len()];
    for w in 1..blocks.len() {
        let (prev, cur) = (&blocks[w - 1], &blocks[w]);
        if prev.device == Device::Mouse && cur.device == Device::Keyboard {
            let first_key = cur.events[0];
            offside_block[w] = !cfg.bracelet_hand.matches(first_key.key_side);
        }
    }

    for (w, block) in blocks.iter().enumerate() {
        // MKKM over the transition gap into this block.
        if w > 0 {
            let prev = &blocks[w - 1];
            let gap_start = prev.events.last().unwrap().t;
            let gap_end = block.events[0].t;
            let gap = gap_end - gap_start;
            let hand_ok = block.device == Device::Mouse || !offside_block[w];
            if gap > 0 && gap <= cfg.mkkm_max_ms && hand_ok {
                out.push(Interaction::new(InteractionKind::Mkkm, gap_start, gap_end));
            }
        }

        match block.device {
            Device::Keyboard => {
                let times: Vec<i64> = block.events.iter().map(|e| e.t).collect();
                for (a, b) in run_pieces(&times, cfg.idle_threshold_ms, cfg.max_duration_ms) {
                    let (start, end) = (times[a], times[b]);
                    if end - start >= cfg.min_duration_ms {
                        out.push(Interaction {
                            kind: InteractionKind::Typing,
                            start_ms: start,
                            end_ms: end,
                            offside: offside_block[w],
                        });
                    }
                }
            }
            Device::Mouse => {
                let scroll_times: Vec<i64> = block
                    .events
                    .iter()
                    .filter(|e| e.kind == EventKind::Scroll)
                    .map(|e| e.t)
                    .collect();
                for (a, b) in run_pieces(&scroll_times, cfg.idle_threshold_ms, cfg.max_duration_ms)
                {
                    let (start, end) = (scroll_times[a], scroll_times[b]);
                    let n_events = b - a + 1;
                    if end - start >= cfg.min_duration_ms && n_events >= cfg.min_scroll_events {
                        out.push(Interaction::new(InteractionKind::Scrolling, start, end));
                    }
                }
            }
        }
    }

    debug_assert!(out.windows(2).all(|w| w[0].start_ms <= w[1].start_ms
        && w[0].end_ms <= w[1].start_ms));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{EventLog, KeySide, TerminalEvent};

    fn keys(times: &[i64]) -> Vec<TerminalEvent> {
        times.iter().map(|&t| TerminalEvent::key(t, KeySide::Middle)).collect()
    }

    fn log(events: Vec<TerminalEvent>) -> EventLog {
        EventLog::new(events, "t").unwrap()
    }

    fn cfg() -> ExtractorConfig {
        ExtractorConfig::default()
    }

    #[test]
    fn merged_typing_run_under_cap() {
        let l = log(keys(&(0..10).map(|i| i * 100).collect::<Vec<_>>()));
        let seq = extract_interactions(&l, &cfg());
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0].kind, InteractionKind::Typing);
        assert_eq!((seq[0].start_ms, seq[0].end_ms), (0, 900));
    }

    #[test]
    fn four_scrolls_do_not_make_a_scrolling_interaction() {
        let events: Vec<TerminalEvent> = (0..4)
            .map(|i| TerminalEvent::mouse(i * 30, EventKind::Scroll))
            .collect();
        let seq = extract_interactions(&log(events), &cfg());
        assert!(seq.is_empty());

        // Five scrolls over the same span do qualify.
        let events: Vec<TerminalEvent> = (0..5)
            .map(|i| TerminalEvent::mouse(i * 25, EventKind::Scroll))
            .collect();
        let seq = extract_interactions(&log(events), &cfg());
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0].kind, InteractionKind::Scrolling);
        assert_eq!((seq[0].start_ms, seq[0].end_ms), (0, 100));
    }

    #[test]
    fn mkkm_spans_the_device_gap_and_respects_the_cap() {
        let mut events = keys(&[0]);
        events.push(TerminalEvent::mouse(1200, EventKind::Scroll));
        let seq = extract_interactions(&log(events), &cfg());
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0].kind, InteractionKind::Mkkm);
        assert_eq!((seq[0].start_ms, seq[0].end_ms), (0, 1200));

        let mut events = keys(&[0]);
        events.push(TerminalEvent::mouse(6000, EventKind::Scroll));
        let seq = extract_interactions(&log(events), &cfg());
        assert!(seq.is_empty());
    }

    #[test]
    fn offside_first_key_suppresses_mkkm_and_flags_typing() {
        let events = vec![
            TerminalEvent::mouse(0, EventKind::Scroll),
            TerminalEvent::key(500, KeySide::Left),
            TerminalEvent::key(600, KeySide::Right),
            TerminalEvent::key(700, KeySide::Right),
        ];
        let seq = extract_interactions(&log(events), &cfg());
        assert!(seq.iter().all(|i| i.kind != InteractionKind::Mkkm));
        let typing: Vec<&Interaction> =
            seq.iter().filter(|i| i.kind == InteractionKind::Typing).collect();
        assert_eq!(typing.len(), 1);
        assert!(typing[0].offside);

        // Bracelet-side first key: MKKM is emitted and typing is not flagged.
        let events = vec![
            TerminalEvent::mouse(0, EventKind::Scroll),
            TerminalEvent::key(500, KeySide::Right),
            TerminalEvent::key(700, KeySide::Left),
        ];
        let seq = extract_interactions(&log(events), &cfg());
        assert_eq!(seq[0].kind, InteractionKind::Mkkm);
        assert_eq!((seq[0].start_ms, seq[0].end_ms), (0, 500));
        assert!(seq[1].kind == InteractionKind::Typing && !seq[1].offside);
    }

    #[test]
    fn overlong_typing_run_splits_greedily() {
        let times: Vec<i64> = (0..19).map(|i| i * 100).collect(); // 0..1800
        let seq = extract_interactions(&log(keys(&times)), &cfg());
        // Reference extractor: brute-force split of the merged run.
        let expected = brute_force_typing(&times, &cfg());
        let got: Vec<(i64, i64)> = seq.iter().map(|i| (i.start_ms, i.end_ms)).collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![(0, 1000), (1100, 1800)]);
    }

    /// Independent re-derivation of the typing rules for key-only logs.
    fn brute_force_typing(times: &[i64], cfg: &ExtractorConfig) -> Vec<(i64, i64)> {
        let mut runs: Vec<Vec<i64>> = Vec::new();
        for &t in times {
            match runs.last_mut() {
                Some(run) if t - *run.last().unwrap() < cfg.idle_threshold_ms => run.push(t),
                _ => runs.push(vec![t]),
            }
        }
        let mut out = Vec::new();
        for run in runs {
            let mut i = 0;
            while i < run.len() {
                let start = run[i];
                let mut j = i;
                for (k, &t) in run.iter().enumerate().skip(i + 1) {
                    if t - start <= cfg.max_duration_ms {
                        j = k;
                    } else {
                        break;
                    }
                }
                if run[j] - start >= cfg.min_duration_ms {
                    out.push((start, run[j]));
                }
                i = j + 1;
            }
        }
        out
    }

    #[test]
    fn moves_are_transparent_to_scroll_runs() {
        // A move between scrolls neither breaks the run nor counts toward the
        // five-event minimum.
        let mut events = vec![TerminalEvent::mouse(0, EventKind::Scroll)];
        events.push(TerminalEvent::mouse(400, EventKind::MouseMove));
        for i in 1..5 {
            events.push(TerminalEvent::mouse(i * 200, EventKind::Scroll));
        }
        events.sort_by_key(|e| e.t);
        let seq = extract_interactions(&log(events), &cfg());
        assert_eq!(seq.len(), 1);
        assert_eq!((seq[0].start_ms, seq[0].end_ms), (0, 800));

        // A move does not bridge a gap of at least the idle threshold.
        let events = vec![
            TerminalEvent::mouse(0, EventKind::Scroll),
            TerminalEvent::mouse(800, EventKind::MouseMove),
            TerminalEvent::mouse(1700, EventKind::Scroll),
        ];
        let seq = extract_interactions(&log(events), &cfg());
        assert!(seq.is_empty());
    }

    #[test]
    fn short_single_keypress_is_discarded() {
        let seq = extract_interactions(&log(keys(&[100])), &cfg());
        assert!(seq.is_empty());
    }

    #[test]
    fn empty_log_yields_empty_sequence() {
        let seq = extract_interactions(&log(vec![]), &cfg());
        assert!(seq.is_empty());
    }

    #[test]
    fn hand_rule_holds_even_past_the_mkkm_cap() {
        // Gap above the MKKM cap: no MKKM either way, but an offside first
        // key still marks the typing as untrusted.
        let events = vec![
            TerminalEvent::mouse(0, EventKind::MouseClick),
            TerminalEvent::key(5500, KeySide::Left),
            TerminalEvent::key(5700, KeySide::Left),
        ];
        let seq = extract_interactions(&log(events), &cfg());
        assert_eq!(seq.len(), 1);
        assert!(seq[0].offside);
    }
}
