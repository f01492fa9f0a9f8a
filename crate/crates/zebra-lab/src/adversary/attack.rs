//! Attacker models: transforms a victim session into the terminal events an
//! attacker produces at the attacked terminal while watching (or listening
//! to) the victim.
//!
//! All strategies are causal: the attacker reacts to victim activity, never
//! anticipates it. Reaction latency is lognormal around the profile median;
//! a zero-median, zero-sigma profile degenerates to a perfect mimic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::extractor::{extract_interactions, ExtractorConfig};
use crate::interaction::{Interaction, InteractionKind};
use crate::trace::{EventKind, EventLog, KeySide, TerminalEvent};

use super::{normal, SessionBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackStrategy {
    /// Mimic every interaction, keyboard and mouse, as the original
    /// evaluation's attacker did.
    NaiveAll,
    /// Opportunistic: mimic only a chosen subset of the typing.
    OppKeyboard,
    /// Opportunistic over all interaction types, gated by hand-transition
    /// success.
    OppAll,
    /// Keyboard-only mimicry from sound alone.
    AudioKeyboard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerProfile {
    pub strategy: AttackStrategy,
    pub latency_median_ms: f64,
    pub latency_sigma_log: f64,
    /// Fraction of the victim's typing interactions mimicked (longest
    /// first) by the keyboard-only strategies.
    pub mimic_fraction: f64,
    pub miss_probability: f64,
    pub early_stop_probability: f64,
    /// Latency multiplier when working from audio only.
    pub audio_latency_factor: f64,
    /// Probability of noticing an interaction from audio only.
    pub audio_detection_prob: f64,
}

impl AttackerProfile {
    pub fn new(strategy: AttackStrategy) -> Self {
        Self {
            strategy,
            latency_median_ms: 300.0,
            latency_sigma_log: 0.4,
            mimic_fraction: if strategy == AttackStrategy::NaiveAll {
                1.0
            } else {
                0.6
            },
            miss_probability: if strategy == AttackStrategy::NaiveAll {
                0.1
            } else {
                0.0
            },
            early_stop_probability: if strategy == AttackStrategy::NaiveAll {
                0.0
            } else {
                0.15
            },
            audio_latency_factor: 1.5,
            audio_detection_prob: 0.8,
        }
    }

    pub fn naive_all() -> Self {
        Self::new(AttackStrategy::NaiveAll)
    }

    pub fn opp_keyboard() -> Self {
        Self::new(AttackStrategy::OppKeyboard)
    }

    pub fn opp_all() -> Self {
        Self::new(AttackStrategy::OppAll)
    }

    pub fn audio_keyboard() -> Self {
        Self::new(AttackStrategy::AudioKeyboard)
    }

    /// Zero-latency, zero-miss naive mimic: reproduces the victim's event
    /// log exactly.
    pub fn perfect_mimic() -> Self {
        Self {
            latency_median_ms: 0.0,
            latency_sigma_log: 0.0,
            mimic_fraction: 1.0,
            miss_probability: 0.0,
            early_stop_probability: 0.0,
            ..Self::new(AttackStrategy::NaiveAll)
        }
    }

    pub fn validate(&self) -> bool {
        self.latency_median_ms >= 0.0
            && self.latency_sigma_log >= 0.0
            && (0.0..=1.0).contains(&self.mimic_fraction)
            && (0.0..=1.0).contains(&self.miss_probability)
            && (0.0..=1.0).contains(&self.early_stop_probability)
            && (0.0..=1.0).contains(&self.audio_detection_prob)
            && self.audio_latency_factor >= 0.0
    }
}

struct Draws<'a> {
    profile: &'a AttackerProfile,
    rng: ChaCha8Rng,
    latency_scale: f64,
}

impl Draws<'_> {
    fn latency(&mut self) -> i64 {
        let m = self.profile.latency_median_ms * self.latency_scale;
        (m * (self.profile.latency_sigma_log * normal(&mut self.rng)).exp()).round() as i64
    }

    /// Duration perturbation, at most ±20%, vanishing with the latency sigma.
    fn duration_factor(&mut self) -> f64 {
        (0.3 * self.profile.latency_sigma_log * normal(&mut self.rng))
            .exp()
            .clamp(0.8, 1.2)
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen::<f64>() < p
    }

    fn key_side(&mut self) -> KeySide {
        let r: f64 = self.rng.gen();
        if r < 0.4 {
            KeySide::Left
        } else if r < 0.6 {
            KeySide::Middle
        } else {
            KeySide::Right
        }
    }

    /// Keystrokes tiling [start, end], endpoints pinned.
    fn type_burst(&mut self, start: i64, end: i64, first_side: Option<KeySide>, out: &mut Vec<TerminalEvent>) {
        if end - start < 40 {
            return;
        }
        let mut t = start;
        let mut first = true;
        while t < end {
            let side = match (first, first_side) {
                (true, Some(s)) => s,
                _ => self.key_side(),
            };
            out.push(TerminalEvent::key(t, side));
            first = false;
            t += self.rng.gen_range(80..121);
            if t >= end - 30 {
                break;
            }
        }
        out.push(TerminalEvent::key(end, self.key_side()));
    }

    /// Scroll events tiling [start, end], endpoints pinned.
    fn scroll_burst(&mut self, start: i64, end: i64, out: &mut Vec<TerminalEvent>) {
        if end - start < 40 {
            return;
        }
        let mut t = start;
        while t < end {
            out.push(TerminalEvent::mouse(t, EventKind::Scroll));
            t += self.rng.gen_range(70..101);
            if t >= end - 25 {
                break;
            }
        }
        out.push(TerminalEvent::mouse(end, EventKind::Scroll));
    }
}

/// Produces the attacker's terminal event log for one victim session.
pub fn apply_attack(victim: &SessionBundle, profile: &AttackerProfile, seed: u64) -> EventLog {
    debug_assert!(profile.validate());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let latency_scale = if profile.strategy == AttackStrategy::AudioKeyboard {
        profile.audio_latency_factor
    } else {
        1.0
    };
    let mut draws = Draws {
        profile,
        rng,
        latency_scale,
    };
    let events = match profile.strategy {
        AttackStrategy::NaiveAll => naive_all(victim, &mut draws),
        AttackStrategy::OppKeyboard | AttackStrategy::AudioKeyboard => {
            keyboard_only(victim, &mut draws)
        }
        AttackStrategy::OppAll => opp_all(victim, &mut draws),
    };
    EventLog::new(events, format!("attack-{}", victim.user_id))
        .expect("attacker events are well-formed")
}

/// Replays every victim event; each extracted interaction gets a fresh
/// latency shift, an independent miss draw, and a duration perturbation of
/// at most ±20%. Stray events (moves, clicks, sub-threshold bursts) travel
/// with the shift of the most recent interaction.
fn naive_all(victim: &SessionBundle, draws: &mut Draws<'_>) -> Vec<TerminalEvent> {
    let cfg = ExtractorConfig::default();
    let seq = extract_interactions(&victim.events, &cfg);
    let owned: Vec<Option<usize>> = assign_events(&victim.events.events, &seq);

    struct Transform {
        latency: i64,
        factor: f64,
        miss: bool,
    }
    let transforms: Vec<Transform> = seq
        .iter()
        .map(|_| Transform {
            latency: draws.latency(),
            factor: draws.duration_factor(),
            miss: draws.chance(draws.profile.miss_probability),
        })
        .collect();

    let mut out: Vec<TerminalEvent> = Vec::with_capacity(victim.events.events.len());
    let mut running_shift = 0i64;
    let mut last_t = i64::MIN;
    for (event, owner) in victim.events.events.iter().zip(owned.iter()) {
        let t = match owner {
            Some(i) => {
                let tr = &transforms[*i];
                if tr.miss {
                    continue;
                }
                running_shift = tr.latency;
                let span = &seq[*i];
                span.start_ms + tr.latency
                    + ((event.t - span.start_ms) as f64 * tr.factor).round() as i64
            }
            None => event.t + running_shift.max(0),
        };
        let t = t.max(last_t);
        last_t = t;
        out.push(TerminalEvent { t, ..*event });
    }
    out
}

/// Maps each event to the interaction that owns it: typing pieces own their
/// key presses, scrolling pieces their scroll events.
fn assign_events(events: &[TerminalEvent], seq: &[Interaction]) -> Vec<Option<usize>> {
    let mut owner = vec![None; events.len()];
    let mut si = 0usize;
    for (ei, e) in events.iter().enumerate() {
        while si < seq.len() && seq[si].end_ms < e.t {
            si += 1;
        }
        for (j, span) in seq.iter().enumerate().skip(si) {
            if span.start_ms > e.t {
                break;
            }
            let matches = match span.kind {
                InteractionKind::Typing => e.kind == EventKind::KeyDown,
                InteractionKind::Scrolling => e.kind == EventKind::Scroll,
                _ => false,
            };
            if matches && span.start_ms <= e.t && e.t <= span.end_ms {
                owner[ei] = Some(j);
                break;
            }
        }
    }
    owner
}

/// Keyboard-only mimicry: picks `mimic_fraction` of the victim's typing
/// interactions longest-first, starts each after a reaction latency, and
/// ends with the victim (or a bit earlier). Never touches the mouse.
fn keyboard_only(victim: &SessionBundle, draws: &mut Draws<'_>) -> Vec<TerminalEvent> {
    let audio = draws.profile.strategy == AttackStrategy::AudioKeyboard;
    let typing: Vec<&Interaction> = victim
        .truth
        .iter()
        .filter(|i| i.kind == InteractionKind::Typing)
        .collect();
    let mut by_len: Vec<usize> = (0..typing.len()).collect();
    by_len.sort_by_key(|&i| (-(typing[i].duration_ms()), typing[i].start_ms));
    let k = (draws.profile.mimic_fraction * typing.len() as f64).round() as usize;
    let mut selected: Vec<usize> = by_len.into_iter().take(k).collect();
    selected.sort_unstable();

    let mut out = Vec::new();
    let mut last_end = i64::MIN;
    for i in selected {
        let span = typing[i];
        if audio && !draws.chance(draws.profile.audio_detection_prob) {
            continue;
        }
        if draws.chance(draws.profile.miss_probability) {
            continue;
        }
        let start = span.start_ms + draws.latency();
        let mut end = span.end_ms;
        if draws.chance(draws.profile.early_stop_probability) {
            let frac = draws.rng.gen_range(0.7..1.0);
            end = start + ((end - start) as f64 * frac).round() as i64;
        }
        let start = start.max(last_end + 40);
        if end - start < 40 {
            continue;
        }
        draws.type_burst(start, end, None, &mut out);
        last_end = end;
    }
    out
}

/// Opportunistic all-activity attack. Every victim hand transition is an
/// attempt gated by the reaction latency: too slow means the attacker sits
/// out everything until the next transition; fast enough means he follows
/// the victim onto the new device — typing is mimicked piece by piece
/// (leading with a bracelet-side key so his own transition registers), and
/// after a keyboard→mouse transition he scrolls at will until the victim
/// leaves the mouse.
fn opp_all(victim: &SessionBundle, draws: &mut Draws<'_>) -> Vec<TerminalEvent> {
    #[derive(PartialEq, Clone, Copy)]
    enum State {
        Tracking,
        Waiting,
    }
    let active: Vec<&Interaction> = victim
        .truth
        .iter()
        .filter(|i| i.kind.is_base())
        .collect();
    let mut out = Vec::new();
    let mut state = State::Tracking;
    let mut last_end = i64::MIN;
    let mut lead_side: Option<KeySide> = None;
    for (idx, span) in active.iter().enumerate() {
        match span.kind {
            InteractionKind::Mkkm => {
                let latency = draws.latency();
                if latency <= span.duration_ms() {
                    // Transition mimicked: resume tracking on the new device.
                    state = State::Tracking;
                    let to_keyboard = active
                        .get(idx + 1)
                        .map(|n| n.kind == InteractionKind::Typing)
                        .unwrap_or(false);
                    lead_side = to_keyboard.then_some(KeySide::Right);
                } else {
                    state = State::Waiting;
                }
            }
            InteractionKind::Typing if state == State::Tracking => {
                let start = (span.start_ms + draws.latency()).max(last_end + 40);
                let end = span.end_ms;
                if end - start >= 40 {
                    draws.type_burst(start, end, lead_side, &mut out);
                    last_end = end;
                }
                lead_side = None;
            }
            InteractionKind::Scrolling if state == State::Tracking => {
                let start = (span.start_ms + draws.latency()).max(last_end + 40);
                let end = span.end_ms;
                if end - start >= 40 {
                    draws.scroll_burst(start, end, &mut out);
                    last_end = end;
                }
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{generate_session, UserProfile};
    use crate::extractor::{extract_interactions, ExtractorConfig};

    #[test]
    fn perfect_mimic_replays_the_event_log_exactly() {
        for seed in [1u64, 9, 77] {
            let victim = generate_session(&UserProfile::new("u00", 5), 120_000, seed);
            let log = apply_attack(&victim, &AttackerProfile::perfect_mimic(), seed + 1);
            assert_eq!(log.events, victim.events.events);
            let cfg = ExtractorConfig::default();
            assert_eq!(
                extract_interactions(&log, &cfg),
                extract_interactions(&victim.events, &cfg)
            );
        }
    }

    #[test]
    fn keyboard_only_emits_no_mouse_events() {
        let victim = generate_session(&UserProfile::new("u01", 8), 180_000, 3);
        for profile in [AttackerProfile::opp_keyboard(), AttackerProfile::audio_keyboard()] {
            let log = apply_attack(&victim, &profile, 11);
            assert!(log.events.iter().all(|e| e.kind == EventKind::KeyDown));
            assert!(!log.events.is_empty());
        }
    }

    fn typing_count(log: &crate::trace::EventLog) -> usize {
        extract_interactions(log, &ExtractorConfig::default())
            .iter()
            .filter(|i| i.kind == InteractionKind::Typing)
            .count()
    }

    #[test]
    fn opp_keyboard_mimics_the_selected_fraction() {
        let victim = generate_session(&UserProfile::new("u02", 13), 600_000, 21);
        let victim_typing = typing_count(&victim.events) as f64;

        // Instant reactions isolate the selection rule: exactly the chosen
        // fraction of typing interactions comes back out of the extractor.
        let mut instant = AttackerProfile::opp_keyboard();
        instant.latency_median_ms = 0.0;
        instant.latency_sigma_log = 0.0;
        instant.early_stop_probability = 0.0;
        let log = apply_attack(&victim, &instant, 22);
        let expected = (0.6 * victim_typing).round();
        assert!(
            (typing_count(&log) as f64 - expected).abs() <= 1.0,
            "attacker typing {}, victim typing {victim_typing}, expected ≈{expected}",
            typing_count(&log)
        );

        // With human reaction latency some short pieces shrink away; the
        // reproduced share stays around 60%.
        let log = apply_attack(&victim, &AttackerProfile::opp_keyboard(), 22);
        let share = typing_count(&log) as f64 / victim_typing;
        assert!((0.52..=0.65).contains(&share), "share {share}");
    }

    #[test]
    fn attacker_events_are_causal() {
        let victim = generate_session(&UserProfile::new("u03", 2), 180_000, 5);
        let first_truth = victim.truth.first().unwrap().start_ms;
        for profile in [
            AttackerProfile::naive_all(),
            AttackerProfile::opp_keyboard(),
            AttackerProfile::opp_all(),
            AttackerProfile::audio_keyboard(),
        ] {
            let log = apply_attack(&victim, &profile, 31);
            if let Some(first) = log.events.first() {
                assert!(first.t >= first_truth);
            }
        }
    }
}
