//! Victim session generator.
//!
//! Sessions alternate between three activity patterns — quick form-field
//! hops (short typing, a click, short hand hops), longer typing runs, and
//! scroll bursts — interleaved with idle pauses and optional upright
//! (walking/standing) epochs. The schedule is tuned to the measured desk
//! statistics: ≈1.2–1.8 extracted interactions per second, typing pieces
//! averaging a bit under a second, deliberate hand transitions of 1–1.5 s.
//!
//! Sensor magnitudes are emitted per ground-truth span: typing is a noisy
//! baseline with a short impulse per keystroke, scrolling is smooth low
//! noise, a hand transition is one smooth high-amplitude swell across the
//! gap, idle is near-zero white noise, and upright epochs oscillate at a
//! walking period with footfall impulses.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::interaction::{Interaction, InteractionKind};
use crate::trace::{EventKind, EventLog, KeySide, SensorSample, SensorTrace, TerminalEvent};

use super::{normal, SessionBundle};

/// Per-class magnitude signature parameters (accelerometer scale; the
/// gyroscope channel reuses them at [`SignatureParams::gyro_scale`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureParams {
    pub idle_base: f64,
    pub idle_noise: f64,
    pub scroll_base: f64,
    pub scroll_noise: f64,
    pub typing_base: f64,
    pub typing_noise: f64,
    pub key_impulse: f64,
    pub key_impulse_ms: f64,
    pub mkkm_peak: f64,
    pub mkkm_noise: f64,
    pub upright_center: f64,
    pub upright_amp: f64,
    pub upright_period_ms: f64,
    pub upright_noise: f64,
    pub gyro_scale: f64,
    /// Relative per-user jitter applied to the class amplitudes.
    pub user_jitter: f64,
}

impl Default for SignatureParams {
    fn default() -> Self {
        Self {
            idle_base: 0.06,
            idle_noise: 0.02,
            scroll_base: 0.42,
            scroll_noise: 0.06,
            typing_base: 0.95,
            typing_noise: 0.11,
            key_impulse: 0.85,
            key_impulse_ms: 14.0,
            mkkm_peak: 2.5,
            mkkm_noise: 0.05,
            upright_center: 1.0,
            upright_amp: 0.30,
            upright_period_ms: 1200.0,
            upright_noise: 0.045,
            gyro_scale: 0.55,
            user_jitter: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user_id: String,
    pub interaction_rate_per_s: f64,
    pub typing_duration_mean_ms: f64,
    pub mkkm_duration_range_ms: (i64, i64),
    pub signature: SignatureParams,
    pub jitter_seed: u64,
    /// Fraction of session time spent in upright epochs (0 disables them).
    pub upright_fraction: f64,
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>, jitter_seed: u64) -> Self {
        Self {
            user_id: user_id.into(),
            interaction_rate_per_s: 1.5,
            typing_duration_mean_ms: 900.0,
            mkkm_duration_range_ms: (1000, 1500),
            signature: SignatureParams::default(),
            jitter_seed,
            upright_fraction: 0.0,
        }
    }

    pub fn with_upright(mut self, fraction: f64) -> Self {
        self.upright_fraction = fraction;
        self
    }
}

/// Ground-truth motion over one time span; drives both the sensor synthesis
/// and, where it corresponds to an interaction class, the truth labels.
#[derive(Debug, Clone)]
pub(crate) enum Motion {
    Idle,
    Scroll,
    Typing { key_times: Vec<i64> },
    Hover,
    MkkmSwell,
    Upright { footfalls: Vec<i64> },
}

#[derive(Debug, Clone)]
pub(crate) struct MotionSpan {
    pub start: i64,
    pub end: i64,
    pub motion: Motion,
    pub amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Device {
    Keyboard,
    Mouse,
}

const SAMPLE_STEP_MS: i64 = 5; // 200 Hz
/// Quick hand hops between a form field and the mouse.
const HOP_GAP_MS: (f64, f64) = (150.0, 300.0);
const HOP_TYPING_MS: (f64, f64) = (540.0, 920.0);
const RUN_PIECE_MS: (f64, f64) = (780.0, 990.0);
const SCROLL_PIECE_MS: (f64, f64) = (500.0, 950.0);
const SCROLL_STEP_MS: (f64, f64) = (70.0, 95.0);
const KEY_STEP_MS: (f64, f64) = (70.0, 130.0);
const IDLE_PAUSE_MS: (f64, f64) = (1200.0, 2400.0);
const LONG_AWAY_MS: (f64, f64) = (5400.0, 9000.0);

struct Planner {
    rng: ChaCha8Rng,
    t: i64,
    device: Option<Device>,
    last_event_t: i64,
    events: Vec<TerminalEvent>,
    truth: Vec<Interaction>,
    spans: Vec<MotionSpan>,
    mkkm_range: (i64, i64),
    prev_piece_ms: i64,
}

impl Planner {
    fn uniform(&mut self, range: (f64, f64)) -> f64 {
        self.rng.gen_range(range.0..range.1)
    }

    fn span_amp(&mut self) -> f64 {
        1.0 + 0.05 * normal(&mut self.rng)
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

    fn push_span(&mut self, start: i64, end: i64, motion: Motion) {
        let amp = self.span_amp();
        self.spans.push(MotionSpan {
            start,
            end,
            motion,
            amp,
        });
    }

    /// Hand transition to the other device: emits the swell span and the
    /// MKKM truth label over exactly the event gap.
    fn transition(&mut self, gap_ms: i64) {
        let start = self.last_event_t;
        let end = start + gap_ms;
        self.push_span(start, end, Motion::MkkmSwell);
        self.truth.push(Interaction::new(InteractionKind::Mkkm, start, end));
        self.t = end;
    }

    fn transition_to(&mut self, target: Device, quick: bool) {
        if self.device == Some(target) {
            return;
        }
        if self.device.is_some() {
            let gap = if quick {
                self.uniform(HOP_GAP_MS) as i64
            } else {
                let (lo, hi) = self.mkkm_range;
                self.rng.gen_range(lo..=hi)
            };
            self.transition(gap);
        }
        self.device = Some(target);
    }

    /// One typing piece [t, t+duration]: keystrokes tile the interval with
    /// events pinned at both ends so the extracted piece matches exactly.
    fn typing_piece(&mut self, duration_ms: i64) {
        let start = self.t;
        let end = start + duration_ms;
        let mut key_times = vec![start];
        let mut k = start;
        loop {
            let step = self.uniform(KEY_STEP_MS) as i64;
            if k + step >= end - 25 {
                break;
            }
            k += step;
            key_times.push(k);
        }
        key_times.push(end);
        for &kt in &key_times {
            let side = self.key_side();
            self.events.push(TerminalEvent::key(kt, side));
        }
        self.truth
            .push(Interaction::new(InteractionKind::Typing, start, end));
        self.push_span(start, end, Motion::Typing { key_times });
        self.last_event_t = end;
        self.t = end;
    }

    /// Gap between two pieces of the same typing run, long enough that the
    /// greedy cap split reproduces the planned pieces, short enough that the
    /// run does not break at the idle threshold.
    fn intra_run_gap(&mut self, prev_piece_ms: i64) -> i64 {
        let floor = (1001 - prev_piece_ms).max(60);
        floor + self.uniform((20.0, 160.0)) as i64
    }

    fn hover(&mut self, gap_ms: i64) {
        let start = self.t;
        let end = start + gap_ms;
        self.push_span(start, end, Motion::Hover);
        self.t = end;
    }

    fn scroll_piece(&mut self, duration_ms: i64) {
        let start = self.t;
        let end = start + duration_ms;
        let mut times = vec![start];
        let mut k = start;
        loop {
            let step = self.uniform(SCROLL_STEP_MS) as i64;
            if k + step >= end - 20 {
                break;
            }
            k += step;
            times.push(k);
        }
        times.push(end);
        for &st in &times {
            self.events.push(TerminalEvent::mouse(st, EventKind::Scroll));
        }
        self.truth
            .push(Interaction::new(InteractionKind::Scrolling, start, end));
        self.push_span(start, end, Motion::Scroll);
        self.last_event_t = end;
        self.t = end;
    }

    /// Quick form-field hop: (return to keyboard), short typing, hop to the
    /// mouse, one or two clicks.
    fn field_hop(&mut self) {
        self.transition_to(Device::Keyboard, true);
        let d = self.uniform(HOP_TYPING_MS) as i64;
        self.typing_piece(d);
        self.transition_to(Device::Mouse, true);
        let n_clicks = if self.rng.gen::<f64>() < 0.25 { 2 } else { 1 };
        for c in 0..n_clicks {
            let ct = self.t + c * self.uniform((120.0, 220.0)) as i64;
            self.events.push(TerminalEvent::mouse(ct, EventKind::MouseClick));
            self.last_event_t = ct;
        }
        let click_end = self.last_event_t;
        if click_end > self.t {
            self.push_span(self.t, click_end, Motion::Scroll);
        }
        self.t = click_end;
    }

    /// Sustained typing: one run of 1–3 pieces with hover gaps.
    fn typing_run(&mut self) {
        self.transition_to(Device::Keyboard, false);
        let r: f64 = self.rng.gen();
        let pieces = if r < 0.5 {
            1
        } else if r < 0.85 {
            2
        } else {
            3
        };
        for p in 0..pieces {
            let d = self.uniform(RUN_PIECE_MS) as i64;
            if p > 0 {
                let gap = self.intra_run_gap(self.prev_piece_ms);
                self.hover(gap);
            }
            self.typing_piece(d);
            self.prev_piece_ms = d;
        }
    }

    /// Scroll burst: one or two scrolling pieces, sometimes with stray
    /// mouse moves around them.
    fn scroll_burst(&mut self) {
        self.transition_to(Device::Mouse, false);
        if self.rng.gen::<f64>() < 0.3 {
            let mt = self.t + self.uniform((60.0, 160.0)) as i64;
            self.events.push(TerminalEvent::mouse(mt, EventKind::MouseMove));
            self.push_span(self.t, mt, Motion::Scroll);
            self.last_event_t = mt;
            self.t = mt;
        }
        let pieces = if self.rng.gen::<f64>() < 0.4 { 2 } else { 1 };
        for p in 0..pieces {
            let d = self.uniform(SCROLL_PIECE_MS) as i64;
            if p > 0 {
                let gap = self.intra_run_gap(self.prev_piece_ms);
                let start = self.t;
                self.push_span(start, start + gap, Motion::Scroll);
                self.t = start + gap;
            }
            self.scroll_piece(d);
            self.prev_piece_ms = d;
        }
        if self.rng.gen::<f64>() < 0.3 {
            let mt = self.t + self.uniform((80.0, 200.0)) as i64;
            self.events.push(TerminalEvent::mouse(mt, EventKind::MouseMove));
            self.push_span(self.t, mt, Motion::Scroll);
            self.last_event_t = mt;
            self.t = mt;
        }
    }

    /// Short pause with the hands off the peripherals. The next activity
    /// stays on the same device so the pause never reads as a transition.
    fn idle_pause(&mut self) {
        let d = self.uniform(IDLE_PAUSE_MS) as i64;
        self.idle_span(d);
        match self.device {
            Some(Device::Mouse) => self.scroll_burst(),
            _ => self.typing_run(),
        }
    }

    fn idle_span(&mut self, duration_ms: i64) {
        let start = self.t;
        let end = start + duration_ms;
        self.push_span(start, end, Motion::Idle);
        if duration_ms >= 600 {
            self.truth
                .push(Interaction::new(InteractionKind::Idle, start, end));
        }
        self.t = end;
    }

    /// Pause long enough that no transition can bridge it.
    fn long_away(&mut self) {
        let d = self.uniform(LONG_AWAY_MS) as i64;
        self.idle_span(d);
        self.device = None;
    }

    fn upright_epoch(&mut self) {
        let d = self.uniform((8000.0, 15000.0)) as i64;
        let start = self.t;
        let end = start + d;
        let mut footfalls = Vec::new();
        let mut ft = start + self.uniform((200.0, 500.0)) as i64;
        while ft < end {
            footfalls.push(ft);
            ft += self.uniform((480.0, 620.0)) as i64;
        }
        self.push_span(start, end, Motion::Upright { footfalls });
        self.truth
            .push(Interaction::new(InteractionKind::Upright, start, end));
        self.t = end;
        self.device = None;
    }
}

/// Generates one session: terminal events, ground-truth spans, and the
/// bracelet trace, fully determined by (profile, duration, seed).
pub fn generate_session(profile: &UserProfile, duration_ms: i64, seed: u64) -> SessionBundle {
    assert!(duration_ms >= 5_000, "session too short to schedule");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(profile.jitter_seed.wrapping_mul(2).wrapping_add(1));
    let mut planner = Planner {
        rng,
        t: 0,
        device: None,
        last_event_t: 0,
        events: Vec::new(),
        truth: Vec::new(),
        spans: Vec::new(),
        mkkm_range: profile.mkkm_duration_range_ms,
        prev_piece_ms: 800,
    };

    // Scale the hop-heavy schedule toward the profile's target rate.
    let horizon = duration_ms - 1600;
    let mut upright_budget = (profile.upright_fraction * duration_ms as f64) as i64;
    while planner.t < horizon {
        if upright_budget > 0 && planner.rng.gen::<f64>() < 0.12 {
            let before = planner.t;
            planner.upright_epoch();
            upright_budget -= planner.t - before;
            continue;
        }
        let r: f64 = planner.rng.gen();
        if r < 0.65 {
            planner.field_hop();
        } else if r < 0.78 {
            planner.typing_run();
        } else if r < 0.92 {
            planner.scroll_burst();
        } else if r < 0.98 {
            planner.idle_pause();
        } else {
            planner.long_away();
        }
    }
    if planner.t < duration_ms {
        let tail = duration_ms - planner.t;
        planner.idle_span(tail);
    }

    let events = EventLog::new(planner.events, profile.user_id.clone())
        .expect("generated events are well-formed");
    let sensor = synthesize_sensor(profile, duration_ms, &planner.spans, seed);
    SessionBundle {
        sensor,
        events,
        truth: planner.truth,
        user_id: profile.user_id.clone(),
    }
}

/// Per-user amplitude factors, drawn from the profile's jitter seed.
struct UserFactors {
    idle: f64,
    scroll: f64,
    typing: f64,
    mkkm: f64,
    upright: f64,
}

fn user_factors(profile: &UserProfile) -> UserFactors {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.jitter_seed);
    let j = profile.signature.user_jitter;
    let mut f = || 1.0 + j * rng.gen_range(-1.0..1.0);
    UserFactors {
        idle: f(),
        scroll: f(),
        typing: f(),
        mkkm: f(),
        upright: f(),
    }
}

fn synthesize_sensor(
    profile: &UserProfile,
    duration_ms: i64,
    spans: &[MotionSpan],
    seed: u64,
) -> SensorTrace {
    let sig = &profile.signature;
    let uf = user_factors(profile);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(profile.jitter_seed.wrapping_mul(2));

    let n = (duration_ms / SAMPLE_STEP_MS) as usize + 1;
    let mut samples = Vec::with_capacity(n);
    let mut span_idx = 0usize;
    let mut key_ptr = 0usize;
    let mut foot_ptr = 0usize;
    // Smooth-noise state per channel, reset on span change.
    let mut ar = [0.0f64; 2];
    let mut last_span: isize = -1;

    let dir_seed = profile.jitter_seed as f64;
    for i in 0..n {
        let t = i as i64 * SAMPLE_STEP_MS;
        while span_idx < spans.len() && spans[span_idx].end < t {
            span_idx += 1;
        }
        let span = spans.get(span_idx).filter(|s| s.start <= t && t <= s.end);
        if span_idx as isize != last_span {
            last_span = span_idx as isize;
            key_ptr = 0;
            foot_ptr = 0;
            ar = [0.0; 2];
        }

        let mut mags = [0.0f64; 2];
        for (ch, mag) in mags.iter_mut().enumerate() {
            let scale = if ch == 0 { 1.0 } else { sig.gyro_scale };
            let white = normal(&mut rng);
            let m = match span.map(|s| (&s.motion, s.amp)) {
                None | Some((Motion::Idle, _)) => {
                    sig.idle_base * uf.idle + sig.idle_noise * white
                }
                Some((Motion::Scroll, amp)) => {
                    let rho = 0.95;
                    ar[ch] = rho * ar[ch] + (1.0 - rho * rho).sqrt() * sig.scroll_noise * white;
                    sig.scroll_base * uf.scroll * amp + ar[ch]
                }
                Some((Motion::Hover, amp)) => {
                    0.85 * sig.typing_base * uf.typing * amp + 0.6 * sig.typing_noise * white
                }
                Some((Motion::Typing { key_times }, amp)) => {
                    while key_ptr + 1 < key_times.len()
                        && key_times[key_ptr] + sig.key_impulse_ms as i64 <= t
                    {
                        key_ptr += 1;
                    }
                    let mut impulse = 0.0;
                    if key_ptr < key_times.len() {
                        let dt = (t - key_times[key_ptr]) as f64;
                        if (0.0..sig.key_impulse_ms).contains(&dt) {
                            impulse = sig.key_impulse * (1.0 - dt / sig.key_impulse_ms);
                        }
                    }
                    sig.typing_base * uf.typing * amp + impulse + sig.typing_noise * white
                }
                Some((Motion::MkkmSwell, amp)) => {
                    let (s, e) = (spans[span_idx].start, spans[span_idx].end);
                    let progress = (t - s) as f64 / (e - s).max(1) as f64;
                    let rho = 0.9;
                    ar[ch] = rho * ar[ch] + (1.0 - rho * rho).sqrt() * sig.mkkm_noise * white;
                    sig.idle_base
                        + sig.mkkm_peak * uf.mkkm * amp * (std::f64::consts::PI * progress).sin()
                        + ar[ch]
                }
                Some((Motion::Upright { footfalls }, amp)) => {
                    let s = spans[span_idx].start;
                    let phase = std::f64::consts::TAU * ((t - s) as f64 / sig.upright_period_ms
                        + 0.1 * dir_seed);
                    while foot_ptr + 1 < footfalls.len() && footfalls[foot_ptr] + 20 <= t {
                        foot_ptr += 1;
                    }
                    let mut impulse = 0.0;
                    if foot_ptr < footfalls.len() {
                        let dt = (t - footfalls[foot_ptr]) as f64;
                        if (0.0..18.0).contains(&dt) {
                            impulse = 0.7 * (1.0 - dt / 18.0);
                        }
                    }
                    sig.upright_center * uf.upright * amp
                        + sig.upright_amp * phase.sin()
                        + impulse
                        + sig.upright_noise * white
                }
            };
            *mag = (m * scale).max(0.0);
        }

        // Slowly drifting unit directions keep the axes alive while the
        // magnitude carries the signal exactly.
        let phi = 0.4 * ((t as f64 / 9000.0) + dir_seed).sin();
        let (sp, cp) = phi.sin_cos();
        let accel_dir = [cp, sp * 0.6, sp * 0.8];
        let psi = 0.4 * ((t as f64 / 7000.0) + 1.3 + dir_seed).sin();
        let (sq, cq) = psi.sin_cos();
        let gyro_dir = [sq * 0.8, cq, sq * 0.6];
        samples.push(SensorSample {
            t,
            accel: [
                mags[0] * accel_dir[0],
                mags[0] * accel_dir[1],
                mags[0] * accel_dir[2],
            ],
            gyro: [
                mags[1] * gyro_dir[0],
                mags[1] * gyro_dir[1],
                mags[1] * gyro_dir[2],
            ],
        });
    }

    SensorTrace {
        samples,
        nominal_rate_hz: 1000.0 / SAMPLE_STEP_MS as f64,
    }
}
