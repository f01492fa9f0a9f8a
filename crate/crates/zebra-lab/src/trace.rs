//! Raw input streams: bracelet sensor traces and terminal event logs.
//!
//! Both streams use line-delimited text formats that round-trip exactly:
//!
//! * sensor trace — optional `#rate_hz=<number>` header, then one record per
//!   line: `t_ms ax ay az gx gy gz`
//! * event log — one record per line: `t_ms kind key_side` with
//!   kind ∈ {KEY, SCROLL, MOVE, CLICK} and key_side ∈ {L, M, R, -}
//!
//! Timestamps are integer milliseconds since session start; sub-millisecond
//! values encountered at ingestion are rounded half-up.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {0}: malformed record")]
    MalformedLine(usize),
    #[error("line {0}: non-monotonic timestamp")]
    NonMonotonicTimestamp(usize),
    #[error("trace contains no samples")]
    EmptyTrace,
    #[error("cannot infer sampling rate from fewer than two samples")]
    CannotInferRate,
    #[error("stated rate {nominal_hz} Hz inconsistent with median gap {median_gap_ms} ms")]
    RateInconsistent { nominal_hz: f64, median_gap_ms: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One bracelet reading: timestamp plus 3-axis accelerometer (m/s²) and
/// gyroscope (rad/s) vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    pub t: i64,
    pub accel: [f64; 3],
    pub gyro: [f64; 3],
}

impl SensorSample {
    pub fn accel_magnitude(&self) -> f64 {
        norm3(self.accel)
    }

    pub fn gyro_magnitude(&self) -> f64 {
        norm3(self.gyro)
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// An ordered bracelet recording with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    pub samples: Vec<SensorSample>,
    pub nominal_rate_hz: f64,
}

impl SensorTrace {
    /// Builds a trace, validating ordering, finiteness and that the median
    /// inter-sample gap is within 20% of `1000 / nominal_rate_hz`.
    pub fn new(samples: Vec<SensorSample>, nominal_rate_hz: f64) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.accel.iter().chain(s.gyro.iter()).all(|v| v.is_finite());
            if !finite || s.t < 0 {
                return Err(TraceError::MalformedLine(i + 1));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TraceError::NonMonotonicTimestamp(i + 1));
            }
        }
        if !(nominal_rate_hz.is_finite() && nominal_rate_hz > 0.0) {
            return Err(TraceError::RateInconsistent {
                nominal_hz: nominal_rate_hz,
                median_gap_ms: f64::NAN,
            });
        }
        if let Some(gap) = median_gap_ms(&samples) {
            let expected = 1000.0 / nominal_rate_hz;
            if (gap - expected).abs() > 0.2 * expected {
                return Err(TraceError::RateInconsistent {
                    nominal_hz: nominal_rate_hz,
                    median_gap_ms: gap,
                });
            }
        }
        Ok(Self {
            samples,
            nominal_rate_hz,
        })
    }

    pub fn start_ms(&self) -> i64 {
        self.samples.first().map_or(0, |s| s.t)
    }

    pub fn end_ms(&self) -> i64 {
        self.samples.last().map_or(0, |s| s.t)
    }

    /// Parses the line format described in the module docs. When the
    /// `#rate_hz=` header is absent the nominal rate is inferred from the
    /// median inter-sample gap.
    pub fn parse_str(text: &str) -> Result<Self, TraceError> {
        let mut samples = Vec::new();
        let mut header_rate: Option<f64> = None;
        let mut prev_t: Option<i64> = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if idx == 0 {
                if let Some(rest) = line.strip_prefix("#rate_hz=") {
                    let rate: f64 = rest
                        .trim()
                        .parse()
                        .map_err(|_| TraceError::MalformedLine(line_no))?;
                    if !(rate.is_finite() && rate > 0.0) {
                        return Err(TraceError::MalformedLine(line_no));
                    }
                    header_rate = Some(rate);
                    continue;
                }
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let next_f64 = |parts: &mut std::str::Split<'_, char>| -> Result<f64, TraceError> {
                let tok = parts.next().ok_or(TraceError::MalformedLine(line_no))?;
                let v: f64 = tok.parse().map_err(|_| TraceError::MalformedLine(line_no))?;
                if !v.is_finite() {
                    return Err(TraceError::MalformedLine(line_no));
                }
                Ok(v)
            };
            let t_raw = next_f64(&mut parts)?;
            let mut accel = [0.0; 3];
            let mut gyro = [0.0; 3];
            for a in &mut accel {
                *a = next_f64(&mut parts)?;
            }
            for g in &mut gyro {
                *g = next_f64(&mut parts)?;
            }
            if parts.next().is_some() {
                return Err(TraceError::MalformedLine(line_no));
            }
            let t = round_half_up_ms(t_raw);
            if t < 0 {
                return Err(TraceError::MalformedLine(line_no));
            }
            if let Some(p) = prev_t {
                if t <= p {
                    return Err(TraceError::NonMonotonicTimestamp(line_no));
                }
            }
            prev_t = Some(t);
            samples.push(SensorSample { t, accel, gyro });
        }
        if samples.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        let rate = match header_rate {
            Some(r) => r,
            None => {
                let gap = median_gap_ms(&samples).ok_or(TraceError::CannotInferRate)?;
                1000.0 / gap
            }
        };
        Self::new(samples, rate)
    }

    /// Canonical serialization; `parse_str` of the result reproduces the
    /// trace exactly, byte for byte on re-serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#rate_hz={}", self.nominal_rate_hz);
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                s.t, s.accel[0], s.accel[1], s.accel[2], s.gyro[0], s.gyro[1], s.gyro[2]
            );
        }
        out
    }
}

/// Rounds a millisecond value half-up to the nearest integer.
fn round_half_up_ms(t: f64) -> i64 {
    (t + 0.5).floor() as i64
}

fn median_gap_ms(samples: &[SensorSample]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let mut gaps: Vec<i64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    gaps.sort_unstable();
    let n = gaps.len();
    let med = if n % 2 == 1 {
        gaps[n / 2] as f64
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) as f64 / 2.0
    };
    Some(med)
}

pub fn parse_sensor_trace(path: impl AsRef<Path>) -> Result<SensorTrace, TraceError> {
    let text = fs::read_to_string(path)?;
    SensorTrace::parse_str(&text)
}

pub fn write_sensor_trace(path: impl AsRef<Path>, trace: &SensorTrace) -> Result<(), TraceError> {
    fs::write(path, trace.to_text())?;
    Ok(())
}

/// Pure decimation: keeps samples at indices 0, k, 2k, … and divides the
/// nominal rate by `keep_every`. No anti-alias filtering, matching the
/// pass-every-kth downsampling the scheme is evaluated with.
pub fn downsample(trace: &SensorTrace, keep_every: usize) -> SensorTrace {
    assert!(keep_every >= 1, "keep_every must be >= 1");
    SensorTrace {
        samples: trace
            .samples
            .iter()
            .step_by(keep_every)
            .copied()
            .collect(),
        nominal_rate_hz: trace.nominal_rate_hz / keep_every as f64,
    }
}

/// Terminal input event kinds observed by the interaction extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    KeyDown,
    Scroll,
    MouseMove,
    MouseClick,
}

impl EventKind {
    pub fn token(self) -> &'static str {
        match self {
            EventKind::KeyDown => "KEY",
            EventKind::Scroll => "SCROLL",
            EventKind::MouseMove => "MOVE",
            EventKind::MouseClick => "CLICK",
        }
    }

    pub fn is_keyboard(self) -> bool {
        matches!(self, EventKind::KeyDown)
    }
}

/// Keyboard zone of a keypress; `NotApplicable` for mouse events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeySide {
    Left,
    Middle,
    Right,
    NotApplicable,
}

impl KeySide {
    pub fn token(self) -> &'static str {
        match self {
            KeySide::Left => "L",
            KeySide::Middle => "M",
            KeySide::Right => "R",
            KeySide::NotApplicable => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerminalEvent {
    pub t: i64,
    pub kind: EventKind,
    pub key_side: KeySide,
}

impl TerminalEvent {
    pub fn key(t: i64, side: KeySide) -> Self {
        debug_assert!(side != KeySide::NotApplicable);
        Self {
            t,
            kind: EventKind::KeyDown,
            key_side: side,
        }
    }

    pub fn mouse(t: i64, kind: EventKind) -> Self {
        debug_assert!(!kind.is_keyboard());
        Self {
            t,
            kind,
            key_side: KeySide::NotApplicable,
        }
    }
}

/// Ordered terminal event stream for one session. Timestamps are
/// non-decreasing; simultaneous events are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<TerminalEvent>,
    pub session_id: String,
}

impl EventLog {
    pub fn new(events: Vec<TerminalEvent>, session_id: impl Into<String>) -> Result<Self, TraceError> {
        let session_id = session_id.into();
        if session_id.is_empty() {
            return Err(TraceError::MalformedLine(0));
        }
        for (i, e) in events.iter().enumerate() {
            let side_ok = (e.kind == EventKind::KeyDown) != (e.key_side == KeySide::NotApplicable);
            if !side_ok {
                return Err(TraceError::MalformedLine(i + 1));
            }
            if i > 0 && e.t < events[i - 1].t {
                return Err(TraceError::NonMonotonicTimestamp(i + 1));
            }
        }
        Ok(Self { events, session_id })
    }

    pub fn parse_str(text: &str, session_id: impl Into<String>) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let t_tok = parts.next().ok_or(TraceError::MalformedLine(line_no))?;
            let kind_tok = parts.next().ok_or(TraceError::MalformedLine(line_no))?;
            let side_tok = parts.next().ok_or(TraceError::MalformedLine(line_no))?;
            if parts.next().is_some() {
                return Err(TraceError::MalformedLine(line_no));
            }
            let t_raw: f64 = t_tok.parse().map_err(|_| TraceError::MalformedLine(line_no))?;
            let t = round_half_up_ms(t_raw);
            let kind = match kind_tok {
                "KEY" => EventKind::KeyDown,
                "SCROLL" => EventKind::Scroll,
                "MOVE" => EventKind::MouseMove,
                "CLICK" => EventKind::MouseClick,
                _ => return Err(TraceError::MalformedLine(line_no)),
            };
            let key_side = match side_tok {
                "L" => KeySide::Left,
                "M" => KeySide::Middle,
                "R" => KeySide::Right,
                "-" => KeySide::NotApplicable,
                _ => return Err(TraceError::MalformedLine(line_no)),
            };
            let side_ok = (kind == EventKind::KeyDown) != (key_side == KeySide::NotApplicable);
            if !side_ok {
                return Err(TraceError::MalformedLine(line_no));
            }
            if let Some(prev) = events.last() {
                let prev: &TerminalEvent = prev;
                if t < prev.t {
                    return Err(TraceError::NonMonotonicTimestamp(line_no));
                }
            }
            events.push(TerminalEvent { t, kind, key_side });
        }
        Self::new(events, session_id)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{} {} {}", e.t, e.kind.token(), e.key_side.token());
        }
        out
    }

    /// Returns a copy with every event shifted forward by `shift_ms`.
    pub fn shifted(&self, shift_ms: i64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| TerminalEvent { t: e.t + shift_ms, ..*e })
                .collect(),
            session_id: self.session_id.clone(),
        }
    }
}

/// Parses an event log file; the session id defaults to the file stem.
pub fn parse_event_log(path: impl AsRef<Path>) -> Result<EventLog, TraceError> {
    let path = path.as_ref();
    let session_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".to_string());
    let text = fs::read_to_string(path)?;
    EventLog::parse_str(&text, session_id)
}

pub fn write_event_log(path: impl AsRef<Path>, log: &EventLog) -> Result<(), TraceError> {
    fs::write(path, log.to_text())?;
    Ok(())
}

/// Minimum sampling-rate rule: `s_min` samples must fit in the shortest
/// classifiable event of duration `d_min_ms`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    pub s_min: usize,
    pub d_min_ms: i64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { s_min: 3, d_min_ms: 25 }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> bool {
        self.s_min >= 1 && self.d_min_ms > 0
    }
}

/// Returns the minimum bracelet frequency, in Hz, at which every
/// classifiable event still yields enough samples for all features.
pub fn min_required_rate(spec: &SamplingSpec) -> f64 {
    debug_assert!(spec.validate());
    spec.s_min as f64 * 1000.0 / spec.d_min_ms as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: i64) -> SensorSample {
        SensorSample {
            t,
            accel: [0.1 * t as f64, -0.2, 9.8],
            gyro: [0.01, 0.02, -0.03],
        }
    }

    #[test]
    fn parse_infers_rate_from_median_gap() {
        let trace = SensorTrace::parse_str("0 1 0 0 0 0 0\n5 1 0 0 0 0 0\n10 1 0 0 0 0 0\n").unwrap();
        assert_eq!(trace.samples.len(), 3);
        assert!((trace.nominal_rate_hz - 200.0).abs() < 1e-12);
    }

    #[test]
    fn parse_rejects_non_monotonic_timestamp() {
        let err = SensorTrace::parse_str("0 1 0 0 0 0 0\n5 1 0 0 0 0 0\n4 1 0 0 0 0 0\n")
            .unwrap_err();
        match err {
            TraceError::NonMonotonicTimestamp(line) => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_and_empty() {
        match SensorTrace::parse_str("0 1 0 0 0 0\n").unwrap_err() {
            TraceError::MalformedLine(1) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            SensorTrace::parse_str("").unwrap_err(),
            TraceError::EmptyTrace
        ));
    }

    #[test]
    fn header_rate_is_honored_and_checked() {
        let t = SensorTrace::parse_str("#rate_hz=200\n0 1 0 0 0 0 0\n5 1 0 0 0 0 0\n").unwrap();
        assert_eq!(t.nominal_rate_hz, 200.0);
        let err = SensorTrace::parse_str("#rate_hz=100\n0 1 0 0 0 0 0\n5 1 0 0 0 0 0\n");
        assert!(matches!(err, Err(TraceError::RateInconsistent { .. })));
    }

    #[test]
    fn sub_millisecond_timestamps_round_half_up() {
        let t = SensorTrace::parse_str("0.4 1 0 0 0 0 0\n5.5 1 0 0 0 0 0\n10.6 1 0 0 0 0 0\n")
            .unwrap();
        let ts: Vec<i64> = t.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0, 6, 11]);
    }

    #[test]
    fn ten_minute_trace_roundtrips_byte_identically() {
        let samples: Vec<SensorSample> = (0..120_000).map(|i| sample(i * 5)).collect();
        let trace = SensorTrace::new(samples, 200.0).unwrap();
        let text = trace.to_text();
        let reparsed = SensorTrace::parse_str(&text).unwrap();
        assert_eq!(reparsed, trace);
        assert_eq!(reparsed.to_text(), text);
    }

    #[test]
    fn downsample_keep_two_halves_trace() {
        let samples: Vec<SensorSample> = (0..101).map(|i| sample(i * 5)).collect();
        let trace = SensorTrace::new(samples, 200.0).unwrap();
        let down = downsample(&trace, 2);
        assert_eq!(down.samples.len(), 51); // ceil(101 / 2)
        assert!((down.nominal_rate_hz - 100.0).abs() < 1e-12);
    }

    #[test]
    fn downsample_identity_and_index_arithmetic() {
        let samples: Vec<SensorSample> = (0..16).map(|i| sample(i * 5)).collect();
        let trace = SensorTrace::new(samples, 200.0).unwrap();
        assert_eq!(downsample(&trace, 1), trace);
        let down = downsample(&trace, 8);
        let ts: Vec<i64> = down.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0, 40]); // original indices 0 and 8
    }

    #[test]
    fn min_rate_examples() {
        assert_eq!(min_required_rate(&SamplingSpec { s_min: 3, d_min_ms: 25 }), 120.0);
        assert_eq!(min_required_rate(&SamplingSpec { s_min: 1, d_min_ms: 1000 }), 1.0);
        assert_eq!(min_required_rate(&SamplingSpec { s_min: 5, d_min_ms: 25 }), 200.0);
    }

    #[test]
    fn event_log_roundtrip_and_validation() {
        let log = EventLog::new(
            vec![
                TerminalEvent::key(0, KeySide::Left),
                TerminalEvent::mouse(0, EventKind::MouseMove),
                TerminalEvent::mouse(40, EventKind::Scroll),
                TerminalEvent::key(90, KeySide::Middle),
            ],
            "s1",
        )
        .unwrap();
        let text = log.to_text();
        let reparsed = EventLog::parse_str(&text, "s1").unwrap();
        assert_eq!(reparsed, log);
        assert_eq!(reparsed.to_text(), text);

        // KEY must carry a side; mouse events must not.
        assert!(EventLog::parse_str("0 KEY -\n", "x").is_err());
        assert!(EventLog::parse_str("0 SCROLL L\n", "x").is_err());
        // Non-decreasing timestamps: ties allowed, regressions rejected.
        assert!(EventLog::parse_str("5 KEY L\n5 KEY R\n", "x").is_ok());
        assert!(EventLog::parse_str("5 KEY L\n4 KEY R\n", "x").is_err());
    }
}
