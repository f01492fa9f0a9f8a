//! Interactions: labeled time intervals of user activity, the unit the
//! authenticator compares.
//!
//! File format, one interaction per line: `start_ms end_ms kind` with an
//! optional trailing `offside` token, kind ∈ {TYPING, SCROLLING, MKKM, IDLE,
//! UPRIGHT}.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::trace::TraceError;

/// Interaction classes. `Typing`, `Scrolling` and `Mkkm` are produced by the
/// interaction extractor; `Idle` and `Upright` only by the 5-class classifier
/// extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InteractionKind {
    Typing,
    Scrolling,
    Mkkm,
    Idle,
    Upright,
}

/// Fixed class order of the 3-class interaction classifier; also the
/// tie-break order for votes.
pub const BASE_CLASSES: [InteractionKind; 3] = [
    InteractionKind::Typing,
    InteractionKind::Scrolling,
    InteractionKind::Mkkm,
];

/// Fixed class order of the 5-class extension.
pub const ALL_CLASSES: [InteractionKind; 5] = [
    InteractionKind::Typing,
    InteractionKind::Scrolling,
    InteractionKind::Mkkm,
    InteractionKind::Idle,
    InteractionKind::Upright,
];

impl InteractionKind {
    pub fn token(self) -> &'static str {
        match self {
            InteractionKind::Typing => "TYPING",
            InteractionKind::Scrolling => "SCROLLING",
            InteractionKind::Mkkm => "MKKM",
            InteractionKind::Idle => "IDLE",
            InteractionKind::Upright => "UPRIGHT",
        }
    }

    /// Index in [`BASE_CLASSES`], or `None` for the extended classes.
    pub fn base_index(self) -> Option<usize> {
        match self {
            InteractionKind::Typing => Some(0),
            InteractionKind::Scrolling => Some(1),
            InteractionKind::Mkkm => Some(2),
            _ => None,
        }
    }

    /// Index in [`ALL_CLASSES`].
    pub fn index(self) -> usize {
        match self {
            InteractionKind::Typing => 0,
            InteractionKind::Scrolling => 1,
            InteractionKind::Mkkm => 2,
            InteractionKind::Idle => 3,
            InteractionKind::Upright => 4,
        }
    }

    pub fn is_base(self) -> bool {
        self.base_index().is_some()
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InteractionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TYPING" => Ok(InteractionKind::Typing),
            "SCROLLING" => Ok(InteractionKind::Scrolling),
            "MKKM" => Ok(InteractionKind::Mkkm),
            "IDLE" => Ok(InteractionKind::Idle),
            "UPRIGHT" => Ok(InteractionKind::Upright),
            _ => Err(()),
        }
    }
}

/// A labeled interval `[start_ms, end_ms]` with `start < end`. The `offside`
/// flag marks typing that followed a mouse-to-keyboard transition whose first
/// keypress was on the wrong side of the keyboard; the windowed comparison
/// leaves such typing out, the blacklist defense inspects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub start_ms: i64,
    pub end_ms: i64,
    pub offside: bool,
}

impl Interaction {
    pub fn new(kind: InteractionKind, start_ms: i64, end_ms: i64) -> Self {
        debug_assert!(start_ms < end_ms, "interaction must have positive length");
        Self {
            kind,
            start_ms,
            end_ms,
            offside: false,
        }
    }

    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

pub fn interactions_to_text(seq: &[Interaction]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for i in seq {
        if i.offside {
            let _ = writeln!(out, "{} {} {} offside", i.start_ms, i.end_ms, i.kind.token());
        } else {
            let _ = writeln!(out, "{} {} {}", i.start_ms, i.end_ms, i.kind.token());
        }
    }
    out
}

pub fn interactions_from_text(text: &str) -> Result<Vec<Interaction>, TraceError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(TraceError::MalformedLine(line_no));
        }
        let start_ms: i64 = parts[0].parse().map_err(|_| TraceError::MalformedLine(line_no))?;
        let end_ms: i64 = parts[1].parse().map_err(|_| TraceError::MalformedLine(line_no))?;
        let kind: InteractionKind = parts[2]
            .parse()
            .map_err(|_| TraceError::MalformedLine(line_no))?;
        let offside = match parts.get(3) {
            None => false,
            Some(&"offside") => true,
            Some(_) => return Err(TraceError::MalformedLine(line_no)),
        };
        if start_ms >= end_ms {
            return Err(TraceError::MalformedLine(line_no));
        }
        if let Some(prev) = out.last() {
            let prev: &Interaction = prev;
            if start_ms < prev.start_ms {
                return Err(TraceError::NonMonotonicTimestamp(line_no));
            }
        }
        out.push(Interaction {
            kind,
            start_ms,
            end_ms,
            offside,
        });
    }
    Ok(out)
}

pub fn read_interactions(path: impl AsRef<Path>) -> Result<Vec<Interaction>, TraceError> {
    let text = fs::read_to_string(path)?;
    interactions_from_text(&text)
}

pub fn write_interactions(path: impl AsRef<Path>, seq: &[Interaction]) -> Result<(), TraceError> {
    fs::write(path, interactions_to_text(seq))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_roundtrips() {
        let seq = vec![
            Interaction::new(InteractionKind::Typing, 0, 900),
            Interaction::new(InteractionKind::Mkkm, 900, 2100),
            Interaction {
                kind: InteractionKind::Typing,
                start_ms: 2100,
                end_ms: 3000,
                offside: true,
            },
        ];
        let text = interactions_to_text(&seq);
        assert_eq!(interactions_from_text(&text).unwrap(), seq);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(interactions_from_text("0 100 SPINNING\n").is_err());
        assert!(interactions_from_text("100 100 TYPING\n").is_err());
        assert!(interactions_from_text("0 100 TYPING sideways\n").is_err());
    }
}
