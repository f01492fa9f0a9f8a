//! Trace-driven lab for a bilateral zero-effort deauthentication scheme.
//!
//! A terminal continuously re-authenticates its logged-in user by comparing
//! the interaction sequence it observes through its own peripherals
//! (typing, scrolling, mouse↔keyboard hand movements) against the sequence
//! inferred from a wrist bracelet's motion sensors. This crate rebuilds the
//! full pipeline at desk scale and adds an adversary laboratory around it:
//!
//! * [`trace`] — sensor traces, terminal event logs, file formats,
//!   decimation, and the minimum-sampling-rate rule.
//! * [`extractor`] — terminal events → actual interaction sequence.
//! * [`segment`] / [`features`] — bracelet data sliced at the actual
//!   timestamps and reduced to 24 magnitude statistics.
//! * [`forest`] — the 100-tree interaction classifier and the 5-class vote
//!   post-classifier, with a text model format.
//! * [`auth`] — the windowed comparator (w, m, g, f), proximity-escalated
//!   thresholds, offside-typing blacklist, continuous mode.
//! * [`adversary`] — synthetic victim sessions plus naive, opportunistic,
//!   and audio-only mimicry, innocent-adversary mismatch, desynchronization.
//! * [`evaluation`] — FNR/TNR/FPR grids, survival curves, confusion
//!   matrices, Wilcoxon signed-rank comparisons.
//! * [`experiment`] — manifest-driven reproduction runs tying it together.
//!
//! Every generator, trainer and transform is a pure function of its inputs
//! and seeds; identical invocations produce identical bytes on disk.
//!
//! See the crate examples for one runnable demonstration per capability,
//! and the `zebra-lab` binary for the file-based command-line front end.

pub mod adversary;
pub mod auth;
pub mod config;
pub mod evaluation;
pub mod experiment;
pub mod extractor;
pub mod features;
pub mod forest;
pub mod interaction;
pub mod pipeline;
pub mod segment;
pub mod trace;

pub use adversary::{
    apply_attack, desync, generate_session, mismatch_pair, AttackStrategy, AttackerProfile,
    SessionBundle, UserProfile,
};
pub use auth::{
    blacklist_offside_typing, compare_window, escalate_threshold, proximity_level, run_session,
    AuthParams, ProximityLevel, SessionVerdict, WindowOutcome,
};
pub use extractor::{extract_interactions, ExtractorConfig, Hand};
pub use features::{featurize, FeatureVector};
pub use forest::{
    leave_one_user_out, predict3, predict5, train_forest, train_vote_tree, ForestModel,
    TrainingSet, VoteTreeModel,
};
pub use interaction::{Interaction, InteractionKind};
pub use segment::{segment, Segment};
pub use trace::{
    downsample, min_required_rate, parse_event_log, parse_sensor_trace, EventKind, EventLog,
    KeySide, SamplingSpec, SensorSample, SensorTrace, TerminalEvent,
};
