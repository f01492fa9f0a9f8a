//! Pipeline glue: event log → actual sequence → segments → features →
//! predicted sequence → verdict, for one session at a time.
//!
//! Offside-flagged typing is left out of the windowed comparison (its
//! segments are never cut), matching the original design the dominant-hand
//! exploit relies on; the blacklist defense sees the full sequence instead.

use crate::adversary::SessionBundle;
use crate::auth::{
    run_session, run_session_continuous, AuthError, AuthParams, IdleProbe, SessionVerdict,
};
use crate::extractor::{extract_interactions, ExtractorConfig};
use crate::features::{featurize, FeatureVector};
use crate::forest::{predict3, predict5, train_vote_tree, ForestModel, TrainingSet, VoteTreeModel};
use crate::interaction::{Interaction, InteractionKind};
use crate::segment::segment;
use crate::trace::{EventLog, SamplingSpec, SensorTrace};

/// The two aligned label sequences the authenticator compares, one label
/// per (non-offside) actual interaction.
#[derive(Debug, Clone)]
pub struct ComparisonStream {
    pub actual: Vec<Interaction>,
    pub predicted: Vec<InteractionKind>,
}

/// Extracts the actual sequence from the terminal events, cuts the bracelet
/// trace at those timestamps, and classifies each segment.
pub fn comparison_stream(
    events: &EventLog,
    sensor: &SensorTrace,
    model: &ForestModel,
    cfg: &ExtractorConfig,
    spec: &SamplingSpec,
) -> ComparisonStream {
    let seq = extract_interactions(events, cfg);
    let actual: Vec<Interaction> = seq.into_iter().filter(|i| !i.offside).collect();
    let segments = segment(sensor, &actual, spec);
    let predicted: Vec<InteractionKind> = segments
        .iter()
        .map(|s| predict3(model, &featurize(s)).0)
        .collect();
    ComparisonStream { actual, predicted }
}

/// Plain-mode verdict for a session bundle.
pub fn session_verdict(
    bundle: &SessionBundle,
    model: &ForestModel,
    cfg: &ExtractorConfig,
    spec: &SamplingSpec,
    params: &AuthParams,
) -> Result<SessionVerdict, AuthError> {
    let stream = comparison_stream(&bundle.events, &bundle.sensor, model, cfg, spec);
    run_session(&stream.actual, &stream.predicted, params)
}

/// Fixed 1 s probe segments cut from the bracelet trace during terminal-idle
/// periods and classified with the 5-class extension.
pub fn idle_probes(
    events: &EventLog,
    sensor: &SensorTrace,
    forest: &ForestModel,
    vote_tree: &VoteTreeModel,
    cfg: &ExtractorConfig,
    spec: &SamplingSpec,
) -> Vec<IdleProbe> {
    const PROBE_MS: i64 = 1000;
    let mut idle_windows: Vec<(i64, i64)> = Vec::new();
    let span_start = sensor.start_ms();
    let span_end = sensor.end_ms();
    let ts: Vec<i64> = events.events.iter().map(|e| e.t).collect();
    if ts.is_empty() {
        idle_windows.push((span_start, span_end));
    } else {
        if ts[0] - span_start > cfg.idle_threshold_ms {
            idle_windows.push((span_start, ts[0]));
        }
        for w in ts.windows(2) {
            if w[1] - w[0] > cfg.idle_threshold_ms + PROBE_MS {
                // Terminal idle begins once the threshold has elapsed.
                idle_windows.push((w[0] + cfg.idle_threshold_ms, w[1]));
            }
        }
        if span_end - ts[ts.len() - 1] > cfg.idle_threshold_ms + PROBE_MS {
            idle_windows.push((ts[ts.len() - 1] + cfg.idle_threshold_ms, span_end));
        }
    }

    let mut probes = Vec::new();
    for (lo, hi) in idle_windows {
        let mut t = lo;
        while t + PROBE_MS <= hi {
            let probe_span = Interaction::new(InteractionKind::Idle, t, t + PROBE_MS);
            let seg = segment(sensor, std::slice::from_ref(&probe_span), spec);
            let kind = predict5(forest, vote_tree, &featurize(&seg[0]));
            probes.push((t + PROBE_MS, kind));
            t += PROBE_MS;
        }
    }
    probes
}

/// Continuous-mode verdict: same windowed comparison, plus forced-fail
/// pseudo-windows whenever a terminal-idle probe classifies as one of the
/// three interaction classes.
pub fn session_verdict_continuous(
    bundle: &SessionBundle,
    forest: &ForestModel,
    vote_tree: &VoteTreeModel,
    cfg: &ExtractorConfig,
    spec: &SamplingSpec,
    params: &AuthParams,
) -> Result<SessionVerdict, AuthError> {
    let stream = comparison_stream(&bundle.events, &bundle.sensor, forest, cfg, spec);
    let probes = idle_probes(&bundle.events, &bundle.sensor, forest, vote_tree, cfg, spec);
    run_session_continuous(&stream.actual, &stream.predicted, &probes, params)
}

/// Builds labeled training rows by segmenting the bracelet trace at the
/// ground-truth spans. Sparse segments are dropped at insertion.
pub fn training_rows_from_bundle(
    bundle: &SessionBundle,
    spec: &SamplingSpec,
    into: &mut TrainingSet,
) {
    let segments = segment(&bundle.sensor, &bundle.truth, spec);
    for seg in &segments {
        into.push(&featurize(seg), seg.interaction.kind, &bundle.user_id);
    }
}

/// Feature vectors for each truth span, paired with the true kind; used by
/// classification quality checks.
pub fn truth_features(bundle: &SessionBundle, spec: &SamplingSpec) -> Vec<(InteractionKind, FeatureVector)> {
    segment(&bundle.sensor, &bundle.truth, spec)
        .iter()
        .map(|seg| (seg.interaction.kind, featurize(seg)))
        .collect()
}

/// Trains the 5-class stack (forest + vote tree) from bundles that include
/// idle and upright truth spans.
pub fn train_five_class(
    bundles: &[SessionBundle],
    spec: &SamplingSpec,
    seed: u64,
) -> Result<(ForestModel, VoteTreeModel), crate::forest::ClassifierError> {
    let mut data = TrainingSet::new();
    for b in bundles {
        training_rows_from_bundle(b, spec, &mut data);
    }
    let forest = crate::forest::train_forest(&data, seed)?;
    let vote_tree = train_vote_tree(&forest, &data)?;
    Ok((forest, vote_tree))
}
