//! Manifest-driven experiments: generates a population of synthetic users,
//! trains leave-one-user-out classifiers, and reproduces the full evaluation
//! matrix — legitimate, mismatched, attacked, desynchronized, downsampled —
//! in one call.

use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use crate::adversary::{
    apply_attack, desync, generate_session, mismatch_pair, AttackerProfile, SessionBundle,
    UserProfile,
};
use crate::auth::{run_session, AuthParams, SessionVerdict};
use crate::evaluation::{
    series_to_text, survival_curve, wilcoxon_signed_rank, ConfusionMatrix, EvalError, RateGrid,
    StatsResult, SurvivalAxis,
};
use crate::extractor::ExtractorConfig;
use crate::forest::{leave_one_user_out, predict3, ClassifierError, ForestModel, TrainingSet};
use crate::interaction::InteractionKind;
use crate::pipeline::{comparison_stream, training_rows_from_bundle, truth_features, ComparisonStream};
use crate::trace::{downsample, SamplingSpec};

#[derive(Debug, Clone)]
pub struct Manifest {
    pub n_users: usize,
    pub duration_s: u64,
    pub train_duration_s: u64,
    pub seed: u64,
    pub auth: AuthParams,
    pub extractor: ExtractorConfig,
    pub sampling: SamplingSpec,
    pub w_grid: Vec<usize>,
    pub m_grid: Vec<f64>,
    pub desync_shifts_ms: Vec<i64>,
    pub downsample_keep: Vec<usize>,
    pub attackers: Vec<(String, AttackerProfile)>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            n_users: 20,
            duration_s: 600,
            train_duration_s: 120,
            seed: 42,
            auth: AuthParams::default(),
            extractor: ExtractorConfig::default(),
            sampling: SamplingSpec::default(),
            w_grid: vec![5, 10, 15, 20, 25, 30],
            m_grid: vec![0.5, 0.6, 0.7],
            desync_shifts_ms: vec![0, 200, 500],
            downsample_keep: vec![1, 2, 4, 8],
            attackers: vec![
                ("naive-all".into(), AttackerProfile::naive_all()),
                ("opp-keyboard".into(), AttackerProfile::opp_keyboard()),
                ("opp-all".into(), AttackerProfile::opp_all()),
                ("audio-keyboard".into(), AttackerProfile::audio_keyboard()),
            ],
        }
    }
}

/// Splitmix-style seed derivation so every session, attack and sweep gets
/// an independent deterministic stream.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generated population: per-user training and evaluation sessions plus
/// the leave-one-user-out models keyed by user id.
pub struct Lab {
    pub manifest: Manifest,
    pub users: Vec<UserProfile>,
    pub train_bundles: Vec<SessionBundle>,
    pub eval_bundles: Vec<SessionBundle>,
    pub models: Vec<(String, ForestModel)>,
}

impl Lab {
    pub fn model_for(&self, user_id: &str) -> &ForestModel {
        &self
            .models
            .iter()
            .find(|(u, _)| u == user_id)
            .expect("model for every generated user")
            .1
    }
}

pub fn user_profiles(manifest: &Manifest) -> Vec<UserProfile> {
    (0..manifest.n_users)
        .map(|i| UserProfile::new(format!("u{i:02}"), derive_seed(manifest.seed, 100 + i as u64)))
        .collect()
}

/// Generates sessions and trains the leave-one-user-out models.
pub fn build_lab(manifest: Manifest) -> Result<Lab, ClassifierError> {
    let users = user_profiles(&manifest);
    let train_ms = manifest.train_duration_s as i64 * 1000;
    let eval_ms = manifest.duration_s as i64 * 1000;
    let train_bundles: Vec<SessionBundle> = users
        .par_iter()
        .enumerate()
        .map(|(i, u)| generate_session(u, train_ms, derive_seed(manifest.seed, 1000 + i as u64)))
        .collect();
    let eval_bundles: Vec<SessionBundle> = users
        .par_iter()
        .enumerate()
        .map(|(i, u)| generate_session(u, eval_ms, derive_seed(manifest.seed, 2000 + i as u64)))
        .collect();

    let mut data = TrainingSet::new();
    for b in &train_bundles {
        training_rows_from_bundle(b, &manifest.sampling, &mut data);
    }
    let models = leave_one_user_out(&data, manifest.seed)?;
    Ok(Lab {
        manifest,
        users,
        train_bundles,
        eval_bundles,
        models,
    })
}

/// Comparison streams for the legitimate sessions, one per user, classified
/// with that user's left-out model.
pub fn legit_streams(lab: &Lab) -> Vec<ComparisonStream> {
    lab.eval_bundles
        .par_iter()
        .map(|b| {
            comparison_stream(
                &b.events,
                &b.sensor,
                lab.model_for(&b.user_id),
                &lab.manifest.extractor,
                &lab.manifest.sampling,
            )
        })
        .collect()
}

/// Innocent-adversary streams: user i's terminal activity against user
/// (i+1)'s bracelet, classified with the bracelet owner's left-out model.
pub fn mismatch_streams(lab: &Lab) -> Vec<ComparisonStream> {
    let n = lab.eval_bundles.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &lab.eval_bundles[i];
            let b = &lab.eval_bundles[(i + 1) % n];
            let pair = mismatch_pair(a, b).expect("distinct users");
            comparison_stream(
                &pair.events,
                &pair.sensor,
                lab.model_for(&b.user_id),
                &lab.manifest.extractor,
                &lab.manifest.sampling,
            )
        })
        .collect()
}

/// Attacker streams: the attacker's terminal events against the victim's
/// bracelet, one per victim session.
pub fn attacker_streams(lab: &Lab, profile: &AttackerProfile, salt: u64) -> Vec<ComparisonStream> {
    lab.eval_bundles
        .par_iter()
        .enumerate()
        .map(|(i, victim)| {
            let log = apply_attack(victim, profile, derive_seed(lab.manifest.seed, salt + i as u64));
            comparison_stream(
                &log,
                &victim.sensor,
                lab.model_for(&victim.user_id),
                &lab.manifest.extractor,
                &lab.manifest.sampling,
            )
        })
        .collect()
}

pub fn verdicts(streams: &[ComparisonStream], params: &AuthParams) -> Vec<SessionVerdict> {
    streams
        .iter()
        .map(|s| run_session(&s.actual, &s.predicted, params).unwrap_or_default())
        .collect()
}

/// Pooled Fail fraction per (w, m) combination over a suite of streams.
pub fn fail_grid(streams: &[ComparisonStream], base: &AuthParams, ws: &[usize], ms: &[f64]) -> RateGrid {
    let rates = ws
        .iter()
        .map(|&w| {
            ms.iter()
                .map(|&m| {
                    let params = AuthParams { w, m, ..*base };
                    let vs = verdicts(streams, &params);
                    let mut windows = 0usize;
                    let mut fails = 0usize;
                    for v in &vs {
                        windows += v.windows.len();
                        fails += v
                            .windows
                            .iter()
                            .filter(|wr| wr.outcome == crate::auth::WindowOutcome::Fail)
                            .count();
                    }
                    if windows == 0 {
                        0.0
                    } else {
                        fails as f64 / windows as f64
                    }
                })
                .collect()
        })
        .collect();
    RateGrid {
        w_values: ws.to_vec(),
        m_values: ms.to_vec(),
        rates,
    }
}

/// Session deauthentication statistic for paired tests: the deauth window,
/// or one past the evaluated windows when the session survived.
pub fn deauth_stat(v: &SessionVerdict) -> f64 {
    v.deauth_window.unwrap_or(v.windows_elapsed + 1) as f64
}

/// Mean Fail-window fraction across legitimate sessions after shifting the
/// terminal events forward, for each desynchronization value.
pub fn desync_sweep(lab: &Lab, shifts_ms: &[i64]) -> Vec<(i64, f64)> {
    shifts_ms
        .iter()
        .map(|&shift| {
            let fractions: Vec<f64> = lab
                .eval_bundles
                .par_iter()
                .map(|b| {
                    let shifted = desync(b, shift);
                    let stream = comparison_stream(
                        &shifted.events,
                        &shifted.sensor,
                        lab.model_for(&b.user_id),
                        &lab.manifest.extractor,
                        &lab.manifest.sampling,
                    );
                    run_session(&stream.actual, &stream.predicted, &lab.manifest.auth)
                        .map(|v| v.fail_fraction())
                        .unwrap_or(0.0)
                })
                .collect();
            let mean = fractions.iter().sum::<f64>() / fractions.len().max(1) as f64;
            (shift, mean)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DownsamplePoint {
    pub keep_every: usize,
    pub rate_hz: f64,
    pub accuracy: f64,
    pub sparse_fraction: f64,
}

/// Classification accuracy over the truth spans at each decimation level,
/// using the models trained at the full rate.
pub fn downsample_sweep(lab: &Lab, keeps: &[usize]) -> Vec<DownsamplePoint> {
    keeps
        .iter()
        .map(|&keep| {
            let stats: Vec<(usize, usize, usize, f64)> = lab
                .eval_bundles
                .par_iter()
                .map(|b| {
                    let low = SessionBundle {
                        sensor: downsample(&b.sensor, keep),
                        events: b.events.clone(),
                        truth: b.truth.clone(),
                        user_id: b.user_id.clone(),
                    };
                    let model = lab.model_for(&b.user_id);
                    let rows = truth_features(&low, &lab.manifest.sampling);
                    let mut correct = 0usize;
                    let mut total = 0usize;
                    let mut sparse = 0usize;
                    for (kind, fv) in &rows {
                        if fv.sparse {
                            sparse += 1;
                        }
                        if !kind.is_base() {
                            continue;
                        }
                        total += 1;
                        if predict3(model, fv).0 == *kind {
                            correct += 1;
                        }
                    }
                    (correct, total, sparse, rows.len() as f64)
                })
                .collect();
            let correct: usize = stats.iter().map(|s| s.0).sum();
            let total: usize = stats.iter().map(|s| s.1).sum();
            let sparse: usize = stats.iter().map(|s| s.2).sum();
            let rows: f64 = stats.iter().map(|s| s.3).sum();
            DownsamplePoint {
                keep_every: keep,
                rate_hz: 200.0 / keep as f64,
                accuracy: correct as f64 / total.max(1) as f64,
                sparse_fraction: sparse as f64 / rows.max(1.0),
            }
        })
        .collect()
}

/// Confusion matrix of the leave-one-user-out classifiers over every truth
/// span of the evaluation sessions.
pub fn louo_confusion(lab: &Lab) -> Result<ConfusionMatrix, EvalError> {
    let pairs: Vec<(InteractionKind, InteractionKind)> = lab
        .eval_bundles
        .par_iter()
        .flat_map(|b| {
            let model = lab.model_for(&b.user_id);
            truth_features(b, &lab.manifest.sampling)
                .into_iter()
                .filter(|(kind, fv)| kind.is_base() && !fv.sparse)
                .map(|(kind, fv)| (kind, predict3(model, &fv).0))
                .collect::<Vec<_>>()
        })
        .collect();
    let truth: Vec<InteractionKind> = pairs.iter().map(|p| p.0).collect();
    let predicted: Vec<InteractionKind> = pairs.iter().map(|p| p.1).collect();
    ConfusionMatrix::from_pairs(&truth, &predicted)
}

pub struct AttackerReport {
    pub name: String,
    pub fpr_grid: RateGrid,
    pub survival_windows: Vec<(f64, f64)>,
    pub survival_minutes: Vec<(f64, f64)>,
    pub deauth_stats: Vec<f64>,
}

pub struct ExperimentReport {
    pub fnr_grid: RateGrid,
    pub tnr_grid: RateGrid,
    pub legit_survival: Vec<(usize, Vec<(f64, f64)>)>,
    pub mismatch_survival: Vec<(usize, Vec<(f64, f64)>)>,
    pub attackers: Vec<AttackerReport>,
    pub wilcoxon_opp_vs_naive: Option<StatsResult>,
    pub desync: Vec<(i64, f64)>,
    pub downsample: Vec<DownsamplePoint>,
    pub confusion: ConfusionMatrix,
}

/// Runs the complete experiment matrix for a manifest.
pub fn run_experiment(manifest: Manifest) -> Result<ExperimentReport, ClassifierError> {
    let lab = build_lab(manifest)?;
    let manifest = &lab.manifest;

    let legit = legit_streams(&lab);
    let wrongs = mismatch_streams(&lab);
    let fnr_grid = fail_grid(&legit, &manifest.auth, &manifest.w_grid, &manifest.m_grid);
    let tnr_grid = fail_grid(&wrongs, &manifest.auth, &manifest.w_grid, &manifest.m_grid);

    let survivals = |streams: &[ComparisonStream], g: usize| {
        let params = AuthParams {
            g,
            ..manifest.auth
        };
        survival_curve(&verdicts(streams, &params), SurvivalAxis::Windows)
    };
    let legit_survival = vec![(1, survivals(&legit, 1)), (2, survivals(&legit, 2))];
    let mismatch_survival = vec![(1, survivals(&wrongs, 1)), (2, survivals(&wrongs, 2))];

    let mut attackers = Vec::new();
    for (i, (name, profile)) in manifest.attackers.iter().enumerate() {
        let streams = attacker_streams(&lab, profile, 3000 + 100 * i as u64);
        let vs = verdicts(&streams, &manifest.auth);
        attackers.push(AttackerReport {
            name: name.clone(),
            fpr_grid: fail_grid(&streams, &manifest.auth, &manifest.w_grid, &manifest.m_grid),
            survival_windows: survival_curve(&vs, SurvivalAxis::Windows),
            survival_minutes: survival_curve(&vs, SurvivalAxis::Minutes),
            deauth_stats: vs.iter().map(deauth_stat).collect(),
        });
    }

    let find = |tag: &str| attackers.iter().find(|a| a.name.contains(tag));
    let wilcoxon_opp_vs_naive = match (find("naive"), find("opp-keyboard")) {
        (Some(naive), Some(opp)) => {
            wilcoxon_signed_rank(&naive.deauth_stats, &opp.deauth_stats).ok()
        }
        _ => None,
    };

    let desync = desync_sweep(&lab, &manifest.desync_shifts_ms);
    let downsample = downsample_sweep(&lab, &manifest.downsample_keep);
    let confusion = louo_confusion(&lab).unwrap_or(ConfusionMatrix {
        counts: [[0; 5]; 5],
    });

    Ok(ExperimentReport {
        fnr_grid,
        tnr_grid,
        legit_survival,
        mismatch_survival,
        attackers,
        wilcoxon_opp_vs_naive,
        desync,
        downsample,
        confusion,
    })
}

impl ExperimentReport {
    pub fn summary(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "== legitimate FNR grid (fail fraction) ==");
        out.push_str(&self.fnr_grid.to_text());
        let _ = writeln!(out, "\n== mismatched TNR grid (fail fraction) ==");
        out.push_str(&self.tnr_grid.to_text());
        for a in &self.attackers {
            let _ = writeln!(out, "\n== attacker {} FPR grid (fail fraction) ==", a.name);
            out.push_str(&a.fpr_grid.to_text());
        }
        if let Some(w) = &self.wilcoxon_opp_vs_naive {
            let _ = writeln!(
                out,
                "\nwilcoxon naive-vs-opportunistic-keyboard: z={:.3} p={:.4} r={:.3} n={}",
                w.z, w.p, w.r, w.n_pairs
            );
        }
        let _ = writeln!(out, "\n== desynchronization sweep ==");
        for (shift, frac) in &self.desync {
            let _ = writeln!(out, "shift {shift} ms -> mean fail fraction {frac:.4}");
        }
        let _ = writeln!(out, "\n== sampling-rate sweep ==");
        for p in &self.downsample {
            let _ = writeln!(
                out,
                "{:.0} Hz (keep 1/{}) -> accuracy {:.4}, sparse fraction {:.4}",
                p.rate_hz, p.keep_every, p.accuracy, p.sparse_fraction
            );
        }
        let _ = writeln!(out, "\n== leave-one-user-out confusion ==");
        out.push_str(&self.confusion.to_text());
        out
    }

    /// Writes the grids, survival series and sweeps as plot-ready files.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let write = |name: &str, text: &str| -> io::Result<()> {
            let tmp = dir.join(format!("{name}.tmp"));
            fs::write(&tmp, text)?;
            fs::rename(&tmp, dir.join(name))
        };
        write("summary.txt", &self.summary())?;
        write("legit_fnr_grid.txt", &self.fnr_grid.to_text())?;
        write("mismatch_tnr_grid.txt", &self.tnr_grid.to_text())?;
        for (g, curve) in &self.legit_survival {
            write(&format!("legit_survival_g{g}.series"), &series_to_text(curve))?;
        }
        for (g, curve) in &self.mismatch_survival {
            write(
                &format!("mismatch_survival_g{g}.series"),
                &series_to_text(curve),
            )?;
        }
        for a in &self.attackers {
            write(&format!("attacker_{}_fpr_grid.txt", a.name), &a.fpr_grid.to_text())?;
            write(
                &format!("attacker_{}_survival_windows.series", a.name),
                &series_to_text(&a.survival_windows),
            )?;
            write(
                &format!("attacker_{}_survival_minutes.series", a.name),
                &series_to_text(&a.survival_minutes),
            )?;
        }
        let desync_series: Vec<(f64, f64)> = self
            .desync
            .iter()
            .map(|(s, f)| (*s as f64, *f))
            .collect();
        write("desync_sweep.series", &series_to_text(&desync_series))?;
        let down_series: Vec<(f64, f64)> = self
            .downsample
            .iter()
            .map(|p| (p.rate_hz, p.accuracy))
            .collect();
        write("downsample_accuracy.series", &series_to_text(&down_series))?;
        write("confusion.txt", &self.confusion.to_text())?;
        Ok(())
    }
}
