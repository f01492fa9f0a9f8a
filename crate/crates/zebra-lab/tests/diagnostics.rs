//! Tuning diagnostics: classifier separability, vote distributions for the
//! extended classes, and attack effectiveness. Ignored by default; run with
//! `cargo test --test diagnostics -- --ignored --nocapture` while adjusting
//! signature constants.

use zebra_lab::adversary::{generate_session, AttackerProfile, UserProfile};
use zebra_lab::auth::AuthParams;
use zebra_lab::experiment::{
    attacker_streams, build_lab, deauth_stat, derive_seed, legit_streams, louo_confusion,
    mismatch_streams, verdicts, Manifest,
};
use zebra_lab::forest::{predict3, train_forest, TrainingSet};
use zebra_lab::interaction::InteractionKind;
use zebra_lab::pipeline::{training_rows_from_bundle, truth_features};
use zebra_lab::trace::SamplingSpec;

fn small_manifest() -> Manifest {
    Manifest {
        n_users: 8,
        duration_s: 300,
        train_duration_s: 120,
        seed: 11,
        ..Manifest::default()
    }
}

#[test]
#[ignore]
fn classifier_quality() {
    let lab = build_lab(small_manifest()).unwrap();
    let confusion = louo_confusion(&lab).unwrap();
    println!("{}", confusion.to_text());
    println!("accuracy {:.4}", confusion.accuracy());
}

#[test]
#[ignore]
fn vote_distributions() {
    let spec = SamplingSpec::default();
    let mut data = TrainingSet::new();
    let mut bundles = Vec::new();
    for u in 0..6u64 {
        let profile = UserProfile::new(format!("u{u:02}"), 50 + u).with_upright(0.15);
        let bundle = generate_session(&profile, 240_000, 900 + u);
        training_rows_from_bundle(&bundle, &spec, &mut data);
        bundles.push(bundle);
    }
    let forest = train_forest(&data, 5).unwrap();
    let mut sums: [[f64; 3]; 5] = [[0.0; 3]; 5];
    let mut counts = [0usize; 5];
    for b in &bundles {
        for (kind, fv) in truth_features(b, &spec) {
            if fv.sparse {
                continue;
            }
            let (_, votes) = predict3(&forest, &fv);
            let k = kind.index();
            counts[k] += 1;
            for c in 0..3 {
                sums[k][c] += votes[c] as f64;
            }
        }
    }
    for kind in [
        InteractionKind::Typing,
        InteractionKind::Scrolling,
        InteractionKind::Mkkm,
        InteractionKind::Idle,
        InteractionKind::Upright,
    ] {
        let k = kind.index();
        let n = counts[k].max(1) as f64;
        println!(
            "{:<10} n={:<5} mean votes: typing {:>5.1}  scrolling {:>5.1}  mkkm {:>5.1}",
            kind.token(),
            counts[k],
            sums[k][0] / n,
            sums[k][1] / n,
            sums[k][2] / n
        );
    }
}

#[test]
#[ignore]
fn attack_effectiveness() {
    let lab = build_lab(small_manifest()).unwrap();
    let params = AuthParams::default();
    let legit = verdicts(&legit_streams(&lab), &params);
    let wrong = verdicts(&mismatch_streams(&lab), &params);
    println!(
        "legit: mean fail fraction {:.3}, deauths {}/{}",
        legit.iter().map(|v| v.fail_fraction()).sum::<f64>() / legit.len() as f64,
        legit.iter().filter(|v| v.deauthenticated()).count(),
        legit.len()
    );
    println!(
        "wrong: mean fail fraction {:.3}, deauths {}/{}",
        wrong.iter().map(|v| v.fail_fraction()).sum::<f64>() / wrong.len() as f64,
        wrong.iter().filter(|v| v.deauthenticated()).count(),
        wrong.len()
    );
    for (name, profile) in [
        ("naive-all", AttackerProfile::naive_all()),
        ("opp-keyboard", AttackerProfile::opp_keyboard()),
        ("opp-all", AttackerProfile::opp_all()),
        ("audio-keyboard", AttackerProfile::audio_keyboard()),
    ] {
        let vs = verdicts(&attacker_streams(&lab, &profile, derive_seed(7, 1)), &params);
        let mean_stat = vs.iter().map(deauth_stat).sum::<f64>() / vs.len() as f64;
        println!(
            "{name:<15} mean fail fraction {:.3}, mean deauth stat {:.1}, survivors {}/{}",
            vs.iter().map(|v| v.fail_fraction()).sum::<f64>() / vs.len() as f64,
            mean_stat,
            vs.iter().filter(|v| !v.deauthenticated()).count(),
            vs.len()
        );
    }
}

#[test]
#[ignore]
fn feature_positions() {
    let spec = SamplingSpec::default();
    let mut per_class: std::collections::BTreeMap<&str, Vec<[f64; 4]>> = Default::default();
    for u in 0..4u64 {
        let profile = UserProfile::new(format!("u{u:02}"), 50 + u).with_upright(0.15);
        let bundle = generate_session(&profile, 240_000, 900 + u);
        for (kind, fv) in truth_features(&bundle, &spec) {
            if fv.sparse {
                continue;
            }
            per_class.entry(kind.token()).or_default().push([
                fv.accel.mean,
                fv.accel.variance,
                fv.accel.autocorrelation,
                fv.accel.kurtosis,
            ]);
        }
    }
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}", "class", "mean", "var", "autocorr", "kurt");
    for (k, rows) in per_class {
        let n = rows.len() as f64;
        let avg = |i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / n;
        println!("{k:<10} {:>8.3} {:>8.4} {:>8.3} {:>8.2}", avg(0), avg(1), avg(2), avg(3));
    }
}
