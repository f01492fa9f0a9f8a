//! Generates synthetic user sessions and reports the statistics the
//! schedule is tuned for: interaction rate, per-class counts and durations,
//! and average authentication-window length.
//!
//! ```bash
//! cargo run --release --example session_statistics
//! ```

use zebra_lab::extractor::{extract_interactions, ExtractorConfig};
use zebra_lab::interaction::InteractionKind;
use zebra_lab::{generate_session, UserProfile};

fn main() {
    let cfg = ExtractorConfig::default();
    let duration_ms = 600_000;
    let mut all_counts = Vec::new();

    println!("{:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>10}", "user", "count", "rate/s", "typing", "scroll", "mkkm", "typ_ms");
    for u in 0..6u64 {
        let profile = UserProfile::new(format!("u{u:02}"), u * 31 + 7);
        let bundle = generate_session(&profile, duration_ms, 1000 + u);
        let seq = extract_interactions(&bundle.events, &cfg);
        let count = seq.len();
        let by = |k: InteractionKind| seq.iter().filter(|i| i.kind == k).count();
        let typing: Vec<i64> = seq
            .iter()
            .filter(|i| i.kind == InteractionKind::Typing)
            .map(|i| i.duration_ms())
            .collect();
        let typ_mean = typing.iter().sum::<i64>() as f64 / typing.len().max(1) as f64;
        println!(
            "{:>6} {:>6} {:>8.2} {:>8} {:>8} {:>8} {:>10.0}",
            bundle.user_id,
            count,
            count as f64 / (duration_ms as f64 / 1000.0),
            by(InteractionKind::Typing),
            by(InteractionKind::Scrolling),
            by(InteractionKind::Mkkm),
            typ_mean,
        );
        all_counts.push(count);
        let offside = seq.iter().filter(|i| i.offside).count();
        let window_s = 20.0 / (count as f64 / 600.0);
        println!(
            "       offside typing {offside}, mean 20-interaction window ≈ {window_s:.1} s"
        );
    }
    let mean = all_counts.iter().sum::<usize>() as f64 / all_counts.len() as f64;
    println!("\nmean interactions per 10 min: {mean:.0} (target band 720–1080)");
}
