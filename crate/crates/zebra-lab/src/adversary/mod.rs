//! Adversary lab: synthesizes victim sessions with realistic interaction
//! statistics and replays them under the four attacker models, the
//! innocent-adversary mismatch, and desynchronization.

mod attack;
mod generate;

pub use attack::{apply_attack, AttackStrategy, AttackerProfile};
pub use generate::{generate_session, SignatureParams, UserProfile};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::N_FEATURES;
use crate::forest::TrainingSet;
use crate::interaction::{Interaction, InteractionKind, ALL_CLASSES, BASE_CLASSES};
use crate::trace::{EventLog, SensorTrace};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("mismatch pairing requires two distinct users")]
    SameUser,
}

/// Everything one synthetic session produces: the bracelet trace, the
/// terminal events, and the ground-truth spans (including idle and upright
/// periods that never reach the terminal).
#[derive(Debug, Clone)]
pub struct SessionBundle {
    pub sensor: SensorTrace,
    pub events: EventLog,
    pub truth: Vec<Interaction>,
    pub user_id: String,
}

/// Innocent-adversary pairing: user `a`'s terminal activity against user
/// `b`'s bracelet. `b`'s sensor trace is shifted so both streams start at
/// t = 0; segmentation is then driven by `a`'s actual sequence.
pub fn mismatch_pair(a: &SessionBundle, b: &SessionBundle) -> Result<SessionBundle, AdversaryError> {
    if a.user_id == b.user_id {
        return Err(AdversaryError::SameUser);
    }
    let shift = b.sensor.start_ms();
    let mut sensor = b.sensor.clone();
    for s in &mut sensor.samples {
        s.t -= shift;
    }
    Ok(SessionBundle {
        sensor,
        events: a.events.clone(),
        truth: a.truth.clone(),
        user_id: format!("{}-on-{}", a.user_id, b.user_id),
    })
}

/// Desynchronization: shifts every terminal event (and hence the actual
/// interaction sequence) forward by `shift_ms`; the sensor is untouched.
pub fn desync(bundle: &SessionBundle, shift_ms: i64) -> SessionBundle {
    assert!(shift_ms >= 0);
    SessionBundle {
        sensor: bundle.sensor.clone(),
        events: bundle.events.shifted(shift_ms),
        truth: bundle.truth.clone(),
        user_id: bundle.user_id.clone(),
    }
}

/// Synthetic Gaussian-separated training set over the three base classes:
/// per feature, class means sit `separation_sigmas` apart at unit variance.
pub fn gaussian_training_set(
    n_rows: usize,
    n_users: usize,
    separation_sigmas: f64,
    seed: u64,
) -> TrainingSet {
    gaussian_set(n_rows, n_users, separation_sigmas, seed, &BASE_CLASSES)
}

/// Five-class variant: idle and upright means sit between the base class
/// means so their rows land near real decision boundaries.
pub fn gaussian_training_set_5class(
    n_rows: usize,
    n_users: usize,
    separation_sigmas: f64,
    seed: u64,
) -> TrainingSet {
    gaussian_set(n_rows, n_users, separation_sigmas, seed, &ALL_CLASSES)
}

fn gaussian_set(
    n_rows: usize,
    n_users: usize,
    separation_sigmas: f64,
    seed: u64,
    classes: &[InteractionKind],
) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = TrainingSet::new();
    let center = |kind: InteractionKind| -> f64 {
        match kind {
            InteractionKind::Typing => 0.0,
            InteractionKind::Scrolling => 1.0,
            InteractionKind::Mkkm => 2.0,
            InteractionKind::Idle => 0.65,
            InteractionKind::Upright => 1.35,
        }
    };
    for i in 0..n_rows {
        let kind = classes[i % classes.len()];
        let user = format!("u{:02}", i % n_users);
        let mu = center(kind) * separation_sigmas;
        let mut row = [0.0; N_FEATURES];
        for v in &mut row {
            *v = mu + normal(&mut rng);
        }
        set.push_raw(row, kind, &user);
    }
    set
}

/// Standard normal draw via Box–Muller.
pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_rejects_same_user() {
        let profile = UserProfile::new("u00", 1);
        let bundle = generate_session(&profile, 70_000, 42);
        assert!(matches!(
            mismatch_pair(&bundle, &bundle),
            Err(AdversaryError::SameUser)
        ));
    }

    #[test]
    fn mismatch_aligns_sensor_to_zero() {
        let a = generate_session(&UserProfile::new("u00", 1), 70_000, 1);
        let b = generate_session(&UserProfile::new("u01", 2), 70_000, 2);
        let pair = mismatch_pair(&a, &b).unwrap();
        assert_eq!(pair.sensor.start_ms(), 0);
        assert_eq!(pair.events, a.events);
    }

    #[test]
    fn desync_shifts_events_only() {
        let bundle = generate_session(&UserProfile::new("u00", 1), 70_000, 3);
        let shifted = desync(&bundle, 200);
        assert_eq!(shifted.sensor, bundle.sensor);
        for (s, o) in shifted.events.events.iter().zip(bundle.events.events.iter()) {
            assert_eq!(s.t, o.t + 200);
        }
    }
}
