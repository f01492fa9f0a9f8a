//! TOML experiment configuration: a single manifest drives full
//! reproduction runs; command-line flags override manifest values.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{AttackStrategy, AttackerProfile};
use crate::auth::AuthParams;
use crate::experiment::Manifest;
use crate::extractor::{ExtractorConfig, Hand};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub n_users: Option<usize>,
    pub duration_s: Option<u64>,
    pub train_duration_s: Option<u64>,
    pub seed: Option<u64>,
    pub auth: Option<AuthSection>,
    pub extractor: Option<ExtractorSection>,
    pub sampling: Option<SamplingSection>,
    pub w_grid: Option<Vec<usize>>,
    pub m_grid: Option<Vec<f64>>,
    pub desync_shifts_ms: Option<Vec<i64>>,
    pub downsample_keep: Option<Vec<usize>>,
    #[serde(default)]
    pub attacker: Vec<AttackerSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthSection {
    pub w: Option<usize>,
    pub m: Option<f64>,
    pub g: Option<usize>,
    pub f: Option<f64>,
    pub strict_threshold: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorSection {
    pub min_duration_ms: Option<i64>,
    pub max_duration_ms: Option<i64>,
    pub idle_threshold_ms: Option<i64>,
    pub mkkm_max_ms: Option<i64>,
    pub min_scroll_events: Option<usize>,
    pub bracelet_hand: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub s_min: Option<usize>,
    pub d_min_ms: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSection {
    pub name: Option<String>,
    pub strategy: String,
    pub latency_median_ms: Option<f64>,
    pub latency_sigma_log: Option<f64>,
    pub mimic_fraction: Option<f64>,
    pub miss_probability: Option<f64>,
    pub early_stop_probability: Option<f64>,
    pub audio_latency_factor: Option<f64>,
    pub audio_detection_prob: Option<f64>,
}

pub fn parse_strategy(s: &str) -> Result<AttackStrategy, ConfigError> {
    match s {
        "naive-all" => Ok(AttackStrategy::NaiveAll),
        "opp-keyboard" => Ok(AttackStrategy::OppKeyboard),
        "opp-all" => Ok(AttackStrategy::OppAll),
        "audio-keyboard" => Ok(AttackStrategy::AudioKeyboard),
        other => Err(ConfigError::Invalid(format!(
            "unknown strategy `{other}` (expected naive-all, opp-keyboard, opp-all, audio-keyboard)"
        ))),
    }
}

impl AttackerSection {
    pub fn to_profile(&self) -> Result<(String, AttackerProfile), ConfigError> {
        let strategy = parse_strategy(&self.strategy)?;
        let mut p = AttackerProfile::new(strategy);
        if let Some(v) = self.latency_median_ms {
            p.latency_median_ms = v;
        }
        if let Some(v) = self.latency_sigma_log {
            p.latency_sigma_log = v;
        }
        if let Some(v) = self.mimic_fraction {
            p.mimic_fraction = v;
        }
        if let Some(v) = self.miss_probability {
            p.miss_probability = v;
        }
        if let Some(v) = self.early_stop_probability {
            p.early_stop_probability = v;
        }
        if let Some(v) = self.audio_latency_factor {
            p.audio_latency_factor = v;
        }
        if let Some(v) = self.audio_detection_prob {
            p.audio_detection_prob = v;
        }
        if !p.validate() {
            return Err(ConfigError::Invalid(format!(
                "attacker profile out of range: {p:?}"
            )));
        }
        let name = self.name.clone().unwrap_or_else(|| self.strategy.clone());
        Ok((name, p))
    }
}

impl ManifestFile {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Applies the file's values over the defaults and validates the result.
    pub fn into_manifest(self) -> Result<Manifest, ConfigError> {
        let mut m = Manifest::default();
        if let Some(v) = self.n_users {
            m.n_users = v;
        }
        if let Some(v) = self.duration_s {
            m.duration_s = v;
        }
        if let Some(v) = self.train_duration_s {
            m.train_duration_s = v;
        }
        if let Some(v) = self.seed {
            m.seed = v;
        }
        if let Some(a) = &self.auth {
            apply_auth(&mut m.auth, a);
        }
        if let Some(e) = &self.extractor {
            apply_extractor(&mut m.extractor, e)?;
        }
        if let Some(s) = &self.sampling {
            if let Some(v) = s.s_min {
                m.sampling.s_min = v;
            }
            if let Some(v) = s.d_min_ms {
                m.sampling.d_min_ms = v;
            }
        }
        if let Some(v) = self.w_grid {
            m.w_grid = v;
        }
        if let Some(v) = self.m_grid {
            m.m_grid = v;
        }
        if let Some(v) = self.desync_shifts_ms {
            m.desync_shifts_ms = v;
        }
        if let Some(v) = self.downsample_keep {
            m.downsample_keep = v;
        }
        if !self.attacker.is_empty() {
            m.attackers = self
                .attacker
                .iter()
                .map(|a| a.to_profile())
                .collect::<Result<_, _>>()?;
        }
        validate_manifest(&m)?;
        Ok(m)
    }
}

pub fn apply_auth(params: &mut AuthParams, section: &AuthSection) {
    if let Some(v) = section.w {
        params.w = v;
    }
    if let Some(v) = section.m {
        params.m = v;
    }
    if let Some(v) = section.g {
        params.g = v;
    }
    if let Some(v) = section.f {
        params.f = v;
    }
    if let Some(v) = section.strict_threshold {
        params.strict_threshold = v;
    }
}

fn apply_extractor(cfg: &mut ExtractorConfig, section: &ExtractorSection) -> Result<(), ConfigError> {
    if let Some(v) = section.min_duration_ms {
        cfg.min_duration_ms = v;
    }
    if let Some(v) = section.max_duration_ms {
        cfg.max_duration_ms = v;
    }
    if let Some(v) = section.idle_threshold_ms {
        cfg.idle_threshold_ms = v;
    }
    if let Some(v) = section.mkkm_max_ms {
        cfg.mkkm_max_ms = v;
    }
    if let Some(v) = section.min_scroll_events {
        cfg.min_scroll_events = v;
    }
    if let Some(hand) = &section.bracelet_hand {
        cfg.bracelet_hand = match hand.as_str() {
            "left" | "L" => Hand::Left,
            "right" | "R" => Hand::Right,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown bracelet_hand `{other}`"
                )))
            }
        };
    }
    Ok(())
}

pub fn validate_manifest(m: &Manifest) -> Result<(), ConfigError> {
    if m.n_users < 2 {
        return Err(ConfigError::Invalid("n_users must be at least 2".into()));
    }
    if !m.auth.validate() {
        return Err(ConfigError::Invalid(format!(
            "auth params out of range: {:?}",
            m.auth
        )));
    }
    if !m.extractor.validate() {
        return Err(ConfigError::Invalid(format!(
            "extractor config out of range: {:?}",
            m.extractor
        )));
    }
    if !m.sampling.validate() {
        return Err(ConfigError::Invalid("sampling spec out of range".into()));
    }
    if m.w_grid.is_empty() || m.m_grid.is_empty() {
        return Err(ConfigError::Invalid("empty (w, m) grid".into()));
    }
    Ok(())
}

/// Parses a standalone attacker profile file (a single `[attacker]`-style
/// table or bare keys).
pub fn load_attacker_profile(path: impl AsRef<Path>) -> Result<(String, AttackerProfile), ConfigError> {
    #[derive(Deserialize)]
    struct Wrapper {
        attacker: AttackerSection,
    }
    let text = fs::read_to_string(path)?;
    if let Ok(w) = toml::from_str::<Wrapper>(&text) {
        return w.attacker.to_profile();
    }
    let section: AttackerSection =
        toml::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    section.to_profile()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_defaults_and_overrides() {
        let m = ManifestFile::parse_str("").unwrap().into_manifest().unwrap();
        assert_eq!(m.n_users, 20);
        assert_eq!(m.auth.w, 20);

        let text = r#"
n_users = 6
seed = 7
[auth]
w = 10
m = 0.7
[extractor]
bracelet_hand = "left"
[[attacker]]
strategy = "opp-keyboard"
latency_median_ms = 250
"#;
        let m = ManifestFile::parse_str(text).unwrap().into_manifest().unwrap();
        assert_eq!(m.n_users, 6);
        assert_eq!(m.auth.w, 10);
        assert_eq!(m.extractor.bracelet_hand, Hand::Left);
        assert_eq!(m.attackers.len(), 1);
        assert_eq!(m.attackers[0].1.latency_median_ms, 250.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ManifestFile::parse_str("bogus_key = 1").is_err());
        let bad = ManifestFile::parse_str("[auth]\nm = 1.5").unwrap().into_manifest();
        assert!(bad.is_err());
        let bad = ManifestFile::parse_str("[[attacker]]\nstrategy = \"psychic\"")
            .unwrap()
            .into_manifest();
        assert!(bad.is_err());
    }
}
