//! Feature extractor: 12 statistical features per sensor channel, computed
//! over a segment's magnitude signal, 24 in total.
//!
//! Conventions (also recorded in every model file header): variance and its
//! derivatives use the n−1 sample form; kurtosis is bias-corrected sample
//! *excess* kurtosis (normal ⇒ 0); skewness is bias-corrected sample
//! skewness; quartiles interpolate linearly between closest ranks;
//! autocorrelation is the lag-1 normalized coefficient. Moments that are
//! undefined for a segment (too few samples or zero variance) fall back to 0
//! so the vector always has fixed width.
//!
//! Feature matrix file format, one segment per line:
//! `label f1 … f24 sparse_flag` in the column order of [`COLUMNS`].

use std::fmt::Write as _;

use crate::interaction::InteractionKind;
use crate::segment::Segment;
use crate::trace::TraceError;

/// The 12 per-channel statistics in file column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelFeatures {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub mad: f64,
    pub iqr: f64,
    pub power: f64,
    pub energy: f64,
    pub peak_to_peak: f64,
    pub autocorrelation: f64,
    pub kurtosis: f64,
    pub skewness: f64,
}

impl ChannelFeatures {
    pub fn to_array(self) -> [f64; 12] {
        [
            self.mean,
            self.median,
            self.variance,
            self.std_dev,
            self.mad,
            self.iqr,
            self.power,
            self.energy,
            self.peak_to_peak,
            self.autocorrelation,
            self.kurtosis,
            self.skewness,
        ]
    }
}

/// 24-dimensional feature vector of one segment: accelerometer channel then
/// gyroscope channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub accel: ChannelFeatures,
    pub gyro: ChannelFeatures,
    pub sparse: bool,
}

pub const N_FEATURES: usize = 24;

pub const COLUMNS: [&str; N_FEATURES] = [
    "accel_mean",
    "accel_median",
    "accel_variance",
    "accel_std_dev",
    "accel_mad",
    "accel_iqr",
    "accel_power",
    "accel_energy",
    "accel_peak_to_peak",
    "accel_autocorrelation",
    "accel_kurtosis",
    "accel_skewness",
    "gyro_mean",
    "gyro_median",
    "gyro_variance",
    "gyro_std_dev",
    "gyro_mad",
    "gyro_iqr",
    "gyro_power",
    "gyro_energy",
    "gyro_peak_to_peak",
    "gyro_autocorrelation",
    "gyro_kurtosis",
    "gyro_skewness",
];

impl FeatureVector {
    pub fn to_row(&self) -> [f64; N_FEATURES] {
        let mut row = [0.0; N_FEATURES];
        row[..12].copy_from_slice(&self.accel.to_array());
        row[12..].copy_from_slice(&self.gyro.to_array());
        row
    }
}

/// Computes the feature vector of a segment; sparse segments get the
/// defined fallback values and keep their sparse flag.
pub fn featurize(seg: &Segment) -> FeatureVector {
    FeatureVector {
        accel: channel_features(&seg.accel_mag),
        gyro: channel_features(&seg.gyro_mag),
        sparse: seg.sparse,
    }
}

fn channel_features(m: &[f64]) -> ChannelFeatures {
    let n = m.len();
    if n == 0 {
        return ChannelFeatures::default();
    }
    let nf = n as f64;
    let mean = m.iter().sum::<f64>() / nf;

    let mut sorted = m.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = median_sorted(&sorted);

    let sum_sq: f64 = m.iter().map(|x| x * x).sum();
    let power = sum_sq / nf;
    // energy is derived from power so that energy == power * n holds exactly.
    let energy = power * nf;

    let variance = if n >= 2 {
        m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let std_dev = variance.sqrt();

    let mut abs_dev: Vec<f64> = m.iter().map(|x| (x - median).abs()).collect();
    abs_dev.sort_by(f64::total_cmp);
    let mad = median_sorted(&abs_dev);

    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let peak_to_peak = sorted[n - 1] - sorted[0];

    let autocorrelation = if n >= 2 {
        let den: f64 = m.iter().map(|x| (x - mean).powi(2)).sum();
        if den == 0.0 {
            0.0
        } else {
            let num: f64 = m
                .windows(2)
                .map(|w| (w[0] - mean) * (w[1] - mean))
                .sum();
            num / den
        }
    } else {
        0.0
    };

    // Population central moments feed the bias-corrected sample forms.
    let m2 = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let skewness = if n >= 3 && variance > 0.0 {
        let m3 = m.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
        let g1 = m3 / m2.powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    } else {
        0.0
    };
    let kurtosis = if n >= 4 && variance > 0.0 {
        let m4 = m.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let g2 = m4 / (m2 * m2) - 3.0;
        ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0))
    } else {
        0.0
    };

    ChannelFeatures {
        mean,
        median,
        variance,
        std_dev,
        mad,
        iqr,
        power,
        energy,
        peak_to_peak,
        autocorrelation,
        kurtosis,
        skewness,
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Quantile with linear interpolation between closest ranks (h = (n−1)p).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// One feature-matrix line per segment: `label f1 … f24 sparse_flag`.
pub fn feature_matrix_to_text(rows: &[(InteractionKind, FeatureVector)]) -> String {
    let mut out = String::new();
    for (kind, fv) in rows {
        let _ = write!(out, "{}", kind.token());
        for v in fv.to_row() {
            let _ = write!(out, " {}", v);
        }
        let _ = writeln!(out, " {}", u8::from(fv.sparse));
    }
    out
}

pub fn feature_matrix_from_text(
    text: &str,
) -> Result<Vec<(InteractionKind, FeatureVector)>, TraceError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != N_FEATURES + 2 {
            return Err(TraceError::MalformedLine(line_no));
        }
        let kind: InteractionKind = parts[0]
            .parse()
            .map_err(|_| TraceError::MalformedLine(line_no))?;
        let mut row = [0.0; N_FEATURES];
        for (i, tok) in parts[1..=N_FEATURES].iter().enumerate() {
            row[i] = tok.parse().map_err(|_| TraceError::MalformedLine(line_no))?;
        }
        let sparse = match *parts.last().unwrap() {
            "0" => false,
            "1" => true,
            _ => return Err(TraceError::MalformedLine(line_no)),
        };
        rows.push((kind, vector_from_row(row, sparse)));
    }
    Ok(rows)
}

pub fn vector_from_row(row: [f64; N_FEATURES], sparse: bool) -> FeatureVector {
    let ch = |s: &[f64]| ChannelFeatures {
        mean: s[0],
        median: s[1],
        variance: s[2],
        std_dev: s[3],
        mad: s[4],
        iqr: s[5],
        power: s[6],
        energy: s[7],
        peak_to_peak: s[8],
        autocorrelation: s[9],
        kurtosis: s[10],
        skewness: s[11],
    };
    FeatureVector {
        accel: ch(&row[..12]),
        gyro: ch(&row[12..]),
        sparse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{Interaction, InteractionKind};

    fn seg(mags: &[f64]) -> Segment {
        Segment {
            interaction: Interaction::new(InteractionKind::Typing, 0, 100),
            accel_mag: mags.to_vec(),
            gyro_mag: mags.to_vec(),
            sparse: mags.len() < 3,
        }
    }

    #[test]
    fn constant_signal_conventions() {
        let fv = featurize(&seg(&[2.0, 2.0, 2.0, 2.0]));
        let a = fv.accel;
        assert_eq!(a.mean, 2.0);
        assert_eq!(a.variance, 0.0);
        assert_eq!(a.peak_to_peak, 0.0);
        assert_eq!(a.skewness, 0.0);
        assert_eq!(a.autocorrelation, 0.0);
        assert_eq!(a.energy, 16.0);
        assert_eq!(a.power, 4.0);
    }

    #[test]
    fn small_vector_arithmetic() {
        let fv = featurize(&seg(&[1.0, 2.0, 3.0, 4.0]));
        let a = fv.accel;
        assert!((a.mean - 2.5).abs() < 1e-15);
        assert!((a.median - 2.5).abs() < 1e-15);
        assert!((a.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((a.energy - 30.0).abs() < 1e-12);
        assert!((a.power - 7.5).abs() < 1e-15);
        assert!((a.peak_to_peak - 3.0).abs() < 1e-15);
        assert!((a.iqr - 1.5).abs() < 1e-15);
        // Known bias-corrected excess kurtosis of [1,2,3,4].
        assert!((a.kurtosis - -1.2).abs() < 1e-12);
    }

    #[test]
    fn empty_segment_gets_fallback_vector() {
        let fv = featurize(&seg(&[]));
        assert!(fv.sparse);
        assert!(fv.to_row().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn feature_matrix_roundtrips() {
        let rows = vec![
            (InteractionKind::Typing, featurize(&seg(&[1.0, 2.0, 3.5]))),
            (InteractionKind::Idle, featurize(&seg(&[0.5]))),
        ];
        let text = feature_matrix_to_text(&rows);
        let parsed = feature_matrix_from_text(&text).unwrap();
        assert_eq!(parsed, rows);
    }
}
