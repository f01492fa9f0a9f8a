//! Segmenter: slices the bracelet trace by the actual interaction
//! timestamps and reduces each slice to accelerometer/gyroscope magnitude
//! signals. Measurements outside every interaction interval are never read.

use crate::interaction::Interaction;
use crate::trace::{SamplingSpec, SensorTrace};

/// Magnitude signals of one interaction's sensor slice. `sparse` marks
/// segments with too few samples for all features to be meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub interaction: Interaction,
    pub accel_mag: Vec<f64>,
    pub gyro_mag: Vec<f64>,
    pub sparse: bool,
}

/// Cuts one segment per interaction, in order. Interval bounds are
/// inclusive; an interaction covering no samples yields an empty, sparse
/// segment.
pub fn segment(trace: &SensorTrace, seq: &[Interaction], spec: &SamplingSpec) -> Vec<Segment> {
    seq.iter()
        .map(|interaction| {
            let lo = trace.samples.partition_point(|s| s.t < interaction.start_ms);
            let hi = trace.samples.partition_point(|s| s.t <= interaction.end_ms);
            let slice = &trace.samples[lo..hi];
            let accel_mag: Vec<f64> = slice.iter().map(|s| s.accel_magnitude()).collect();
            let gyro_mag: Vec<f64> = slice.iter().map(|s| s.gyro_magnitude()).collect();
            let sparse = slice.len() < spec.s_min;
            Segment {
                interaction: *interaction,
                accel_mag,
                gyro_mag,
                sparse,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::InteractionKind;
    use crate::trace::{SensorSample, SensorTrace};

    fn trace_with(times: &[i64]) -> SensorTrace {
        let samples = times
            .iter()
            .map(|&t| SensorSample {
                t,
                accel: [3.0, 4.0, 0.0],
                gyro: [0.0, 0.6, 0.8],
            })
            .collect();
        SensorTrace {
            samples,
            nominal_rate_hz: 20.0,
        }
    }

    #[test]
    fn interval_membership_is_inclusive() {
        let trace = trace_with(&[0, 50, 100, 150, 200, 250, 300]);
        let seq = vec![
            Interaction::new(InteractionKind::Typing, 0, 100),
            Interaction::new(InteractionKind::Scrolling, 200, 300),
        ];
        let segs = segment(&trace, &seq, &SamplingSpec::default());
        assert_eq!(segs[0].accel_mag.len(), 3); // t = 0, 50, 100
        assert_eq!(segs[1].accel_mag.len(), 3); // t = 200, 250, 300
        // t = 150 belongs to neither segment.
        let total: usize = segs.iter().map(|s| s.accel_mag.len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn magnitude_is_euclidean_norm() {
        let trace = trace_with(&[0]);
        let seq = vec![Interaction::new(InteractionKind::Typing, 0, 10)];
        let segs = segment(&trace, &seq, &SamplingSpec::default());
        assert!((segs[0].accel_mag[0] - 5.0).abs() < 1e-12); // 3-4-5
        assert!((segs[0].gyro_mag[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_event_at_low_rate_is_sparse() {
        // 25 Hz trace: 40 ms between samples; a 25 ms interaction catches at
        // most one sample.
        let trace = trace_with(&[0, 40, 80, 120]);
        let seq = vec![Interaction::new(InteractionKind::Typing, 35, 60)];
        let segs = segment(&trace, &seq, &SamplingSpec::default());
        assert!(segs[0].accel_mag.len() <= 1);
        assert!(segs[0].sparse);
    }

    #[test]
    fn empty_coverage_yields_empty_sparse_segment() {
        let trace = trace_with(&[0, 40]);
        let seq = vec![Interaction::new(InteractionKind::Typing, 10, 30)];
        let segs = segment(&trace, &seq, &SamplingSpec::default());
        assert!(segs[0].accel_mag.is_empty());
        assert!(segs[0].sparse);
    }
}
