use super::GroundTruthTrack;
use crate::error::{invalid, Error, Result};
use crate::geometry::Vec3;

/// Scalar samples on ascending timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub timestamps: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: timestamps.len(),
                actual: values.len(),
            });
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time series timestamps must be strictly increasing"));
        }
        Ok(Self { timestamps, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same values, timestamps shifted by `dt`.
    pub fn shifted(&self, dt: f64) -> TimeSeries {
        TimeSeries {
            timestamps: self.timestamps.iter().map(|t| t + dt).collect(),
            values: self.values.clone(),
        }
    }
}

/// Range rate between the target and `node`, positive when receding.
///
/// Central differences (one-sided at the ends) followed by a centered moving
/// average of `smoothing_window` samples, truncated at the edges.
pub fn derive_radial_velocity(track: &GroundTruthTrack, node: Vec3, smoothing_window: usize) -> Result<TimeSeries> {
    if !node.is_finite() {
        return Err(invalid("node position must be finite"));
    }
    if smoothing_window == 0 || smoothing_window % 2 == 0 {
        return Err(invalid("smoothing window must be odd"));
    }
    if track.len() < smoothing_window {
        return Err(invalid(format!(
            "track of {} samples is shorter than the smoothing window {smoothing_window}",
            track.len()
        )));
    }
    let range: Vec<f64> = track.positions.iter().map(|p| p.distance(node)).collect();
    let n = range.len();
    let dt = track.period();
    let rate: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => (range[1] - range[0]) / dt,
            i if i == n - 1 => (range[n - 1] - range[n - 2]) / dt,
            i => (range[i + 1] - range[i - 1]) / (2.0 * dt),
        })
        .collect();
    let half = smoothing_window / 2;
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            rate[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    TimeSeries::new(track.timestamps(), values)
}

/// Linear interpolation of `series` at `targets`.
pub fn resample_to(series: &TimeSeries, targets: &[f64]) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(invalid("need at least two samples to interpolate"));
    }
    let ts = &series.timestamps;
    let (first, last) = (ts[0], ts[ts.len() - 1]);
    let tol = 1e-9 * (last - first).abs().max(1.0);
    let values = targets
        .iter()
        .map(|&t| {
            if t < first - tol || t > last + tol {
                return Err(Error::OutOfRange(format!("t = {t} outside [{first}, {last}]")));
            }
            let j = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1);
            let (t0, t1) = (ts[j - 1], ts[j]);
            let (v0, v1) = (series.values[j - 1], series.values[j]);
            if t == t0 {
                return Ok(v0);
            }
            if t == t1 {
                return Ok(v1);
            }
            let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            Ok(v0 + (v1 - v0) * frac)
        })
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new(targets.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundtruth::{align_timelines, synthesize_track, TrackKind};
    use proptest::prelude::*;

    #[test]
    fn circling_a_node_has_zero_range_rate() {
        let node = Vec3::new(1.0, 1.0, 1.0);
        let kind = TrackKind::Circular {
            center_m: node,
            radius_m: 2.0,
            period_s: 8.0,
            phase_rad: 0.0,
        };
        let t = synthesize_track(&kind, 5.0, 100.0).unwrap();
        let v = derive_radial_velocity(&t, node, 5).unwrap();
        assert!(v.values.iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn radial_approach_is_minus_one() {
        let node = Vec3::ZERO;
        let kind = TrackKind::Linear {
            start_m: Vec3::new(8.0, 0.0, 0.0),
            velocity_mps: Vec3::new(-1.0, 0.0, 0.0),
        };
        let t = synthesize_track(&kind, 5.0, 100.0).unwrap();
        let v = derive_radial_velocity(&t, node, 5).unwrap();
        assert!(v.values.iter().all(|x| (x + 1.0).abs() < 1e-3));
    }

    #[test]
    fn tangential_pass_crosses_zero_at_closest_approach() {
        // closest approach to the origin at t = 2.5 s, where x = 0
        let kind = TrackKind::Linear {
            start_m: Vec3::new(-2.5, 3.0, 0.0),
            velocity_mps: Vec3::new(1.0, 0.0, 0.0),
        };
        let t = synthesize_track(&kind, 5.0, 100.0).unwrap();
        let v = derive_radial_velocity(&t, Vec3::ZERO, 5).unwrap();
        let crossing = v.values.windows(2).position(|w| w[0] < 0.0 && w[1] >= 0.0).unwrap();
        let t_cross = v.timestamps[crossing];
        assert!((t_cross - 2.5).abs() <= 0.011, "crossing at {t_cross}");
        // geometry oracle: v_r = x / r along the line
        let oracle = |tt: f64| {
            let x = -2.5 + tt;
            x / (x * x + 9.0f64).sqrt()
        };
        for i in (10..490).step_by(37) {
            assert!((v.values[i] - oracle(v.timestamps[i])).abs() < 1e-3);
        }
    }

    #[test]
    fn velocity_invariant_under_alignment() {
        let kind = TrackKind::Linear {
            start_m: Vec3::new(-2.5, 3.0, 0.0),
            velocity_mps: Vec3::new(1.0, 0.2, 0.0),
        };
        let t = synthesize_track(&kind, 5.0, 100.0).unwrap();
        let a = align_timelines(0.5, &t).unwrap();
        let aligned = a.apply(&t).unwrap();
        let raw = derive_radial_velocity(&t, Vec3::ZERO, 1).unwrap();
        let shifted = derive_radial_velocity(&aligned, Vec3::ZERO, 1).unwrap();
        // interior samples share values; only timestamps move
        for k in 1..aligned.len() - 1 {
            assert!((shifted.values[k] - raw.values[k + 50]).abs() < 1e-12);
            assert!((shifted.timestamps[k] - (raw.timestamps[k + 50] - 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn derive_errors() {
        let kind = TrackKind::Linear {
            start_m: Vec3::ZERO,
            velocity_mps: Vec3::new(1.0, 0.0, 0.0),
        };
        let t = synthesize_track(&kind, 0.02, 100.0).unwrap();
        assert!(derive_radial_velocity(&t, Vec3::new(5.0, 0.0, 0.0), 4).is_err());
        assert!(derive_radial_velocity(&t, Vec3::new(5.0, 0.0, 0.0), 5).is_err());
        assert!(derive_radial_velocity(&t, Vec3::new(f64::NAN, 0.0, 0.0), 1).is_err());
    }

    #[test]
    fn resample_identity_midpoint_and_span() {
        let s = TimeSeries::new(vec![0.0, 0.01, 0.02], vec![1.0, 3.0, -1.0]).unwrap();
        assert_eq!(resample_to(&s, &s.timestamps).unwrap(), s);
        let mid = resample_to(&s, &[0.005, 0.015]).unwrap();
        assert!((mid.values[0] - 2.0).abs() < 1e-12);
        assert!((mid.values[1] - 1.0).abs() < 1e-12);
        assert!(resample_to(&s, &[0.03]).is_err());
        assert!(resample_to(&s, &[-0.001]).is_err());
    }

    proptest! {
        #[test]
        fn resample_is_bounded_by_neighbours(vals in proptest::collection::vec(-10.0f64..10.0, 2..40), u in 0.0f64..1.0) {
            let ts: Vec<f64> = (0..vals.len()).map(|i| i as f64 * 0.01).collect();
            let s = TimeSeries::new(ts.clone(), vals.clone()).unwrap();
            let t = u * ts[ts.len() - 1];
            let r = resample_to(&s, &[t]).unwrap().values[0];
            let j = ((t / 0.01).floor() as usize).min(vals.len() - 2);
            let (lo, hi) = (vals[j].min(vals[j + 1]), vals[j].max(vals[j + 1]));
            prop_assert!(r >= lo - 1e-9 && r <= hi + 1e-9);
        }
    }
}
