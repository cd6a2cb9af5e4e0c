use std::f64::consts::TAU;

use num_complex::Complex64;

use super::Scenario;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::groundtruth::GroundTruthTrack;
use crate::waveform::NodeId;
use crate::SPEED_OF_LIGHT;

const MIN_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Direct,
    TargetReflection,
    /// Static extra path configured on a link.
    Multipath,
}

/// One propagation path at a given instant.
///
/// `gain` already contains the carrier phase `exp(-j 2 pi f_c delay)`, so the
/// Doppler shift shows up as the symbol-to-symbol rotation of `gain`;
/// `doppler` is the instantaneous value of that rotation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTap {
    pub delay: f64,
    pub doppler: f64,
    pub gain: Complex64,
    pub kind: PathKind,
}

impl PathTap {
    /// Static tap with a real gain.
    pub fn fixed(delay: f64, gain: f64) -> Self {
        Self {
            delay,
            doppler: 0.0,
            gain: Complex64::new(gain, 0.0),
            kind: PathKind::Direct,
        }
    }

    /// Tap whose gain rotates at `doppler` Hz, evaluated at time `t`.
    pub fn rotating(delay: f64, doppler: f64, gain: Complex64, t: f64) -> Self {
        Self {
            delay,
            doppler,
            gain: gain * Complex64::cis(TAU * doppler * t),
            kind: PathKind::Direct,
        }
    }
}

/// Target position and velocity at capture-clock time `t`.
///
/// Velocity is the central difference of interpolated positions half a
/// sample period either side, one-sided at the track ends.
pub fn target_state(track: &GroundTruthTrack, t: f64) -> Result<(Vec3, Vec3)> {
    let p = track.position_at(t)?;
    let h = 0.5 * track.period();
    let lo = (t - h).max(track.start_time);
    let hi = (t + h).min(track.end_time());
    let v = (track.position_at(hi)? - track.position_at(lo)?) * (1.0 / (hi - lo));
    Ok((p, v))
}

/// Paths from `tx` to `rx` at testbed time `t`.
///
/// A direct path (self-leakage when `tx == rx`), the target echo, and any
/// static extra taps configured for the link.
pub fn compute_paths(scenario: &Scenario, t: f64, tx: NodeId, rx: NodeId) -> Result<Vec<PathTap>> {
    if t < -1e-12 || t > scenario.file.duration_s {
        return Err(Error::OutOfRange(format!("t = {t} outside the scenario duration")));
    }
    let ptx = scenario.node(tx).tx_position;
    let prx = scenario.node(rx).rx_position;
    let fc = scenario.node(tx).center_frequency;
    let carrier = |delay: f64| Complex64::cis(-TAU * fc * delay);
    let mut taps = Vec::with_capacity(3);

    let d = ptx.distance(prx);
    let delay = d / SPEED_OF_LIGHT;
    let link = scenario.link(tx, rx);
    let direct = if tx == rx {
        scenario.self_leakage_gain
    } else {
        let loss = link.map_or(0.0, |l| l.direct_loss_db);
        scenario.file.direct_path_gain / d.max(MIN_DISTANCE) * 10f64.powf(-loss / 20.0)
    };
    taps.push(PathTap {
        delay,
        doppler: 0.0,
        gain: carrier(delay) * direct,
        kind: PathKind::Direct,
    });
    if let Some(l) = link {
        // extra taps are referenced to the unobstructed direct path
        let reference = scenario.file.direct_path_gain / d.max(MIN_DISTANCE);
        for e in &l.extra_taps {
            let delay = delay + e.excess_delay_ns * 1e-9;
            let g = reference * 10f64.powf(e.relative_gain_db / 20.0);
            taps.push(PathTap {
                delay,
                doppler: 0.0,
                gain: carrier(delay) * Complex64::from_polar(g, e.phase_deg.to_radians()),
                kind: PathKind::Multipath,
            });
        }
    }

    let (p, v) = target_state(&scenario.track, scenario.timeline.to_capture(t))?;
    let d1 = ptx.distance(p);
    let d2 = p.distance(prx);
    if d1 < MIN_DISTANCE || d2 < MIN_DISTANCE {
        return Err(Error::OutOfRange(format!("target coincides with {tx} or {rx} at t = {t}")));
    }
    let rate = v.dot(p - ptx) / d1 + v.dot(p - prx) / d2;
    let delay = (d1 + d2) / SPEED_OF_LIGHT;
    taps.push(PathTap {
        delay,
        doppler: -fc / SPEED_OF_LIGHT * rate,
        gain: carrier(delay) * (scenario.file.target_rcs_gain / (d1 * d2)),
        kind: PathKind::TargetReflection,
    });
    Ok(taps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::scenario::tests::MINIMAL;
    use crate::channel::{Mode, ScenarioFile};
    use crate::groundtruth::{synthesize_track, TrackKind};

    fn scenario_with(shape: TrackKind, tweak: impl FnOnce(&mut ScenarioFile)) -> Scenario {
        let mut f = ScenarioFile::from_toml(MINIMAL).unwrap();
        f.trajectory.shape = Some(shape);
        f.trajectory.mocap_lead_s = 0.0;
        tweak(&mut f);
        Scenario::with_mode(&f, Mode::Sbfd, 0).unwrap()
    }

    #[test]
    fn static_and_linear_target_state() {
        let fixed = TrackKind::Linear {
            start_m: Vec3::new(1.0, 2.0, 3.0),
            velocity_mps: Vec3::ZERO,
        };
        let t = synthesize_track(&fixed, 1.0, 100.0).unwrap();
        assert_eq!(target_state(&t, 0.5).unwrap().1, Vec3::ZERO);
        let v = Vec3::new(0.3, -1.1, 0.2);
        let lin = TrackKind::Linear {
            start_m: Vec3::ZERO,
            velocity_mps: v,
        };
        let t = synthesize_track(&lin, 1.0, 100.0).unwrap();
        for &tt in &[0.0, 0.123, 0.5, 1.0] {
            assert!((target_state(&t, tt).unwrap().1 - v).norm() < 1e-9);
        }
        assert!(target_state(&t, 1.5).is_err());
    }

    #[test]
    fn circular_speed() {
        let c = TrackKind::Circular {
            center_m: Vec3::ZERO,
            radius_m: 2.0,
            period_s: 8.0,
            phase_rad: 0.0,
        };
        let t = synthesize_track(&c, 8.0, 100.0).unwrap();
        let expected = TAU * 2.0 / 8.0;
        for &tt in &[0.37, 2.0, 5.55] {
            let s = target_state(&t, tt).unwrap().1.norm();
            assert!((s / expected - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn monostatic_receding_doppler_and_delay() {
        // node 1 at (-1.5, 0, 1.2); target 5 m away along +y, receding at 1 m/s
        let s = scenario_with(
            TrackKind::Linear {
                start_m: Vec3::new(-1.5, 5.0, 1.2),
                velocity_mps: Vec3::new(0.0, 1.0, 0.0),
            },
            |_| {},
        );
        let taps = compute_paths(&s, 0.0, NodeId::Node1, NodeId::Node1).unwrap();
        let echo = taps.iter().find(|t| t.kind == PathKind::TargetReflection).unwrap();
        assert!((echo.delay - 10.0 / SPEED_OF_LIGHT).abs() < 1e-15);
        assert!((echo.delay - 33.36e-9).abs() < 0.01e-9);
        let expected = -2.0 * 6.8e9 * 1.0 / SPEED_OF_LIGHT;
        assert!((echo.doppler - expected).abs() < 1e-6);
        assert!((echo.doppler.abs() - 45.36).abs() < 0.01);
        let leak = taps.iter().find(|t| t.kind == PathKind::Direct).unwrap();
        assert!((leak.gain.norm() - 0.01).abs() < 1e-12);
        assert_eq!(leak.delay, 0.0);
    }

    #[test]
    fn approaching_target_has_positive_doppler() {
        let s = scenario_with(
            TrackKind::Linear {
                start_m: Vec3::new(0.0, 5.0, 1.2),
                velocity_mps: Vec3::new(0.0, -1.0, 0.0),
            },
            |_| {},
        );
        for (tx, rx) in [(NodeId::Node1, NodeId::Node1), (NodeId::Node1, NodeId::Node3)] {
            let taps = compute_paths(&s, 0.01, tx, rx).unwrap();
            assert!(taps.iter().any(|t| t.kind == PathKind::TargetReflection && t.doppler > 0.0));
        }
    }

    #[test]
    fn doppler_matches_phase_progression() {
        let s = scenario_with(
            TrackKind::Linear {
                start_m: Vec3::new(-0.5, 3.0, 1.2),
                velocity_mps: Vec3::new(0.6, -0.8, 0.0),
            },
            |_| {},
        );
        let ts = s.numerology.symbol_duration();
        let echo = |m: usize| {
            compute_paths(&s, m as f64 * ts, NodeId::Node2, NodeId::Node2)
                .unwrap()
                .into_iter()
                .find(|t| t.kind == PathKind::TargetReflection)
                .unwrap()
        };
        let (a, b) = (echo(100), echo(101));
        let measured = (b.gain / a.gain).arg() / (TAU * ts);
        assert!((measured - a.doppler).abs() < 0.05, "{measured} vs {}", a.doppler);
    }

    #[test]
    fn direct_path_law_and_link_overrides() {
        let s = scenario_with(
            TrackKind::Linear {
                start_m: Vec3::new(0.0, 4.0, 1.2),
                velocity_mps: Vec3::ZERO,
            },
            |f| {
                f.links.push(crate::channel::LinkConfig {
                    tx: 3,
                    rx: 1,
                    direct_loss_db: 20.0,
                    extra_taps: vec![crate::channel::ExtraTap {
                        excess_delay_ns: 50.0,
                        relative_gain_db: -3.0,
                        phase_deg: 90.0,
                    }],
                })
            },
        );
        let d12 = Vec3::new(-1.5, 0.0, 1.2).distance(Vec3::new(0.0, 0.5, 1.2));
        let taps = compute_paths(&s, 0.0, NodeId::Node2, NodeId::Node1).unwrap();
        assert_eq!(taps.len(), 2);
        assert!((taps[0].gain.norm() - 1.0 / d12).abs() < 1e-12);
        assert!((taps[0].delay - d12 / SPEED_OF_LIGHT).abs() < 1e-18);

        let taps = compute_paths(&s, 0.0, NodeId::Node3, NodeId::Node1).unwrap();
        assert_eq!(taps.len(), 3);
        assert!((taps[0].gain.norm() - 0.1 / 3.0).abs() < 1e-12);
        assert_eq!(taps[1].kind, PathKind::Multipath);
        assert!((taps[1].gain.norm() - 10f64.powf(-3.0 / 20.0) / 3.0).abs() < 1e-12);
        assert!((taps[1].delay - taps[0].delay - 50e-9).abs() < 1e-18);
    }

    #[test]
    fn target_on_a_node_is_an_error() {
        let s = scenario_with(
            TrackKind::Linear {
                start_m: Vec3::new(-1.5, 0.0, 1.2),
                velocity_mps: Vec3::ZERO,
            },
            |_| {},
        );
        assert!(compute_paths(&s, 0.0, NodeId::Node1, NodeId::Node1).is_err());
        assert!(compute_paths(&s, 1.0, NodeId::Node2, NodeId::Node2).is_err());
    }
}
