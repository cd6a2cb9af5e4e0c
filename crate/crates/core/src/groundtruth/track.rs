use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Vec3;

/// Uniformly sampled 3-D target positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub sample_rate: f64,
    /// Time of the first sample, seconds on the capture clock.
    pub start_time: f64,
    pub positions: Vec<Vec3>,
    pub label: String,
}

impl GroundTruthTrack {
    pub fn new(sample_rate: f64, start_time: f64, positions: Vec<Vec3>, label: impl Into<String>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid("track sample rate must be positive"));
        }
        if positions.len() < 2 {
            return Err(invalid("a track needs at least two samples"));
        }
        if !start_time.is_finite() || positions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("track contains non-finite values"));
        }
        Ok(Self {
            sample_rate,
            start_time,
            positions,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.sample_rate
    }

    pub fn end_time(&self) -> f64 {
        self.time_of(self.len() - 1)
    }

    /// Sample count times sample period.
    pub fn span(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn timestamps(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time_of(i)).collect()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        let tol = 1e-9 * self.period();
        t >= self.start_time - tol && t <= self.end_time() + tol
    }

    /// Linearly interpolated position.
    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        if !self.contains_time(t) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside track span [{}, {}]",
                self.start_time,
                self.end_time()
            )));
        }
        let u = ((t - self.start_time) * self.sample_rate).clamp(0.0, (self.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.len() - 2);
        Ok(self.positions[i].lerp(self.positions[i + 1], u - i as f64))
    }
}

/// Synthetic trajectory shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrackKind {
    Linear {
        start_m: Vec3,
        velocity_mps: Vec3,
    },
    /// Counter-clockwise circle in the horizontal plane through `center_m`.
    Circular {
        center_m: Vec3,
        radius_m: f64,
        period_s: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Straight legs between points at constant speed, pausing `dwell_s` at
    /// every point after the first.
    Waypoints {
        points_m: Vec<Vec3>,
        speed_mps: f64,
        #[serde(default)]
        dwell_s: f64,
    },
}

impl TrackKind {
    fn label(&self) -> &'static str {
        match self {
            TrackKind::Linear { .. } => "linear",
            TrackKind::Circular { .. } => "circular",
            TrackKind::Waypoints { .. } => "waypoints",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TrackKind::Linear { start_m, velocity_mps } => {
                if !start_m.is_finite() || !velocity_mps.is_finite() {
                    return Err(invalid("linear track parameters must be finite"));
                }
            }
            TrackKind::Circular { radius_m, period_s, .. } => {
                if !(*radius_m > 0.0) || !(*period_s > 0.0) {
                    return Err(invalid("circular track needs positive radius and period"));
                }
            }
            TrackKind::Waypoints { points_m, speed_mps, dwell_s } => {
                if points_m.is_empty() || !(*speed_mps > 0.0) || *dwell_s < 0.0 {
                    return Err(invalid("waypoint track needs points, positive speed, non-negative dwell"));
                }
            }
        }
        Ok(())
    }

    fn position(&self, t: f64) -> Vec3 {
        match self {
            TrackKind::Linear { start_m, velocity_mps } => *start_m + *velocity_mps * t,
            TrackKind::Circular {
                center_m,
                radius_m,
                period_s,
                phase_rad,
            } => {
                let a = std::f64::consts::TAU * t / period_s + phase_rad;
                *center_m + Vec3::new(radius_m * a.cos(), radius_m * a.sin(), 0.0)
            }
            TrackKind::Waypoints {
                points_m,
                speed_mps,
                dwell_s,
            } => {
                let mut t_leg = 0.0;
                for pair in points_m.windows(2) {
                    let travel = pair[0].distance(pair[1]) / speed_mps;
                    if t < t_leg + travel {
                        return pair[0].lerp(pair[1], (t - t_leg) / travel);
                    }
                    t_leg += travel;
                    if t < t_leg + dwell_s {
                        return pair[1];
                    }
                    t_leg += dwell_s;
                }
                *points_m.last().expect("validated non-empty")
            }
        }
    }
}

/// Samples `kind` at `rate` Hz over `0..=duration` seconds.
pub fn synthesize_track(kind: &TrackKind, duration: f64, rate: f64) -> Result<GroundTruthTrack> {
    if !(duration > 0.0) {
        return Err(invalid("track duration must be positive"));
    }
    if !(rate > 0.0) {
        return Err(invalid("track rate must be positive"));
    }
    kind.validate()?;
    let n = (duration * rate + 1e-9).floor() as usize + 1;
    let positions = (0..n).map(|i| kind.position(i as f64 / rate)).collect();
    GroundTruthTrack::new(rate, 0.0, positions, kind.label())
}

/// Parses `t_s,x_m,y_m,z_m` CSV. Extra columns are ignored with a warning.
/// Rows are resampled onto a uniform grid at the median sample rate; gaps
/// longer than two periods are rejected.
pub fn parse_track<R: Read>(reader: R, label: &str) -> Result<GroundTruthTrack> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Malformed(format!("missing column '{name}'")))
    };
    let idx = [col("t_s")?, col("x_m")?, col("y_m")?, col("z_m")?];
    if headers.len() > 4 {
        log::warn!("ignoring {} extra column(s) in track '{label}'", headers.len() - 4);
    }

    let mut times = Vec::new();
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; 4];
        for (slot, &i) in v.iter_mut().zip(&idx) {
            let field = rec.get(i).ok_or_else(|| Error::Malformed(format!("row {} is short", line + 2)))?;
            *slot = field
                .parse::<f64>()
                .map_err(|_| Error::Malformed(format!("row {}: '{field}' is not a number", line + 2)))?;
            if !slot.is_finite() {
                return Err(Error::Malformed(format!("row {}: non-finite value", line + 2)));
            }
        }
        if let Some(&prev) = times.last() {
            if v[0] <= prev {
                return Err(Error::Malformed(format!("row {}: time is not increasing", line + 2)));
            }
        }
        times.push(v[0]);
        points.push(Vec3::new(v[1], v[2], v[3]));
    }
    if times.len() < 2 {
        return Err(invalid("a track needs at least two samples"));
    }

    let mut dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(f64::total_cmp);
    let period = dts[dts.len() / 2];
    if let Some(w) = times.windows(2).find(|w| w[1] - w[0] > 2.0 * period * (1.0 + 1e-6)) {
        return Err(Error::Malformed(format!("gap from t = {} to t = {}", w[0], w[1])));
    }
    let rate = 1.0 / period;
    let n = ((times[times.len() - 1] - times[0]) * rate + 1e-6).floor() as usize + 1;
    let mut j = 0;
    let positions = (0..n)
        .map(|i| {
            let t = times[0] + i as f64 * period;
            while j + 2 < times.len() && times[j + 1] <= t {
                j += 1;
            }
            let frac = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
            points[j].lerp(points[j + 1], frac)
        })
        .collect();
    GroundTruthTrack::new(rate, times[0], positions, label)
}

pub fn load_track(path: &Path) -> Result<GroundTruthTrack> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_track(File::open(path)?, &label)
}

pub fn write_track<W: Write>(writer: W, track: &GroundTruthTrack) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_s", "x_m", "y_m", "z_m"])?;
    for (i, p) in track.positions.iter().enumerate() {
        w.write_record([
            track.time_of(i).to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
