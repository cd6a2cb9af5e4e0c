//! Velocity RMSE against ground truth, resolution figures and cross-mode
//! summaries.

use serde::{Deserialize, Serialize};

use crate::channel::Mode;
use crate::error::{invalid, Error, Result};
use crate::groundtruth::TimeSeries;
use crate::waveform::{NodeId, OfdmNumerology};
use crate::SPEED_OF_LIGHT;

/// RMSE over runs at each time step for one node in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseSeries {
    pub timestamps: Vec<f64>,
    pub rmse: Vec<f64>,
    pub node: NodeId,
    pub mode: Mode,
    pub runs_averaged: usize,
}

/// `rmse(t) = sqrt(mean over runs (est(t) - truth(t))^2)`.
///
/// With `absolute`, speeds are compared instead of signed velocities.
pub fn rmse_per_step(
    estimates: &[TimeSeries],
    truth: &[TimeSeries],
    node: NodeId,
    mode: Mode,
    absolute: bool,
) -> Result<RmseSeries> {
    if estimates.is_empty() {
        return Err(invalid("need at least one run"));
    }
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: estimates.len(),
            actual: truth.len(),
        });
    }
    let timestamps = estimates[0].timestamps.clone();
    for s in estimates.iter().chain(truth) {
        if s.timestamps.len() != timestamps.len()
            || s.timestamps.iter().zip(&timestamps).any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(invalid("timestamps differ between runs or from truth"));
        }
    }
    let f = |v: f64| if absolute { v.abs() } else { v };
    let runs = estimates.len() as f64;
    let rmse = (0..timestamps.len())
        .map(|i| {
            let sq: f64 = estimates
                .iter()
                .zip(truth)
                .map(|(e, t)| (f(e.values[i]) - f(t.values[i])).powi(2))
                .sum();
            (sq / runs).sqrt()
        })
        .collect();
    Ok(RmseSeries {
        timestamps,
        rmse,
        node,
        mode,
        runs_averaged: estimates.len(),
    })
}

/// Velocity bin width `c / (2 f_c window T_sym)`.
pub fn velocity_resolution(numerology: &OfdmNumerology, window: usize) -> Result<f64> {
    if window < 2 {
        return Err(invalid("window must be at least 2 symbols"));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * numerology.center_frequency * window as f64 * numerology.symbol_duration()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: Mode,
    pub samples: usize,
    pub min_rmse_mps: f64,
    pub median_rmse_mps: f64,
    pub max_rmse_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub modes: Vec<ModeRow>,
    /// median(SBFD) / median(multiband), when both are present.
    pub sbfd_over_multiband: Option<f64>,
    /// median(same-band) / median(SBFD), when both are present.
    pub same_band_over_sbfd: Option<f64>,
    /// SBFD within 1.5x of multiband.
    pub sbfd_comparable: Option<bool>,
    /// Same-band at least 5x worse than SBFD.
    pub same_band_degraded: Option<bool>,
}

impl ModeSummary {
    pub fn row(&self, mode: Mode) -> Option<&ModeRow> {
        self.modes.iter().find(|r| r.mode == mode)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pools every node's RMSE samples per mode and compares the medians.
pub fn mode_summary(series: &[RmseSeries]) -> Result<ModeSummary> {
    if series.is_empty() {
        return Err(invalid("no RMSE series to summarise"));
    }
    let mut modes = Vec::new();
    for mode in Mode::ALL {
        let mut pooled: Vec<f64> = series
            .iter()
            .filter(|s| s.mode == mode)
            .flat_map(|s| s.rmse.iter().copied())
            .collect();
        if pooled.is_empty() {
            continue;
        }
        let med = median(&mut pooled);
        modes.push(ModeRow {
            mode,
            samples: pooled.len(),
            min_rmse_mps: pooled[0],
            median_rmse_mps: med,
            max_rmse_mps: pooled[pooled.len() - 1],
        });
    }
    if modes.is_empty() {
        return Err(invalid("RMSE series are all empty"));
    }
    let med = |m: Mode| modes.iter().find(|r| r.mode == m).map(|r| r.median_rmse_mps);
    let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        (Some(a), Some(_)) if a == 0.0 => Some(1.0),
        (Some(_), Some(_)) => Some(f64::INFINITY),
        _ => None,
    };
    let sbfd_over_multiband = ratio(med(Mode::Sbfd), med(Mode::Multiband));
    let same_band_over_sbfd = ratio(med(Mode::SameBand), med(Mode::Sbfd));
    Ok(ModeSummary {
        sbfd_comparable: sbfd_over_multiband.map(|r| r <= 1.5),
        same_band_degraded: same_band_over_sbfd.map(|r| r >= 5.0),
        modes,
        sbfd_over_multiband,
        same_band_over_sbfd,
    })
}
