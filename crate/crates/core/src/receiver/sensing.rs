use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::waveform::{OfdmNumerology, SymbolGrid};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakSearch {
    /// Strongest cell of the range-Doppler map.
    #[default]
    Global,
    /// Strongest Doppler bin after summing power over range.
    RangeIntegrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    /// Symbols per Doppler window.
    pub window: usize,
    pub hop: usize,
    pub zero_pad: usize,
    /// Half-width of the excluded zero-Doppler ridge, in unpadded bins.
    pub dc_exclusion_bins: f64,
    /// Peaks weaker than this over the map median are reported as no mover.
    pub min_peak_snr_db: f64,
    /// Leading range bins evaluated; 0 keeps the whole range axis.
    pub range_bins: usize,
    pub peak_search: PeakSearch,
    pub keep_maps: bool,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            window: 1216,
            hop: 304,
            zero_pad: 4,
            dc_exclusion_bins: 1.0,
            min_peak_snr_db: 10.0,
            range_bins: 8,
            peak_search: PeakSearch::Global,
            keep_maps: false,
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(invalid("sensing window must be at least 2 symbols"));
        }
        if self.hop == 0 || self.zero_pad == 0 {
            return Err(invalid("hop and zero-padding factor must be positive"));
        }
        if !(self.dc_exclusion_bins >= 0.0) || !self.min_peak_snr_db.is_finite() {
            return Err(invalid("bad DC exclusion or peak threshold"));
        }
        Ok(())
    }
}

/// Power over (range bin, Doppler bin) for one window. Doppler bins are in
/// FFT order; see [`RangeDopplerMap::doppler_frequency`].
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    /// Row-major: `values[r * doppler_bins + k]`.
    pub values: Vec<f64>,
    pub range_bins: usize,
    pub doppler_bins: usize,
    pub zero_pad: usize,
    /// Meters per range bin, `c / (2 B)`.
    pub range_resolution: f64,
    /// Unpadded Doppler bin width, `1 / (window T_sym)`.
    pub doppler_resolution: f64,
    /// Seconds, relative to the processed grid.
    pub window_start: f64,
}

impl RangeDopplerMap {
    pub fn get(&self, r: usize, k: usize) -> f64 {
        self.values[r * self.doppler_bins + k]
    }

    /// Doppler frequency of padded bin `k`, Hz.
    pub fn doppler_frequency(&self, k: usize) -> f64 {
        signed_bin(k, self.doppler_bins) as f64 * self.doppler_resolution / self.zero_pad as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    /// Window midpoint, seconds.
    pub timestamp: f64,
    /// Radial velocity, m/s, positive when the target recedes.
    pub velocity: f64,
    pub peak_snr_db: f64,
    /// False when no mover was found; `velocity` is then 0.
    pub detected: bool,
    /// First symbol of the window.
    pub window_start: usize,
    pub doppler_hz: f64,
    pub range_bin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingOutput {
    pub map: Option<RangeDopplerMap>,
    pub estimate: VelocityEstimate,
}

/// Largest radial speed representable without Doppler aliasing,
/// `c / (4 f_c T_sym)`.
pub fn unambiguous_velocity(numerology: &OfdmNumerology) -> f64 {
    SPEED_OF_LIGHT / (4.0 * numerology.center_frequency * numerology.symbol_duration())
}

fn signed_bin(k: usize, len: usize) -> i64 {
    if k < len.div_ceil(2) {
        k as i64
    } else {
        k as i64 - len as i64
    }
}

/// Streaming monostatic Doppler estimator over sliding windows.
///
/// Each pushed symbol is reciprocally filtered (`D = Y / X`) and turned into
/// a range profile by an inverse DFT across subcarriers; only the range
/// profile is buffered. Whenever a full window is available on the hop grid,
/// a Hann-tapered, zero-padded DFT across symbols gives the Doppler spectrum
/// of each range bin and the peak is picked outside the zero-Doppler ridge.
pub struct SlidingSensor {
    cfg: SensingConfig,
    numerology: OfdmNumerology,
    rows: usize,
    kept: usize,
    start_timestamp: f64,
    range_fft: Arc<dyn Fft<f64>>,
    doppler_fft: Arc<dyn Fft<f64>>,
    taper: Vec<f64>,
    ring: Vec<Complex64>,
    scratch: Vec<Complex64>,
    pushed: usize,
}

impl SlidingSensor {
    /// `rows` subcarriers per symbol; `start_timestamp` is the time of the
    /// first pushed symbol.
    pub fn new(cfg: SensingConfig, numerology: OfdmNumerology, rows: usize, start_timestamp: f64) -> Result<Self> {
        cfg.validate()?;
        if rows == 0 {
            return Err(invalid("sensing needs at least one subcarrier"));
        }
        let kept = if cfg.range_bins == 0 { rows } else { cfg.range_bins.min(rows) };
        let mut planner = FftPlanner::new();
        let w = cfg.window;
        let taper = (0..w).map(|j| (PI * (j as f64 + 0.5) / w as f64).sin().powi(2)).collect();
        Ok(Self {
            range_fft: planner.plan_fft_inverse(rows),
            doppler_fft: planner.plan_fft_forward(w * cfg.zero_pad),
            numerology,
            rows,
            kept,
            start_timestamp,
            taper,
            ring: vec![Complex64::new(0.0, 0.0); w * kept],
            scratch: vec![Complex64::new(0.0, 0.0); rows],
            pushed: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &SensingConfig {
        &self.cfg
    }

    pub fn symbols_pushed(&self) -> usize {
        self.pushed
    }

    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.rows as f64 * self.numerology.subcarrier_spacing())
    }

    /// Adds one received symbol `y` with its known transmit values `x`.
    /// Returns a window result when this symbol completes one.
    pub fn push(&mut self, y: &[Complex64], x: &[Complex64]) -> Result<Option<SensingOutput>> {
        if y.len() != self.rows || x.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: y.len().min(x.len()),
            });
        }
        for (i, ((d, &yv), &xv)) in self.scratch.iter_mut().zip(y).zip(x).enumerate() {
            if xv == Complex64::new(0.0, 0.0) {
                return Err(Error::ZeroSymbol {
                    subcarrier: i,
                    symbol: self.pushed,
                });
            }
            *d = yv / xv;
        }
        self.range_fft.process(&mut self.scratch);
        let slot = self.pushed % self.cfg.window;
        let scale = 1.0 / self.rows as f64;
        for (dst, src) in self.ring[slot * self.kept..(slot + 1) * self.kept].iter_mut().zip(&self.scratch) {
            *dst = src * scale;
        }
        self.pushed += 1;
        let w = self.cfg.window;
        if self.pushed >= w && (self.pushed - w) % self.cfg.hop == 0 {
            self.process_window(self.pushed - w).map(Some)
        } else {
            Ok(None)
        }
    }

    fn process_window(&self, start: usize) -> Result<SensingOutput> {
        let w = self.cfg.window;
        let k_len = w * self.cfg.zero_pad;
        let t_sym = self.numerology.symbol_duration();
        let mut power = vec![0.0; self.kept * k_len];
        let mut buf = vec![Complex64::new(0.0, 0.0); k_len];
        let mut any = false;
        for r in 0..self.kept {
            buf.fill(Complex64::new(0.0, 0.0));
            for j in 0..w {
                let v = self.ring[((start + j) % w) * self.kept + r];
                any |= v != Complex64::new(0.0, 0.0);
                buf[j] = v * self.taper[j];
            }
            self.doppler_fft.process(&mut buf);
            for (p, v) in power[r * k_len..(r + 1) * k_len].iter_mut().zip(&buf) {
                *p = v.norm_sqr();
            }
        }
        if !any {
            return Err(invalid(format!("all-zero sensing window at symbol {start}")));
        }

        let limit = self.cfg.dc_exclusion_bins * self.cfg.zero_pad as f64;
        let allowed = |k: usize| (signed_bin(k, k_len).abs() as f64) >= limit;
        let (row, profile): (usize, Vec<f64>) = match self.cfg.peak_search {
            PeakSearch::Global => {
                let mut best = (0, 0, f64::MIN);
                for r in 0..self.kept {
                    for k in (0..k_len).filter(|&k| allowed(k)) {
                        let p = power[r * k_len + k];
                        if p > best.2 {
                            best = (r, k, p);
                        }
                    }
                }
                (best.0, power[best.0 * k_len..(best.0 + 1) * k_len].to_vec())
            }
            PeakSearch::RangeIntegrated => {
                let mut sum = vec![0.0; k_len];
                for r in 0..self.kept {
                    sum.iter_mut().zip(&power[r * k_len..]).for_each(|(s, p)| *s += p);
                }
                (0, sum)
            }
        };
        let mut floor_cells: Vec<f64> = match self.cfg.peak_search {
            PeakSearch::Global => (0..self.kept)
                .flat_map(|r| (0..k_len).filter(|&k| allowed(k)).map(move |k| (r, k)))
                .map(|(r, k)| power[r * k_len + k])
                .collect(),
            PeakSearch::RangeIntegrated => (0..k_len).filter(|&k| allowed(k)).map(|k| profile[k]).collect(),
        };
        let k = (0..k_len)
            .filter(|&k| allowed(k))
            .max_by(|&a, &b| profile[a].total_cmp(&profile[b]))
            .ok_or_else(|| invalid("DC exclusion covers the whole Doppler axis"))?;
        let mid = floor_cells.len() / 2;
        let floor = if floor_cells.is_empty() {
            0.0
        } else {
            *floor_cells.select_nth_unstable_by(mid, f64::total_cmp).1
        };

        let prev = profile[(k + k_len - 1) % k_len];
        let next = profile[(k + 1) % k_len];
        let peak = profile[k];
        let local_max = peak >= prev && peak >= next;
        let ln = |p: f64| p.max(f64::MIN_POSITIVE).ln();
        let (a, b, c) = (ln(prev), ln(peak), ln(next));
        let denom = a - 2.0 * b + c;
        let delta = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let doppler = (signed_bin(k, k_len) as f64 + delta) / (k_len as f64 * t_sym);
        let peak_snr_db = if floor > 0.0 { 10.0 * (peak / floor).log10() } else { f64::INFINITY };
        let detected = local_max && peak_snr_db >= self.cfg.min_peak_snr_db;
        let velocity = if detected {
            -doppler * SPEED_OF_LIGHT / (2.0 * self.numerology.center_frequency)
        } else {
            0.0
        };

        let estimate = VelocityEstimate {
            timestamp: window_midpoint(self.start_timestamp, start, w, t_sym),
            velocity,
            peak_snr_db,
            detected,
            window_start: start,
            doppler_hz: if detected { doppler } else { 0.0 },
            range_bin: row,
        };
        let map = self.cfg.keep_maps.then(|| RangeDopplerMap {
            values: power,
            range_bins: self.kept,
            doppler_bins: k_len,
            zero_pad: self.cfg.zero_pad,
            range_resolution: self.range_resolution(),
            doppler_resolution: 1.0 / (w as f64 * t_sym),
            window_start: self.start_timestamp + start as f64 * t_sym,
        });
        Ok(SensingOutput { map, estimate })
    }
}

fn window_midpoint(start_timestamp: f64, window_start: usize, window: usize, t_sym: f64) -> f64 {
    start_timestamp + (window_start as f64 + window as f64 / 2.0) * t_sym
}

/// Processes a whole received subband grid. `known` holds the transmit
/// values on the same rows, either per symbol or as a single column reused
/// for every symbol. Timestamps are relative to the first symbol.
pub fn sensing_process(rx: &SymbolGrid, known: &SymbolGrid, cfg: &SensingConfig) -> Result<Vec<SensingOutput>> {
    if known.rows() != rx.rows() {
        return Err(Error::LengthMismatch {
            expected: rx.num_rows(),
            actual: known.num_rows(),
        });
    }
    let broadcast = known.num_symbols() == 1;
    if !broadcast && known.num_symbols() != rx.num_symbols() {
        return Err(Error::LengthMismatch {
            expected: rx.num_symbols(),
            actual: known.num_symbols(),
        });
    }
    if cfg.window > rx.num_symbols() {
        return Err(invalid(format!(
            "window of {} symbols exceeds the {} available",
            cfg.window,
            rx.num_symbols()
        )));
    }
    let mut sensor = SlidingSensor::new(cfg.clone(), rx.numerology, rx.num_rows(), 0.0)?;
    let mut out = Vec::new();
    for m in 0..rx.num_symbols() {
        let x = known.column(if broadcast { 0 } else { m });
        if let Some(o) = sensor.push(rx.column(m), x)? {
            out.push(o);
        }
    }
    Ok(out)
}

/// Time series of the window estimates, stamped at window midpoints relative
/// to `start_timestamp` and ordered in time.
pub fn velocity_track(
    outputs: &[SensingOutput],
    window: usize,
    start_timestamp: f64,
    numerology: &OfdmNumerology,
) -> Vec<VelocityEstimate> {
    let mut track: Vec<VelocityEstimate> = outputs
        .iter()
        .map(|o| VelocityEstimate {
            timestamp: window_midpoint(start_timestamp, o.estimate.window_start, window, numerology.symbol_duration()),
            ..o.estimate
        })
        .collect();
    track.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    track
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CellNoise;
    use crate::waveform::{generate_zc, ZcParams};
    use std::f64::consts::TAU;

    const FC: f64 = 6.8e9;

    struct Target {
        velocity: f64,
        gain: f64,
        delay: f64,
    }

    /// Y = X (leak + echo) + noise on `rows` contiguous subcarriers, with
    /// the echo rotating at the monostatic Doppler of `velocity`.
    fn synthetic(rows: usize, symbols: usize, targets: &[Target], leak: f64, snr_db: f64, seed: u64) -> (SymbolGrid, SymbolGrid) {
        let num = OfdmNumerology::default();
        let first = 65;
        let rows_idx: Vec<usize> = (first..first + rows).collect();
        let x = generate_zc(ZcParams::new(rows, 7).unwrap()).unwrap();
        let t_sym = num.symbol_duration();
        let mut noise = CellNoise::new(seed, 1, rows);
        let sigma = 10f64.powf(-snr_db / 20.0);
        let mut values = Vec::with_capacity(rows * symbols);
        for m in 0..symbols {
            noise.seek(m, 0);
            for (i, &n) in rows_idx.iter().enumerate() {
                let mut h = Complex64::new(leak, 0.0);
                for t in targets {
                    let fd = -2.0 * FC * t.velocity / SPEED_OF_LIGHT;
                    h += t.gain
                        * Complex64::cis(TAU * fd * m as f64 * t_sym)
                        * Complex64::cis(-TAU * num.subcarrier_offset(n) * t.delay);
                }
                values.push(x[i] * h + noise.next_unit() * sigma);
            }
        }
        let y = SymbolGrid::from_columns(num, rows_idx.clone(), values).unwrap();
        let known = SymbolGrid::from_columns(num, rows_idx, x).unwrap();
        (y, known)
    }

    fn one_window() -> SensingConfig {
        SensingConfig {
            hop: 1216,
            ..SensingConfig::default()
        }
    }

    fn mover(v: f64) -> Target {
        Target {
            velocity: v,
            gain: 1.0,
            delay: 30e-9,
        }
    }

    #[test]
    fn static_scene_reports_no_mover() {
        let (y, x) = synthetic(128, 1216 * 2, &[], 1.0, 30.0, 1);
        let out = sensing_process(&y, &x, &one_window()).unwrap();
        assert_eq!(out.len(), 2);
        for o in out {
            assert!(!o.estimate.detected);
            assert_eq!(o.estimate.velocity, 0.0);
        }
    }

    #[test]
    fn one_metre_per_second_within_half_a_bin() {
        let (y, x) = synthetic(598, 1216, &[mover(1.0)], 0.1, 30.0, 2);
        let out = sensing_process(&y, &x, &one_window()).unwrap();
        let e = out[0].estimate;
        assert!(e.detected);
        assert!((e.velocity - 1.0).abs() <= 0.072, "{}", e.velocity);
        assert!(e.peak_snr_db > 30.0);
    }

    #[test]
    fn map_resolutions() {
        let (y, x) = synthetic(598, 1216, &[mover(-0.7)], 0.0, 30.0, 3);
        let cfg = SensingConfig {
            keep_maps: true,
            ..one_window()
        };
        let out = sensing_process(&y, &x, &cfg).unwrap();
        let map = out[0].map.as_ref().unwrap();
        assert!((map.doppler_resolution - 6.4247).abs() < 1e-3);
        let velocity_bin = map.doppler_resolution * SPEED_OF_LIGHT / (2.0 * FC);
        assert!((velocity_bin - 0.1417).abs() < 1e-3);
        assert!((map.range_resolution - SPEED_OF_LIGHT / (2.0 * 598.0 * 9765.625)).abs() < 1e-9);
        assert_eq!(map.doppler_bins, 4864);
        assert_eq!(map.range_bins, 8);
        assert!((map.doppler_frequency(4) - map.doppler_resolution).abs() < 1e-12);
        assert!((map.doppler_frequency(4863) + map.doppler_resolution / 4.0).abs() < 1e-12);
    }

    #[test]
    fn range_gate_matches_full_map() {
        let (y, x) = synthetic(96, 1216, &[mover(0.8)], 0.3, 20.0, 4);
        let gated = SensingConfig {
            keep_maps: true,
            ..one_window()
        };
        let full = SensingConfig {
            range_bins: 0,
            ..gated.clone()
        };
        let g = sensing_process(&y, &x, &gated).unwrap();
        let f = sensing_process(&y, &x, &full).unwrap();
        let (gm, fm) = (g[0].map.as_ref().unwrap(), f[0].map.as_ref().unwrap());
        assert_eq!(fm.range_bins, 96);
        assert_eq!(&fm.values[..gm.values.len()], &gm.values[..]);
        assert_eq!(g[0].estimate.velocity, f[0].estimate.velocity);
    }

    #[test]
    fn range_integrated_variant_agrees_on_a_single_target() {
        let (y, x) = synthetic(128, 1216, &[mover(1.3)], 0.1, 30.0, 5);
        let cfg = SensingConfig {
            peak_search: PeakSearch::RangeIntegrated,
            ..one_window()
        };
        let e = sensing_process(&y, &x, &cfg).unwrap()[0].estimate;
        assert!((e.velocity - 1.3).abs() < 0.072);
    }

    #[test]
    fn unbiased_over_random_targets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let num = OfdmNumerology::default();
        let vmax = unambiguous_velocity(&num);
        let bin = SPEED_OF_LIGHT / (2.0 * FC * 1216.0 * num.symbol_duration());
        let cfg = SensingConfig {
            range_bins: 2,
            ..one_window()
        };
        let mut total = 0.0;
        for i in 0..100 {
            // keep clear of the excluded ridge and of the aliasing edge
            let mag = rng.gen_range(2.0 * bin..vmax - 2.0 * bin);
            let v = if rng.gen_bool(0.5) { mag } else { -mag };
            let (y, x) = synthetic(16, 1216, &[mover(v)], 0.05, 30.0, 100 + i);
            let e = sensing_process(&y, &x, &cfg).unwrap()[0].estimate;
            total += (e.velocity - v).abs();
        }
        assert!(total / 100.0 < 0.5 * bin, "mean error {}", total / 100.0);
    }

    #[test]
    fn velocity_wraps_past_the_unambiguous_limit() {
        let num = OfdmNumerology::default();
        let vmax = unambiguous_velocity(&num);
        assert!((vmax - 86.1).abs() < 0.1);
        let delta = 3.0;
        let (y, x) = synthetic(16, 1216, &[mover(vmax + delta)], 0.0, 30.0, 6);
        let e = sensing_process(&y, &x, &one_window()).unwrap()[0].estimate;
        assert!((e.velocity - (-vmax + delta)).abs() < 0.072, "{}", e.velocity);
        assert!(e.velocity.abs() <= vmax);
    }

    #[test]
    fn track_timestamps() {
        let num = OfdmNumerology::default();
        let (y, x) = synthetic(16, 1216 * 3, &[mover(1.0)], 0.0, 30.0, 7);
        let out = sensing_process(&y, &x, &one_window()).unwrap();
        let track = velocity_track(&out, 1216, 10.0, &num);
        assert_eq!(track.len(), 3);
        assert!((track[0].timestamp - (10.0 + 608.0 * 128e-6)).abs() < 1e-12);
        assert!((track[0].timestamp - 10.0778).abs() < 1e-4);
        for w in track.windows(2) {
            assert!((w[1].timestamp - w[0].timestamp - 1216.0 * 128e-6).abs() < 1e-12);
        }
        assert!(velocity_track(&[], 1216, 0.0, &num).is_empty());
    }

    #[test]
    fn hop_controls_window_count() {
        let (y, x) = synthetic(16, 1216 + 304 * 3 + 10, &[mover(1.0)], 0.0, 30.0, 8);
        let out = sensing_process(&y, &x, &SensingConfig::default()).unwrap();
        assert_eq!(out.len(), 4);
        let starts: Vec<usize> = out.iter().map(|o| o.estimate.window_start).collect();
        assert_eq!(starts, vec![0, 304, 608, 912]);
    }

    #[test]
    fn errors() {
        let (y, x) = synthetic(16, 100, &[], 1.0, 30.0, 9);
        assert!(sensing_process(&y, &x, &SensingConfig::default()).is_err());
        let zero = SymbolGrid::from_columns(y.numerology, y.rows().to_vec(), vec![Complex64::new(0.0, 0.0); 16 * 1216]).unwrap();
        let (_, x) = synthetic(16, 1, &[], 1.0, 30.0, 9);
        assert!(sensing_process(&zero, &x, &one_window()).is_err());
        let bad = SensingConfig {
            window: 1,
            ..SensingConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
