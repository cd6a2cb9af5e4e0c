use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::IqBuffer;
use crate::error::{invalid, Error, Result};

/// Two-sided power spectral density, frequency axis relative to the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub frequency_offsets: Vec<f64>,
    pub power_db: Vec<f64>,
}

impl Psd {
    /// Mean linear power over `lo..=hi` Hz, returned in dB.
    pub fn band_mean_db(&self, lo: f64, hi: f64) -> f64 {
        let (sum, count) = self
            .frequency_offsets
            .iter()
            .zip(&self.power_db)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + 10f64.powf(p / 10.0), c + 1));
        if count == 0 {
            return f64::NEG_INFINITY;
        }
        10.0 * (sum / count as f64).log10()
    }

    /// Contiguous frequency runs within `below_peak_db` of the maximum.
    /// Runs closer than `min_gap` bins are merged.
    pub fn occupied_bands(&self, below_peak_db: f64, min_gap: usize) -> Vec<(f64, f64)> {
        let peak = self.power_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut bands: Vec<(usize, usize)> = Vec::new();
        for (i, p) in self.power_db.iter().enumerate() {
            if *p < peak - below_peak_db {
                continue;
            }
            match bands.last_mut() {
                Some((_, end)) if i - *end <= min_gap => *end = i,
                _ => bands.push((i, i)),
            }
        }
        bands
            .into_iter()
            .map(|(a, b)| (self.frequency_offsets[a], self.frequency_offsets[b]))
            .collect()
    }

    pub fn peak_offset(&self) -> f64 {
        let (i, _) = self
            .power_db
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        self.frequency_offsets[i]
    }
}

/// Welch estimate: Hann segments of `segment_length`, 50 % overlap, averaged
/// periodograms scaled to power per Hz.
pub fn psd(buffer: &IqBuffer, segment_length: usize) -> Result<Psd> {
    if buffer.is_empty() {
        return Err(invalid("PSD of an empty buffer"));
    }
    if segment_length < 2 || segment_length > buffer.len() {
        return Err(invalid(format!(
            "segment length {segment_length} must be in 2..={}",
            buffer.len()
        )));
    }
    let fs = buffer.numerology.sample_rate;
    let window: Vec<f64> = (0..segment_length)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_length as f64).cos())
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_length);
    let hop = (segment_length / 2).max(1);

    let mut acc = vec![0.0; segment_length];
    let mut segments = 0usize;
    let mut scratch = vec![Complex64::new(0.0, 0.0); segment_length];
    let mut start = 0;
    while start + segment_length <= buffer.len() {
        for ((s, x), w) in scratch.iter_mut().zip(&buffer.samples[start..]).zip(&window) {
            *s = x * w;
        }
        fft.process(&mut scratch);
        for (a, s) in acc.iter_mut().zip(&scratch) {
            *a += s.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (segments as f64 * fs * window_energy);
    let half = segment_length / 2;
    let mut frequency_offsets = Vec::with_capacity(segment_length);
    let mut power_db = Vec::with_capacity(segment_length);
    for i in 0..segment_length {
        // fftshift: negative frequencies first
        let k = (i + segment_length - half) % segment_length;
        let signed = if k >= segment_length - half { k as f64 - segment_length as f64 } else { k as f64 };
        frequency_offsets.push(signed * fs / segment_length as f64);
        power_db.push(10.0 * (acc[k] * scale).max(1e-30).log10());
    }
    Ok(Psd {
        frequency_offsets,
        power_db,
    })
}

fn papr_of(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("PAPR of an empty buffer"));
    }
    let (peak, sum) = samples
        .iter()
        .map(|s| s.norm_sqr())
        .fold((0.0f64, 0.0), |(p, s), v| (p.max(v), s + v));
    if sum == 0.0 {
        return Err(Error::InvalidParameter("PAPR undefined for an all-zero signal".into()));
    }
    Ok(10.0 * (peak / (sum / samples.len() as f64)).log10())
}

/// Peak-to-average power ratio in dB, for the whole buffer or per OFDM symbol
/// (CP included).
pub fn papr(buffer: &IqBuffer, per_symbol: bool) -> Result<Vec<f64>> {
    if !per_symbol {
        return Ok(vec![papr_of(&buffer.samples)?]);
    }
    let p = buffer.numerology.symbol_samples();
    if buffer.samples.len() < p {
        return Err(invalid("buffer shorter than one OFDM symbol"));
    }
    buffer.samples.chunks_exact(p).map(papr_of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::*;

    #[test]
    fn dc_tone_peaks_at_zero_offset() {
        let n = OfdmNumerology::default();
        let mut g = SymbolGrid::zeros(n, 4);
        for m in 0..4 {
            g.column_mut(m)[n.dc_bin() - 1] = Complex64::new(1.0, 0.0);
        }
        let p = psd(&modulate(&g), 2048).unwrap();
        assert_eq!(p.peak_offset(), 0.0);
        assert_eq!(p.frequency_offsets.len(), 2048);
        assert_eq!(p.frequency_offsets[1024], 0.0);
        assert_eq!(p.frequency_offsets[0], -10e6);
    }

    #[test]
    fn psd_errors() {
        let n = OfdmNumerology::default();
        assert!(psd(&IqBuffer::new(n, vec![], 0.0), 16).is_err());
        assert!(psd(&IqBuffer::new(n, vec![Complex64::new(1.0, 0.0); 8], 0.0), 16).is_err());
    }

    #[test]
    fn constant_envelope_is_zero_db() {
        let n = OfdmNumerology::default();
        let s = (0..1000).map(|i| Complex64::from_polar(2.0, i as f64 * 0.1)).collect();
        let v = papr(&IqBuffer::new(n, s, 0.0), false).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn papr_errors_and_lower_bound() {
        let n = OfdmNumerology::default();
        assert!(papr(&IqBuffer::new(n, vec![Complex64::new(0.0, 0.0); 10], 0.0), false).is_err());
        assert!(papr(&IqBuffer::new(n, vec![], 0.0), false).is_err());
        let s: Vec<_> = (0..5000).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos() * 0.2)).collect();
        let per = papr(&IqBuffer::new(n, s, 0.0), true).unwrap();
        assert_eq!(per.len(), 1);
        assert!(per.iter().all(|v| *v >= 0.0));
    }
}
