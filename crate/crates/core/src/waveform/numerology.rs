use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// OFDM timing and frequency parameters shared by every node.
///
/// Subcarriers are addressed 1-based. Bin `dc_bin() = N/2 + 1` sits at the
/// carrier, bins above it are positive baseband frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    pub fft_size: usize,
    pub sample_rate: f64,
    pub center_frequency: f64,
    pub cp_samples: usize,
}

impl Default for OfdmNumerology {
    /// 2048 subcarriers at 20 MS/s on 6.8 GHz, 512-sample CP (128 us symbols).
    fn default() -> Self {
        Self {
            fft_size: 2048,
            sample_rate: 20e6,
            center_frequency: 6.8e9,
            cp_samples: 512,
        }
    }
}

impl OfdmNumerology {
    pub fn new(fft_size: usize, sample_rate: f64, center_frequency: f64, cp_samples: usize) -> Result<Self> {
        let n = Self {
            fft_size,
            sample_rate,
            center_frequency,
            cp_samples,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || self.fft_size % 2 != 0 {
            return Err(invalid(format!("fft_size must be even and >= 2, got {}", self.fft_size)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(invalid("sample_rate must be positive"));
        }
        if !(self.center_frequency > 0.0 && self.center_frequency.is_finite()) {
            return Err(invalid("center_frequency must be positive"));
        }
        if self.cp_samples > self.fft_size {
            return Err(invalid("cp_samples may not exceed fft_size"));
        }
        Ok(())
    }

    pub fn with_center_frequency(mut self, center_frequency: f64) -> Self {
        self.center_frequency = center_frequency;
        self
    }

    /// 1-based index of the zero-frequency subcarrier.
    pub fn dc_bin(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    pub fn useful_duration(&self) -> f64 {
        self.fft_size as f64 / self.sample_rate
    }

    pub fn cp_duration(&self) -> f64 {
        self.cp_samples as f64 / self.sample_rate
    }

    pub fn symbol_samples(&self) -> usize {
        self.fft_size + self.cp_samples
    }

    /// Useful part plus cyclic prefix, in seconds.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_samples() as f64 / self.sample_rate
    }

    /// Baseband frequency of 1-based subcarrier `n`.
    pub fn subcarrier_offset(&self, n: usize) -> f64 {
        (n as f64 - self.dc_bin() as f64) * self.subcarrier_spacing()
    }

    /// FFT buffer index holding 1-based subcarrier `n`.
    pub fn fft_index(&self, n: usize) -> usize {
        debug_assert!(n >= 1 && n <= self.fft_size);
        (n + self.fft_size - self.dc_bin()) % self.fft_size
    }

    /// Inverse of [`OfdmNumerology::fft_index`].
    pub fn subcarrier_of_fft_index(&self, k: usize) -> usize {
        (k + self.dc_bin() - 1) % self.fft_size + 1
    }

    /// Symbols that fit in `duration` seconds.
    pub fn symbols_in(&self, duration: f64) -> usize {
        (duration * self.sample_rate / self.symbol_samples() as f64 + 1e-9).floor() as usize
    }

    pub fn same_sampling(&self, other: &OfdmNumerology) -> bool {
        self.fft_size == other.fft_size && self.cp_samples == other.cp_samples && self.sample_rate == other.sample_rate
    }
}
