use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OfdmNumerology;
use crate::error::{Error, Result};

/// Time-domain complex baseband samples at the numerology's sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub numerology: OfdmNumerology,
    pub samples: Vec<Complex64>,
    /// Seconds on the testbed clock.
    pub start_timestamp: f64,
}

impl IqBuffer {
    pub fn new(numerology: OfdmNumerology, samples: Vec<Complex64>, start_timestamp: f64) -> Self {
        Self {
            numerology,
            samples,
            start_timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whole OFDM symbols contained in the buffer.
    pub fn num_symbols(&self) -> usize {
        self.samples.len() / self.numerology.symbol_samples()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Interleaved little-endian f32 (I then Q). Samples are narrowed to f32.
pub fn serialize_iq(buffer: &IqBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(buffer.samples.len() * 8);
    for s in &buffer.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn deserialize_iq(bytes: &[u8], numerology: OfdmNumerology) -> Result<IqBuffer> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Malformed(format!(
            "cf32 stream of {} bytes is not a whole number of complex samples",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(IqBuffer::new(numerology, samples, 0.0))
}

/// Sidecar describing a `.cf32` capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqMetadata {
    pub sample_rate: f64,
    pub center_frequency: f64,
    pub start_timestamp: f64,
    pub fft_size: usize,
    pub cp_samples: usize,
    pub format: String,
}

impl IqMetadata {
    fn of(buffer: &IqBuffer) -> Self {
        Self {
            sample_rate: buffer.numerology.sample_rate,
            center_frequency: buffer.numerology.center_frequency,
            start_timestamp: buffer.start_timestamp,
            fft_size: buffer.numerology.fft_size,
            cp_samples: buffer.numerology.cp_samples,
            format: "cf32_le".into(),
        }
    }

    /// `capture.cf32` -> `capture.cf32.toml`.
    pub fn sidecar_path(data: &Path) -> PathBuf {
        let mut name = data.as_os_str().to_owned();
        name.push(".toml");
        PathBuf::from(name)
    }
}

/// Writes the samples and the metadata sidecar. Returns the sidecar path.
pub fn write_cf32(path: &Path, buffer: &IqBuffer) -> Result<PathBuf> {
    fs::write(path, serialize_iq(buffer))?;
    let meta = IqMetadata::sidecar_path(path);
    fs::write(&meta, toml::to_string(&IqMetadata::of(buffer))?)?;
    Ok(meta)
}

/// Reads a capture; without a sidecar the default numerology is assumed.
pub fn read_cf32(path: &Path) -> Result<IqBuffer> {
    let bytes = fs::read(path)?;
    let meta_path = IqMetadata::sidecar_path(path);
    let (numerology, start) = if meta_path.exists() {
        let meta: IqMetadata = toml::from_str(&fs::read_to_string(&meta_path)?)?;
        let n = OfdmNumerology::new(meta.fft_size, meta.sample_rate, meta.center_frequency, meta.cp_samples)?;
        (n, meta.start_timestamp)
    } else {
        log::warn!("no sidecar next to {}, assuming default numerology", path.display());
        (OfdmNumerology::default(), 0.0)
    };
    let mut buf = deserialize_iq(&bytes, numerology)?;
    buf.start_timestamp = start;
    Ok(buf)
}
