use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::waveform::IqBuffer;

/// Adds circularly-symmetric complex Gaussian noise with variance
/// `mean_power / 10^(snr_db / 10)`. `snr_db = +inf` returns the input.
pub fn add_noise(buffer: &IqBuffer, snr_db: f64, seed: u64) -> Result<IqBuffer> {
    if snr_db == f64::INFINITY {
        return Ok(buffer.clone());
    }
    if !snr_db.is_finite() {
        return Err(invalid("SNR must be finite or +inf"));
    }
    let power = buffer.mean_power();
    if !(power > 0.0) {
        return Err(invalid("signal power is zero, SNR undefined"));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = buffer
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(IqBuffer::new(buffer.numerology, samples, buffer.start_timestamp))
}
