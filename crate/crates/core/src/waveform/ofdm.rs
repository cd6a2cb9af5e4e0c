use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{IqBuffer, OfdmNumerology, SymbolGrid};

/// Planned unitary FFT pair for one numerology.
///
/// Transmit: `x[t] = N^{-1/2} sum_n X[n] exp(j 2 pi (n - n0) t / N)`, CP is the
/// last `cp_samples` of the useful part. Receive is the exact inverse.
#[derive(Clone)]
pub struct OfdmEngine {
    numerology: OfdmNumerology,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl OfdmEngine {
    pub fn new(numerology: OfdmNumerology) -> Self {
        let mut planner = FftPlanner::new();
        let n = numerology.fft_size;
        Self {
            numerology,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn numerology(&self) -> &OfdmNumerology {
        &self.numerology
    }

    /// Writes one CP-prefixed time-domain symbol into `out` (length N + cp).
    /// `rows` gives the subcarrier of each entry of `column`.
    pub fn modulate_symbol(&self, rows: &[usize], column: &[Complex64], out: &mut [Complex64]) {
        let n = self.numerology.fft_size;
        let cp = self.numerology.cp_samples;
        debug_assert_eq!(out.len(), n + cp);
        let (prefix, body) = out.split_at_mut(cp);
        body.fill(Complex64::new(0.0, 0.0));
        for (&sc, &v) in rows.iter().zip(column) {
            body[self.numerology.fft_index(sc)] = v;
        }
        self.inverse.process(body);
        body.iter_mut().for_each(|v| *v *= self.scale);
        prefix.copy_from_slice(&body[n - cp..]);
    }

    /// Forward transform of one useful part (N samples, CP already removed),
    /// in place. Output stays in FFT order.
    pub fn forward_in_place(&self, body: &mut [Complex64]) {
        self.forward.process(body);
        body.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse_in_place(&self, body: &mut [Complex64]) {
        self.inverse.process(body);
        body.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// Demodulates the symbol starting at `symbol` (CP included) into a full
    /// column ordered by subcarrier.
    pub fn demodulate_symbol(&self, symbol: &[Complex64], column: &mut [Complex64]) {
        let n = self.numerology.fft_size;
        let cp = self.numerology.cp_samples;
        let mut body = symbol[cp..cp + n].to_vec();
        self.forward_in_place(&mut body);
        for (k, v) in body.into_iter().enumerate() {
            column[self.numerology.subcarrier_of_fft_index(k) - 1] = v;
        }
    }
}

/// OFDM modulation of every column of `grid` (IFFT, 1/sqrt(N), CP insertion).
pub fn modulate(grid: &SymbolGrid) -> IqBuffer {
    let engine = OfdmEngine::new(grid.numerology);
    let p = grid.numerology.symbol_samples();
    let mut samples = vec![Complex64::new(0.0, 0.0); p * grid.num_symbols()];
    for (m, out) in samples.chunks_exact_mut(p).enumerate() {
        engine.modulate_symbol(grid.rows(), grid.column(m), out);
    }
    IqBuffer::new(grid.numerology, samples, 0.0)
}
