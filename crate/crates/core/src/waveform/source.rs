use num_complex::Complex64;

use super::{assemble_grid, generate_zc, map_qpsk, OfdmNumerology, SubbandAllocation, SymbolGrid, ZcParams};
use crate::error::{Error, Result};
use crate::rng::SymbolBits;

/// What a node puts on its data subcarriers.
#[derive(Clone)]
pub enum PayloadSource {
    /// Same ZC sequence in every symbol.
    Zc { root: usize, sequence: Vec<Complex64> },
    /// Fresh QPSK bits per symbol, addressable by symbol index.
    Qpsk(SymbolBits),
}

/// One node's transmit signal generator: allocation plus payload.
#[derive(Clone)]
pub struct Transmitter {
    pub allocation: SubbandAllocation,
    pub payload: PayloadSource,
}

impl Transmitter {
    /// ZC payload of length |data| with the given root.
    pub fn sensing(allocation: SubbandAllocation, root: usize) -> Result<Self> {
        let sequence = generate_zc(ZcParams::new(allocation.data.len(), root)?)?;
        Ok(Self {
            allocation,
            payload: PayloadSource::Zc { root, sequence },
        })
    }

    pub fn comm(allocation: SubbandAllocation, seed: u64, stream: u64) -> Self {
        let bits = SymbolBits::new(seed, stream, 2 * allocation.data.len());
        Self {
            allocation,
            payload: PayloadSource::Qpsk(bits),
        }
    }

    pub fn is_symbol_invariant(&self) -> bool {
        matches!(self.payload, PayloadSource::Zc { .. })
    }

    /// Transmitted bits of symbol `m` (empty for sensing payloads).
    pub fn bits(&mut self, m: usize) -> Vec<u8> {
        match &mut self.payload {
            PayloadSource::Zc { .. } => Vec::new(),
            PayloadSource::Qpsk(src) => src.symbol(m),
        }
    }

    /// Data-bin values of symbol `m`, ascending subcarrier order.
    pub fn data_symbols(&mut self, m: usize) -> Vec<Complex64> {
        match &mut self.payload {
            PayloadSource::Zc { sequence, .. } => sequence.clone(),
            PayloadSource::Qpsk(src) => map_qpsk(&src.symbol(m)).expect("even bit count"),
        }
    }

    /// Values on the active bins of symbol `m`, in `allocation.active` order.
    pub fn active_column(&mut self, m: usize, out: &mut [Complex64]) {
        let first = self.allocation.first();
        let data = self.data_symbols(m);
        for &p in &self.allocation.pilots {
            out[p - first] = Complex64::new(1.0, 0.0);
        }
        for (&d, v) in self.allocation.data.iter().zip(data) {
            out[d - first] = v;
        }
    }

    /// Full-band transmit grid for symbols `start..start + len`.
    pub fn grid(&mut self, numerology: OfdmNumerology, start: usize, len: usize) -> Result<SymbolGrid> {
        if numerology.fft_size != self.allocation.fft_size {
            return Err(Error::NumerologyMismatch);
        }
        let payload: Vec<Complex64> = match &self.payload {
            PayloadSource::Zc { sequence, .. } => sequence.clone(),
            PayloadSource::Qpsk(_) => (start..start + len).flat_map(|m| self.data_symbols(m)).collect(),
        };
        assemble_grid(&self.allocation, numerology, &payload, len)
    }

    /// Active-bin grid (rows = `allocation.active`) for symbols
    /// `start..start + len`.
    pub fn subband_grid(&mut self, numerology: OfdmNumerology, start: usize, len: usize) -> Result<SymbolGrid> {
        let width = self.allocation.active.len();
        let mut values = vec![Complex64::new(0.0, 0.0); width * len];
        for (i, col) in values.chunks_exact_mut(width).enumerate() {
            self.active_column(start + i, col);
        }
        SymbolGrid::from_columns(numerology, self.allocation.active.clone(), values)
    }
}
