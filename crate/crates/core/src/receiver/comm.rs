use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::estimate::interpolation_plan;
use crate::error::{invalid, Error, Result};
use crate::waveform::{demap_qpsk, PayloadKind, SubbandAllocation, SymbolGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommConfig {
    /// Pilot estimates are averaged over this many symbols (odd, centered).
    pub pilot_smoothing: usize,
    /// Data bins whose estimated |H| falls below this are erased.
    pub erasure_floor: f64,
    /// Equalized symbols kept for constellation export.
    pub constellation_points: usize,
}

impl Default for CommConfig {
    fn default() -> Self {
        Self {
            pilot_smoothing: 31,
            erasure_floor: 1e-6,
            constellation_points: 4096,
        }
    }
}

impl CommConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pilot_smoothing == 0 || self.pilot_smoothing % 2 == 0 {
            return Err(invalid("pilot smoothing must be a positive odd count"));
        }
        if !(self.erasure_floor >= 0.0) {
            return Err(invalid("erasure floor must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommResult {
    /// Hard decisions, two per data bin per symbol; erased bins decode as 0.
    pub bits: Vec<u8>,
    /// First equalized data symbols, up to the configured limit.
    pub constellation: Vec<Complex64>,
    /// Bits on non-erased bins.
    pub bits_compared: u64,
    pub errors: u64,
    /// Erased data bins.
    pub erasures: u64,
}

impl CommResult {
    pub fn ber(&self) -> f64 {
        if self.bits_compared == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits_compared as f64
        }
    }

    /// Folds a later chunk into this one. Decoded bits are appended only if
    /// `keep_bits`; the constellation is topped up to `limit`.
    pub fn absorb(&mut self, other: CommResult, keep_bits: bool, limit: usize) {
        if keep_bits {
            self.bits.extend(other.bits);
        }
        let room = limit.saturating_sub(self.constellation.len());
        self.constellation.extend(other.constellation.into_iter().take(room));
        self.bits_compared += other.bits_compared;
        self.errors += other.errors;
        self.erasures += other.erasures;
    }
}

/// Pilot-aided zero-forcing QPSK decoding of a whole subband grid.
///
/// `tx_bits` are the transmitted bits of every symbol, concatenated.
pub fn comm_process(
    rx: &SymbolGrid,
    allocation: &SubbandAllocation,
    tx_bits: &[u8],
    cfg: &CommConfig,
) -> Result<CommResult> {
    let m = rx.num_symbols();
    comm_process_chunk(rx, 0, m, 0..m, allocation, tx_bits, cfg)
}

/// Decodes symbols `core` of a longer transmission of `total_symbols`.
///
/// `rx` holds symbols `first_symbol..first_symbol + rx.num_symbols()`, which
/// must include half the pilot smoothing span either side of `core` (clipped
/// at the transmission ends) so results match whole-grid processing.
/// `tx_bits` covers exactly the `core` symbols.
pub fn comm_process_chunk(
    rx: &SymbolGrid,
    first_symbol: usize,
    total_symbols: usize,
    core: Range<usize>,
    allocation: &SubbandAllocation,
    tx_bits: &[u8],
    cfg: &CommConfig,
) -> Result<CommResult> {
    cfg.validate()?;
    if allocation.payload_kind != PayloadKind::CommQpsk {
        return Err(invalid(format!("{} does not carry QPSK", allocation.node)));
    }
    if rx.rows() != allocation.active.as_slice() {
        return Err(Error::LengthMismatch {
            expected: allocation.active.len(),
            actual: rx.num_rows(),
        });
    }
    let half = cfg.pilot_smoothing / 2;
    let have = first_symbol..first_symbol + rx.num_symbols();
    let need = core.start.saturating_sub(half)..(core.end + half).min(total_symbols);
    if core.end > total_symbols || need.start < have.start || need.end > have.end {
        return Err(invalid(format!(
            "chunk {have:?} does not cover symbols {need:?} needed for {core:?}"
        )));
    }
    let per_symbol = 2 * allocation.data.len();
    let expected = core.len() * per_symbol;
    if tx_bits.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: tx_bits.len(),
        });
    }

    let first = allocation.first();
    let pilot_rows: Vec<usize> = allocation.pilots.iter().map(|&p| p - first).collect();
    let plan = interpolation_plan(allocation);
    let data_rows: Vec<usize> = allocation.data.iter().map(|&d| d - first).collect();

    let np = pilot_rows.len();
    let mut result = CommResult {
        bits: Vec::with_capacity(expected),
        ..CommResult::default()
    };
    let mut pilots = vec![Complex64::new(0.0, 0.0); np];
    let mut h_active = vec![Complex64::new(0.0, 0.0); allocation.active.len()];
    for (ci, m) in core.clone().enumerate() {
        let lo = m.saturating_sub(half) - first_symbol;
        let hi = (m + half).min(total_symbols - 1) - first_symbol + 1;
        // summed in absolute symbol order so any chunking gives identical sums
        pilots.fill(Complex64::new(0.0, 0.0));
        for j in lo..hi {
            let col = rx.column(j);
            for (p, &r) in pilots.iter_mut().zip(&pilot_rows) {
                *p += col[r];
            }
        }
        let count = (hi - lo) as f64;
        pilots.iter_mut().for_each(|p| *p /= count);
        for (h, &(l, r, w)) in h_active.iter_mut().zip(&plan) {
            *h = pilots[l] * (1.0 - w) + pilots[r] * w;
        }
        let col = rx.column(m - first_symbol);
        let truth = &tx_bits[ci * per_symbol..(ci + 1) * per_symbol];
        for (di, &row) in data_rows.iter().enumerate() {
            let h = h_active[row];
            if h.norm() < cfg.erasure_floor {
                result.erasures += 1;
                result.bits.extend_from_slice(&[0, 0]);
                continue;
            }
            let z = col[row] / h;
            if result.constellation.len() < cfg.constellation_points {
                result.constellation.push(z);
            }
            let b = demap_qpsk(z);
            result.errors += (b[0] != truth[2 * di]) as u64 + (b[1] != truth[2 * di + 1]) as u64;
            result.bits_compared += 2;
            result.bits.extend_from_slice(&b);
        }
    }
    Ok(result)
}
