//! Transmit side: numerology, SBFD subcarrier allocation, ZC and QPSK
//! payloads, grid assembly, OFDM modulation, IQ files and spectral checks.

mod allocation;
mod grid;
mod iq;
mod numerology;
mod ofdm;
mod qpsk;
mod source;
mod spectrum;
mod zc;

pub use allocation::{build_allocation, build_full_band_allocation, NodeId, PayloadKind, SubbandAllocation};
pub use grid::{assemble_grid, SymbolGrid};
pub use iq::{deserialize_iq, read_cf32, serialize_iq, write_cf32, IqBuffer, IqMetadata};
pub use numerology::OfdmNumerology;
pub use ofdm::{modulate, OfdmEngine};
pub use qpsk::{demap_qpsk, map_qpsk, QPSK_POINTS};
pub use source::{PayloadSource, Transmitter};
pub use spectrum::{papr, psd, Psd};
pub use zc::{generate_zc, ZcParams};
