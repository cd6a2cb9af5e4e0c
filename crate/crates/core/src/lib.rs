//! Sub-band full-duplex (SBFD) OFDM sensing and communication simulator.
//!
//! Three distributed transceiver nodes share one OFDM band through disjoint
//! subbands. Two nodes transmit Zadoff-Chu sensing symbols, the third carries
//! QPSK data. Every node captures the full band, estimates the Doppler of a
//! moving point target from its own echo, and the communication subband is
//! decoded for bit error rate. Ground-truth trajectories stand in for a motion
//! capture system so the velocity tracks can be scored.
//!
//! Module map:
//!
//! - [`waveform`]: numerology, subcarrier allocation, payloads, OFDM modulation,
//!   IQ files, PSD and PAPR.
//! - [`channel`]: scenario description, point-target geometry, propagation and
//!   AWGN.
//! - [`receiver`]: demodulation, channel estimation, range-Doppler sensing and
//!   QPSK decoding.
//! - [`groundtruth`]: trajectories, timeline alignment and radial velocity
//!   references.
//! - [`metrics`]: RMSE, resolution figures and cross-mode summaries.
//! - [`pipeline`]: end-to-end batch runs and the report files they produce.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod groundtruth;
pub mod metrics;
pub mod pipeline;
pub mod receiver;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
