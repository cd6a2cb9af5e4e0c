//! Receive chain: OFDM demodulation, subband extraction, channel estimation,
//! range-Doppler velocity estimation and QPSK decoding.

mod comm;
mod demod;
mod estimate;
mod sensing;

pub use comm::{comm_process, comm_process_chunk, CommConfig, CommResult};
pub use demod::{coarse_timing, extract_subband, ofdm_demodulate};
pub use estimate::{estimate_channel, ChannelEstimate};
pub use sensing::{
    sensing_process, unambiguous_velocity, velocity_track, PeakSearch, RangeDopplerMap, SensingConfig, SensingOutput,
    SlidingSensor, VelocityEstimate,
};
