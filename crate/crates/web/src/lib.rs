//! Browser bindings: received spectrum per mode, a single-window Doppler
//! estimate and QPSK decoding at a chosen Es/N0.
//!
//! The plain functions are what the tests exercise; the `#[wasm_bindgen]`
//! wrappers only convert errors and flatten results for JavaScript.

use num_complex::Complex64;
use wasm_bindgen::prelude::*;

use sbfd_isac::channel::{add_noise, propagate, transmitters, Mode, Scenario, ScenarioFile};
use sbfd_isac::error::Result;
use sbfd_isac::geometry::Vec3;
use sbfd_isac::groundtruth::TrackKind;
use sbfd_isac::metrics::velocity_resolution;
use sbfd_isac::pipeline::simulate_node;
use sbfd_isac::receiver::{comm_process, CommConfig};
use sbfd_isac::rng::CellNoise;
use sbfd_isac::waveform::{build_allocation, modulate, psd, NodeId, OfdmNumerology, SymbolGrid, Transmitter};

const WALK: &str = include_str!("../../core/scenarios/indoor_sbfd.toml");

fn walk() -> Result<ScenarioFile> {
    ScenarioFile::from_toml(WALK)
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    power_db: Vec<f64>,
}

#[wasm_bindgen]
impl Spectrum {
    /// Offsets from the carrier, Hz.
    pub fn frequencies(&self) -> Vec<f64> {
        self.frequencies.clone()
    }

    pub fn power_db(&self) -> Vec<f64> {
        self.power_db.clone()
    }
}

/// Welch PSD at `rx` over the first `symbols` symbols of the walk scenario.
pub fn received_spectrum(mode: Mode, rx: NodeId, symbols: usize) -> Result<Spectrum> {
    let mut f = walk()?;
    f.duration_s = 0.1;
    let s = Scenario::with_mode(&f, mode, 0)?;
    let symbols = symbols.clamp(1, s.num_symbols());
    let bufs = transmitters(&s)?
        .iter_mut()
        .map(|t| Ok(modulate(&t.grid(s.numerology, 0, symbols)?)))
        .collect::<Result<Vec<_>>>()?;
    let clean = propagate(&bufs, &s, rx)?;
    let noisy = add_noise(&clean, s.node(rx).snr_db, s.noise_seed(rx))?;
    let p = psd(&noisy, s.numerology.fft_size)?;
    Ok(Spectrum {
        frequencies: p.frequency_offsets,
        power_db: p.power_db,
    })
}

#[wasm_bindgen]
#[derive(Debug, Clone, Copy)]
pub struct DopplerDemo {
    pub estimate_mps: f64,
    pub peak_snr_db: f64,
    pub detected: bool,
    pub resolution_mps: f64,
}

/// One 1216-symbol SBFD window at node 1 with the target moving radially at
/// `velocity` m/s (positive = receding).
pub fn doppler_demo(velocity: f64, snr_db: f64) -> Result<DopplerDemo> {
    let num = OfdmNumerology::default();
    let mut f = walk()?;
    f.duration_s = f.sensing.window as f64 * num.symbol_duration();
    let z = f.nodes[0].position_m.z;
    let origin = f.nodes[0].position_m;
    for n in &mut f.nodes {
        n.tx_offset_m = Vec3::ZERO;
        n.rx_offset_m = Vec3::ZERO;
        n.start_offset_samples = 0;
    }
    f.nodes[0].snr_db = snr_db;
    f.trajectory.jitter = Default::default();
    f.trajectory.mocap_lead_s = 0.0;
    // head straight away from (or towards) node 1, 4 m out
    f.trajectory.shape = Some(TrackKind::Linear {
        start_m: Vec3::new(origin.x, origin.y + 4.0, z),
        velocity_mps: Vec3::new(0.0, velocity, 0.0),
    });
    let s = Scenario::with_mode(&f, Mode::Sbfd, 0)?;
    let tx = transmitters(&s)?;
    let r = simulate_node(&s, &tx, NodeId::Node1)?;
    let e = r.track.estimates[0];
    Ok(DopplerDemo {
        estimate_mps: e.velocity,
        peak_snr_db: e.peak_snr_db,
        detected: e.detected,
        resolution_mps: velocity_resolution(&num, f.sensing.window)?,
    })
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CommDemo {
    pub ber: f64,
    pub bits: u64,
    constellation: Vec<f64>,
}

#[wasm_bindgen]
impl CommDemo {
    /// Equalized points as `[i0, q0, i1, q1, ...]`.
    pub fn constellation(&self) -> Vec<f64> {
        self.constellation.clone()
    }
}

/// Node 3's QPSK subband through AWGN at `es_n0_db`, pilot-aided decoding.
pub fn comm_demo(es_n0_db: f64, symbols: usize, seed: u64) -> Result<CommDemo> {
    let num = OfdmNumerology::default();
    let alloc = build_allocation(NodeId::Node3, &num, 20)?;
    let mut tx = Transmitter::comm(alloc.clone(), seed, 3);
    let symbols = symbols.max(1);
    let clean = tx.subband_grid(num, 0, symbols)?;
    let sigma = 10f64.powf(-es_n0_db / 20.0);
    let rows = alloc.active.len();
    let mut noise = CellNoise::new(seed, 9, rows);
    noise.seek(0, 0);
    let noisy: Vec<Complex64> = clean.values().iter().map(|v| v + noise.next_unit() * sigma).collect();
    let rx = SymbolGrid::from_columns(num, alloc.active.clone(), noisy)?;
    let bits: Vec<u8> = (0..symbols).flat_map(|m| tx.bits(m)).collect();
    let cfg = CommConfig {
        constellation_points: 2000,
        ..CommConfig::default()
    };
    let r = comm_process(&rx, &alloc, &bits, &cfg)?;
    Ok(CommDemo {
        ber: r.ber(),
        bits: r.bits_compared,
        constellation: r.constellation.iter().flat_map(|c| [c.re, c.im]).collect(),
    })
}

fn js(e: sbfd_isac::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = receivedSpectrum)]
pub fn received_spectrum_js(mode: &str, rx: usize, symbols: usize) -> std::result::Result<Spectrum, JsError> {
    let mode: Mode = mode.parse().map_err(js)?;
    let rx = NodeId::from_number(rx).map_err(js)?;
    received_spectrum(mode, rx, symbols).map_err(js)
}

#[wasm_bindgen(js_name = dopplerDemo)]
pub fn doppler_demo_js(velocity: f64, snr_db: f64) -> std::result::Result<DopplerDemo, JsError> {
    doppler_demo(velocity, snr_db).map_err(js)
}

#[wasm_bindgen(js_name = commDemo)]
pub fn comm_demo_js(es_n0_db: f64, symbols: usize) -> std::result::Result<CommDemo, JsError> {
    comm_demo(es_n0_db, symbols, 1).map_err(js)
}
