use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Vec3;
use crate::groundtruth::{align_timelines, load_track, synthesize_track, AlignedTimeline, GroundTruthTrack, TrackKind};
use crate::receiver::{CommConfig, SensingConfig};
use crate::rng::mix_seed;
use crate::waveform::{build_allocation, build_full_band_allocation, NodeId, OfdmNumerology, Transmitter};

/// Band-sharing scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Disjoint subbands inside one 20 MHz band.
    Sbfd,
    /// Each node alone on its own carrier.
    Multiband,
    /// Every node on the full band of one carrier.
    SameBand,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Sbfd, Mode::Multiband, Mode::SameBand];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sbfd => "sbfd",
            Mode::Multiband => "multiband",
            Mode::SameBand => "same-band",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sbfd" => Ok(Mode::Sbfd),
            "multiband" | "multi-band" => Ok(Mode::Multiband),
            "same-band" | "sameband" => Ok(Mode::SameBand),
            other => Err(invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumerologyConfig {
    #[serde(default = "d_fft")]
    pub fft_size: usize,
    #[serde(default = "d_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "d_fc")]
    pub center_frequency_hz: f64,
    #[serde(default = "d_cp")]
    pub cp_samples: usize,
}

impl Default for NumerologyConfig {
    fn default() -> Self {
        let n = OfdmNumerology::default();
        Self {
            fft_size: n.fft_size,
            sample_rate_hz: n.sample_rate,
            center_frequency_hz: n.center_frequency,
            cp_samples: n.cp_samples,
        }
    }
}

fn d_fft() -> usize {
    OfdmNumerology::default().fft_size
}
fn d_rate() -> f64 {
    OfdmNumerology::default().sample_rate
}
fn d_fc() -> f64 {
    OfdmNumerology::default().center_frequency
}
fn d_cp() -> usize {
    OfdmNumerology::default().cp_samples
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub position_m: Vec3,
    #[serde(default)]
    pub tx_offset_m: Vec3,
    #[serde(default)]
    pub rx_offset_m: Vec3,
    /// Late transmit start in samples; must stay inside the cyclic prefix.
    #[serde(default)]
    pub start_offset_samples: usize,
    #[serde(default = "d_snr")]
    pub snr_db: f64,
}

fn d_snr() -> f64 {
    20.0
}

/// Static extra path on a link, relative to its direct path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraTap {
    pub excess_delay_ns: f64,
    pub relative_gain_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

/// Per-link overrides, e.g. an obstructed direct path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub tx: usize,
    pub rx: usize,
    #[serde(default)]
    pub direct_loss_db: f64,
    #[serde(default)]
    pub extra_taps: Vec<ExtraTap>,
}

/// Per-run trajectory perturbation for synthesized shapes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jitter {
    /// Horizontal displacement, uniform in +/- this many meters per axis.
    #[serde(default)]
    pub start_m: f64,
    /// Relative speed change, uniform in +/- this fraction.
    #[serde(default)]
    pub speed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// CSV track, relative to the scenario file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub shape: Option<TrackKind>,
    #[serde(default = "d_track_rate")]
    pub rate_hz: f64,
    /// Testbed start minus capture start, seconds.
    #[serde(default)]
    pub mocap_lead_s: f64,
    #[serde(default)]
    pub jitter: Jitter,
}

fn d_track_rate() -> f64 {
    100.0
}

/// On-disk scenario description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default = "d_mode")]
    pub mode: Mode,
    #[serde(default = "d_duration")]
    pub duration_s: f64,
    #[serde(default = "d_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub numerology: NumerologyConfig,
    #[serde(default = "d_pilot")]
    pub pilot_spacing: usize,
    #[serde(default = "d_mb")]
    pub multiband_frequencies_hz: [f64; 3],
    pub nodes: Vec<NodeConfig>,
    pub trajectory: TrajectorySpec,
    #[serde(default = "d_one")]
    pub target_rcs_gain: f64,
    #[serde(default = "d_one")]
    pub direct_path_gain: f64,
    #[serde(default = "d_leak")]
    pub self_leakage_db: f64,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    /// ZC roots of the sensing nodes. SBFD uses the first two, the
    /// full-band modes one per node.
    #[serde(default = "d_roots")]
    pub zc_roots: [usize; 3],
    #[serde(default)]
    pub identical_payload: bool,
    /// Overrides the per-run QPSK payload seed.
    #[serde(default)]
    pub comm_payload_seed: Option<u64>,
    #[serde(default = "d_smooth")]
    pub truth_smoothing: usize,
    /// Every node radiates the same total power in every mode, so full-band
    /// transmitters spread it thinner per subcarrier than SBFD ones.
    #[serde(default = "d_true")]
    pub equal_tx_power: bool,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub comm: CommConfig,
}

fn d_mode() -> Mode {
    Mode::Sbfd
}
fn d_duration() -> f64 {
    5.0
}
fn d_runs() -> usize {
    6
}
fn d_pilot() -> usize {
    20
}
fn d_mb() -> [f64; 3] {
    [6.74e9, 6.8e9, 6.86e9]
}
fn d_one() -> f64 {
    1.0
}
fn d_leak() -> f64 {
    -40.0
}
fn d_roots() -> [usize; 3] {
    [7, 13, 17]
}
fn d_smooth() -> usize {
    5
}
fn d_true() -> bool {
    true
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut file = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(f), Some(dir)) = (&file.trajectory.file, path.parent()) {
            if f.is_relative() {
                file.trajectory.file = Some(dir.join(f));
            }
        }
        Ok(file)
    }
}

/// Resolved geometry and radio parameters of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub position: Vec3,
    pub tx_position: Vec3,
    pub rx_position: Vec3,
    pub start_offset_samples: usize,
    pub snr_db: f64,
    pub center_frequency: f64,
}

/// A scenario ready for simulation of one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub numerology: OfdmNumerology,
    pub mode: Mode,
    pub run: usize,
    pub run_seed: u64,
    pub nodes: [NodeSpec; 3],
    /// Raw capture-clock track.
    pub track: GroundTruthTrack,
    pub timeline: AlignedTimeline,
    pub self_leakage_gain: f64,
    /// Transmit amplitude per subcarrier, relative to an SBFD subband.
    pub tx_amplitude: [f64; 3],
}

impl Scenario {
    /// Resolves run `run` of `file`; every run gets its own seed and, for
    /// synthesized shapes, its own jittered trajectory.
    pub fn for_run(file: &ScenarioFile, run: usize) -> Result<Self> {
        Self::with_mode(file, file.mode, run)
    }

    pub fn with_mode(file: &ScenarioFile, mode: Mode, run: usize) -> Result<Self> {
        let scn = |m: String| Error::Scenario(m);
        let base = OfdmNumerology::new(
            file.numerology.fft_size,
            file.numerology.sample_rate_hz,
            file.numerology.center_frequency_hz,
            file.numerology.cp_samples,
        )?;
        if file.nodes.len() != 3 {
            return Err(scn(format!("expected 3 nodes, found {}", file.nodes.len())));
        }
        if !(file.duration_s > 0.0) {
            return Err(scn("duration must be positive".into()));
        }
        if file.runs == 0 {
            return Err(scn("runs must be at least 1".into()));
        }
        if file.pilot_spacing == 0 {
            return Err(scn("pilot spacing must be positive".into()));
        }
        if file.truth_smoothing % 2 == 0 {
            return Err(scn("truth smoothing window must be odd".into()));
        }
        if file.target_rcs_gain < 0.0 || file.direct_path_gain < 0.0 {
            return Err(scn("gains must be non-negative".into()));
        }
        for l in &file.links {
            if !(1..=3).contains(&l.tx) || !(1..=3).contains(&l.rx) {
                return Err(scn(format!("link {}->{} names an unknown node", l.tx, l.rx)));
            }
        }
        file.sensing.validate()?;
        file.comm.validate()?;

        let run_seed = mix_seed(file.seed, run as u64 + 1);
        let nodes = std::array::from_fn(|i| {
            let c = &file.nodes[i];
            let fc = match mode {
                Mode::Multiband => file.multiband_frequencies_hz[i],
                Mode::Sbfd | Mode::SameBand => base.center_frequency,
            };
            NodeSpec {
                id: NodeId::ALL[i],
                position: c.position_m,
                tx_position: c.position_m + c.tx_offset_m,
                rx_position: c.position_m + c.rx_offset_m,
                start_offset_samples: c.start_offset_samples,
                snr_db: c.snr_db,
                center_frequency: fc,
            }
        });
        for n in &nodes {
            if !n.tx_position.is_finite() || !n.rx_position.is_finite() {
                return Err(scn(format!("{} position is not finite", n.id)));
            }
            if n.start_offset_samples * 4 > base.cp_samples {
                return Err(scn(format!("{} start offset exceeds a quarter of the CP", n.id)));
            }
            if n.snr_db.is_nan() {
                return Err(scn(format!("{} SNR is NaN", n.id)));
            }
        }

        let mut tx_amplitude = [1.0; 3];
        if file.equal_tx_power && mode != Mode::Sbfd {
            for id in NodeId::ALL {
                let sub = build_allocation(id, &base, file.pilot_spacing)?.active.len();
                let full = build_full_band_allocation(id, &base, file.pilot_spacing)?.active.len();
                tx_amplitude[id.index()] = (sub as f64 / full as f64).sqrt();
            }
        }

        let t = &file.trajectory;
        let track = match (&t.file, &t.shape) {
            (Some(path), None) => {
                if t.jitter != Jitter::default() {
                    log::warn!("trajectory jitter is ignored for file tracks");
                }
                load_track(path)?
            }
            (None, Some(shape)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(run_seed, 0x7472_6163_6b));
                let shape = jittered(shape, &t.jitter, &mut rng);
                // a little past the last symbol so interpolation never runs off the end
                let span = t.mocap_lead_s + file.duration_s + 0.05;
                let mut track = synthesize_track(&shape, span, t.rate_hz)?;
                track.label = file.name.clone();
                track
            }
            _ => return Err(scn("trajectory needs exactly one of 'file' or 'shape'".into())),
        };
        let timeline = align_timelines(track.start_time + t.mocap_lead_s, &track)?;
        let last_symbol = base.symbols_in(file.duration_s).saturating_sub(1) as f64 * base.symbol_duration();
        if !track.contains_time(timeline.to_capture(last_symbol)) {
            return Err(scn(format!(
                "trajectory ends at {:.3} s, before the testbed stops at {:.3} s",
                timeline.to_testbed(track.end_time()),
                last_symbol
            )));
        }

        Ok(Self {
            file: file.clone(),
            numerology: base,
            mode,
            run,
            run_seed,
            nodes,
            track,
            timeline,
            self_leakage_gain: 10f64.powf(file.self_leakage_db / 20.0),
            tx_amplitude,
        })
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id.index()]
    }

    /// Numerology seen by `node` (its own carrier).
    pub fn numerology_for(&self, node: NodeId) -> OfdmNumerology {
        self.numerology.with_center_frequency(self.node(node).center_frequency)
    }

    pub fn num_symbols(&self) -> usize {
        self.numerology.symbols_in(self.file.duration_s)
    }

    pub fn link(&self, tx: NodeId, rx: NodeId) -> Option<&LinkConfig> {
        self.file
            .links
            .iter()
            .find(|l| l.tx == tx.number() && l.rx == rx.number())
    }

    /// Seed of the QPSK payload carried by node 3 in this run.
    pub fn comm_payload_seed(&self) -> u64 {
        self.file
            .comm_payload_seed
            .unwrap_or_else(|| mix_seed(self.run_seed, 0x7061_796c))
    }

    /// Seed of the receiver noise at `rx`.
    pub fn noise_seed(&self, rx: NodeId) -> u64 {
        mix_seed(self.run_seed, 0x6e6f_6973_6500 + rx.number() as u64)
    }
}

fn jittered(shape: &TrackKind, jitter: &Jitter, rng: &mut ChaCha8Rng) -> TrackKind {
    let mut u = || rng.gen_range(-1.0..=1.0);
    let shift = Vec3::new(jitter.start_m * u(), jitter.start_m * u(), 0.0);
    let scale = 1.0 + jitter.speed_fraction * u();
    match shape.clone() {
        TrackKind::Linear { start_m, velocity_mps } => TrackKind::Linear {
            start_m: start_m + shift,
            velocity_mps: velocity_mps * scale,
        },
        TrackKind::Circular {
            center_m,
            radius_m,
            period_s,
            phase_rad,
        } => TrackKind::Circular {
            center_m: center_m + shift,
            radius_m,
            period_s: period_s / scale,
            phase_rad,
        },
        TrackKind::Waypoints {
            points_m,
            speed_mps,
            dwell_s,
        } => TrackKind::Waypoints {
            points_m: points_m.into_iter().map(|p| p + shift).collect(),
            speed_mps: speed_mps * scale,
            dwell_s,
        },
    }
}

/// Transmit generators of the three nodes for the scenario's mode.
///
/// SBFD: nodes 1 and 2 send ZC on the lower and middle subbands, node 3 sends
/// QPSK on the upper one. Multiband and same-band: every node sends ZC over
/// the full band, with distinct roots unless `identical_payload` is set.
pub fn transmitters(scenario: &Scenario) -> Result<[Transmitter; 3]> {
    let f = &scenario.file;
    let num = &scenario.numerology;
    let roots = if f.identical_payload {
        [f.zc_roots[0]; 3]
    } else {
        f.zc_roots
    };
    let make = |id: NodeId| -> Result<Transmitter> {
        match scenario.mode {
            Mode::Sbfd => {
                let a = build_allocation(id, num, f.pilot_spacing)?;
                match id {
                    NodeId::Node3 => Ok(Transmitter::comm(a, scenario.comm_payload_seed(), 3)),
                    _ => Transmitter::sensing(a, roots[id.index()]),
                }
            }
            Mode::Multiband | Mode::SameBand => {
                Transmitter::sensing(build_full_band_allocation(id, num, f.pilot_spacing)?, roots[id.index()])
            }
        }
    };
    Ok([make(NodeId::Node1)?, make(NodeId::Node2)?, make(NodeId::Node3)?])
}
