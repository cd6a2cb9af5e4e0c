//! End-to-end batch runs: scenario -> per-node receive chains -> scored
//! report files under one output directory.

mod artifacts;
mod simulate;
mod tools;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use artifacts::{sha256_hex, verify_artifacts, Artifact};
pub use simulate::{simulate_node, simulate_run, CommReport, NodeResult, RunResult, SensingTrack};
pub use tools::{convert_iq, inspect_waveform, synthesize_ground_truth, IqFormat};

use crate::channel::{add_noise, propagate, transmitters, Mode, Scenario, ScenarioFile};
use crate::error::{invalid, Result};
use crate::groundtruth::TimeSeries;
use crate::metrics::{mode_summary, rmse_per_step, ModeSummary, RmseSeries};
use crate::waveform::{modulate, psd, NodeId, QPSK_POINTS};
use artifacts::{ArtifactWriter, Table};

/// Symbols of time-domain IQ used for the received-spectrum report.
const PSD_SYMBOLS: usize = 64;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: PathBuf,
    /// Empty means the mode in the scenario file.
    pub modes: Vec<Mode>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub identical_payload: bool,
    /// Score speeds instead of signed velocities.
    pub absolute_rmse: bool,
    /// Worker threads; 0 picks the default.
    pub threads: usize,
}

impl RunOptions {
    pub fn new(scenario: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            modes: Vec::new(),
            runs: None,
            seed: None,
            out_dir: out_dir.into(),
            identical_payload: false,
            absolute_rmse: false,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub modes: Vec<Mode>,
    pub runs: usize,
    pub seed: u64,
    pub out_dir: String,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn verify(&self) -> Result<()> {
        verify_artifacts(Path::new(&self.out_dir), &self.artifacts)
    }
}

/// Everything computed for one mode.
#[derive(Debug, Clone)]
pub struct ModeResults {
    pub mode: Mode,
    pub runs: Vec<RunResult>,
    pub rmse: Vec<RmseSeries>,
}

/// Runs `runs` independent runs of `file` in `mode` and scores them.
pub fn simulate_mode(file: &ScenarioFile, mode: Mode, runs: usize, absolute: bool) -> Result<ModeResults> {
    if runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let results = map_runs(runs, |r| simulate_run(&Scenario::with_mode(file, mode, r)?))?;
    let mut rmse = Vec::new();
    for node in NodeId::ALL {
        let tracks: Vec<&SensingTrack> = results.iter().map(|r| &r.nodes[node.index()].track).collect();
        let est: Vec<TimeSeries> = tracks.iter().map(|t| t.estimate_series()).collect();
        let truth: Vec<TimeSeries> = tracks.iter().map(|t| t.truth.clone()).collect();
        rmse.push(rmse_per_step(&est, &truth, node, mode, absolute)?);
    }
    Ok(ModeResults {
        mode,
        runs: results,
        rmse,
    })
}

#[cfg(feature = "parallel")]
fn map_runs<T: Send>(runs: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..runs).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_runs<T>(runs: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..runs).map(f).collect()
}

/// Runs the batch described by `opts` and writes every report; the manifest
/// `manifest.toml` is written last and lists all other files.
pub fn run_simulation(opts: &RunOptions) -> Result<RunManifest> {
    let mut file = ScenarioFile::load(&opts.scenario)?;
    if let Some(seed) = opts.seed {
        file.seed = seed;
    }
    if let Some(runs) = opts.runs {
        file.runs = runs;
    }
    if opts.identical_payload {
        file.identical_payload = true;
    }
    if file.runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let modes = if opts.modes.is_empty() {
        vec![file.mode]
    } else {
        let mut m = opts.modes.clone();
        m.sort();
        m.dedup();
        m
    };

    let results = with_threads(opts.threads, || {
        modes
            .iter()
            .map(|&mode| {
                log::info!("{mode}: {} runs", file.runs);
                simulate_mode(&file, mode, file.runs, opts.absolute_rmse)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut out = ArtifactWriter::new(&opts.out_dir)?;
    for res in &results {
        write_mode(&mut out, res)?;
    }
    let all_rmse: Vec<RmseSeries> = results.iter().flat_map(|r| r.rmse.iter().cloned()).collect();
    out.write("rmse.csv", &rmse_csv(&all_rmse)?)?;
    if let Some(sbfd) = results.iter().find(|r| r.mode == Mode::Sbfd) {
        out.write("ber.csv", &ber_csv(sbfd)?)?;
    }
    out.write("psd_rx_node2.csv", &psd_csv(&file, &modes)?)?;
    let summary = mode_summary(&all_rmse)?;
    out.write("summary.toml", summary_toml(&summary, &file)?.as_bytes())?;

    let manifest = RunManifest {
        scenario: opts.scenario.display().to_string(),
        modes,
        runs: file.runs,
        seed: file.seed,
        out_dir: opts.out_dir.display().to_string(),
        artifacts: out.finish(),
    };
    std::fs::write(opts.out_dir.join("manifest.toml"), toml::to_string(&manifest)?)?;
    Ok(manifest)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(_threads: usize, f: impl FnOnce() -> T) -> Result<T> {
    Ok(f())
}

fn write_mode(out: &mut ArtifactWriter, res: &ModeResults) -> Result<()> {
    for run in &res.runs {
        let dir = format!("{}/run_{}", res.mode, run.run);
        for node in &run.nodes {
            let n = node.track.node.number();
            let mut v = Table::new(&["timestamp_s", "velocity_mps", "peak_snr_db", "detected", "node", "subband"])?;
            for e in &node.track.estimates {
                v.row(&[&e.timestamp, &e.velocity, &e.peak_snr_db, &e.detected, &n, &node.track.subband])?;
            }
            out.write(&format!("{dir}/velocity_node{n}.csv"), &v.into_bytes()?)?;

            let mut t = Table::new(&["timestamp_s", "velocity_mps", "node"])?;
            for (ts, val) in node.track.truth.timestamps.iter().zip(&node.track.truth.values) {
                t.row(&[ts, val, &n])?;
            }
            out.write(&format!("{dir}/truth_node{n}.csv"), &t.into_bytes()?)?;

            if let Some(c) = &node.comm {
                let mut k = Table::new(&["i", "q", "kind"])?;
                for p in QPSK_POINTS {
                    k.row(&[&p.re, &p.im, &"ideal"])?;
                }
                for p in &c.result.constellation {
                    k.row(&[&p.re, &p.im, &"rx"])?;
                }
                out.write(&format!("{dir}/constellation_node{n}.csv"), &k.into_bytes()?)?;
            }
        }
        if res.mode == Mode::Sbfd {
            let mut b = ber_table()?;
            for c in run.nodes.iter().filter_map(|n| n.comm.as_ref()) {
                ber_row(&mut b, c.node, c.snr_db, &c.result)?;
            }
            out.write(&format!("{dir}/ber.csv"), &b.into_bytes()?)?;
        }
    }
    Ok(())
}

fn ber_table() -> Result<Table> {
    Table::new(&["node", "snr_db", "bits", "errors", "erasures", "ber"])
}

fn ber_row(t: &mut Table, node: NodeId, snr: f64, r: &crate::receiver::CommResult) -> Result<()> {
    t.row(&[&node.number(), &snr, &r.bits_compared, &r.errors, &r.erasures, &r.ber()])
}

/// BER pooled over runs per receiving node.
fn ber_csv(res: &ModeResults) -> Result<Vec<u8>> {
    let mut b = ber_table()?;
    for node in NodeId::ALL {
        let mut total = crate::receiver::CommResult::default();
        let mut snr = None;
        for run in &res.runs {
            if let Some(c) = &run.nodes[node.index()].comm {
                snr = Some(c.snr_db);
                total.absorb(c.result.clone(), false, 0);
            }
        }
        if let Some(snr) = snr {
            ber_row(&mut b, node, snr, &total)?;
        }
    }
    b.into_bytes()
}

fn rmse_csv(series: &[RmseSeries]) -> Result<Vec<u8>> {
    let mut t = Table::new(&["t_s", "rmse_mps", "node", "mode", "runs"])?;
    for s in series {
        for (ts, r) in s.timestamps.iter().zip(&s.rmse) {
            t.row(&[ts, r, &s.node.number(), &s.mode, &s.runs_averaged])?;
        }
    }
    t.into_bytes()
}

/// Spectrum seen by node 2 in each mode, run 0, over the first symbols.
fn psd_csv(file: &ScenarioFile, modes: &[Mode]) -> Result<Vec<u8>> {
    let mut t = Table::new(&["mode", "frequency_hz", "power_db"])?;
    for &mode in modes {
        let s = Scenario::with_mode(file, mode, 0)?;
        let symbols = PSD_SYMBOLS.min(s.num_symbols()).max(1);
        let bufs = transmitters(&s)?
            .iter_mut()
            .map(|tx| Ok(modulate(&tx.grid(s.numerology, 0, symbols)?)))
            .collect::<Result<Vec<_>>>()?;
        let rx = NodeId::Node2;
        let clean = propagate(&bufs, &s, rx)?;
        let noisy = add_noise(&clean, s.node(rx).snr_db, s.noise_seed(rx))?;
        let p = psd(&noisy, s.numerology.fft_size)?;
        for (f, db) in p.frequency_offsets.iter().zip(&p.power_db) {
            t.row(&[&mode, f, db])?;
        }
    }
    t.into_bytes()
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    scenario: &'a str,
    seed: u64,
    runs: usize,
    #[serde(flatten)]
    summary: &'a ModeSummary,
}

fn summary_toml(summary: &ModeSummary, file: &ScenarioFile) -> Result<String> {
    Ok(toml::to_string(&SummaryFile {
        scenario: &file.name,
        seed: file.seed,
        runs: file.runs,
        summary,
    })?)
}
