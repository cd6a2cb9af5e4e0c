use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::{transmitters, Mode, ReceiveModel, RowSpan, Scenario};
use crate::error::Result;
use crate::groundtruth::{derive_radial_velocity, resample_to, TimeSeries};
use crate::receiver::{comm_process_chunk, CommResult, SlidingSensor, VelocityEstimate};
use crate::waveform::{NodeId, OfdmNumerology, SymbolGrid, Transmitter};

/// Comm symbols decoded per chunk; bounds memory on long runs.
const COMM_CHUNK: usize = 1024;

/// Velocity estimates of one receiver with the matching reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingTrack {
    pub node: NodeId,
    /// Sensing subcarriers, `first-last`.
    pub subband: String,
    pub estimates: Vec<VelocityEstimate>,
    /// Radial velocity truth at the estimate timestamps.
    pub truth: TimeSeries,
}

impl SensingTrack {
    pub fn estimate_series(&self) -> TimeSeries {
        TimeSeries {
            timestamps: self.estimates.iter().map(|e| e.timestamp).collect(),
            values: self.estimates.iter().map(|e| e.velocity).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommReport {
    /// Receiving node.
    pub node: NodeId,
    pub snr_db: f64,
    pub result: CommResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeResult {
    pub track: SensingTrack,
    pub comm: Option<CommReport>,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mode: Mode,
    pub run: usize,
    pub nodes: Vec<NodeResult>,
}

/// Full receive chain for all three nodes of one run.
pub fn simulate_run(scenario: &Scenario) -> Result<RunResult> {
    let tx = transmitters(scenario)?;
    let nodes = NodeId::ALL
        .into_iter()
        .map(|rx| simulate_node(scenario, &tx, rx))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        mode: scenario.mode,
        run: scenario.run,
        nodes,
    })
}

/// Receive chain of one node: monostatic sensing on its own allocation and,
/// in SBFD mode on nodes 1 and 2, decoding of the node 3 subband.
pub fn simulate_node(scenario: &Scenario, tx: &[Transmitter; 3], rx: NodeId) -> Result<NodeResult> {
    let mut model = ReceiveModel::new(scenario, rx, tx);
    let noise_variance = model.calibrate()?;
    let total = scenario.num_symbols();
    let num = scenario.numerology_for(rx);

    let mut own = tx[rx.index()].clone();
    let sense_span = RowSpan::of(&own.allocation);
    // Doppler scales with the RF frequency of the subband, not the carrier
    let band_center = num.center_frequency
        + 0.5 * (num.subcarrier_offset(sense_span.first) + num.subcarrier_offset(sense_span.last));
    let sense_num = num.with_center_frequency(band_center);
    let mut sensor = SlidingSensor::new(scenario.file.sensing.clone(), sense_num, sense_span.len(), 0.0)?;
    // the node knows its own transmit start, so the reference carries the
    // same delay and the echo lands at its true range bin
    let ramp = own_delay_ramp(&num, sense_span, scenario.node(rx).start_offset_samples);
    let fixed_x = own.is_symbol_invariant().then(|| {
        let mut x = vec![Complex64::new(0.0, 0.0); sense_span.len()];
        own.active_column(0, &mut x);
        x.iter_mut().zip(&ramp).for_each(|(v, r)| *v *= r);
        x
    });
    let mut x = vec![Complex64::new(0.0, 0.0); sense_span.len()];

    let decode = scenario.mode == Mode::Sbfd && rx != NodeId::Node3;
    let mut comm = decode.then(|| CommChunker::new(scenario, tx[NodeId::Node3.index()].clone(), total));
    let mut spans = vec![sense_span];
    if let Some(c) = &comm {
        spans.push(c.span);
    }

    let mut estimates = Vec::new();
    let mut col = Vec::new();
    for m in 0..total {
        model.column(m, &spans, &mut col)?;
        let known = match &fixed_x {
            Some(fx) => fx.as_slice(),
            None => {
                own.active_column(m, &mut x);
                x.iter_mut().zip(&ramp).for_each(|(v, r)| *v *= r);
                x.as_slice()
            }
        };
        if let Some(out) = sensor.push(&col[..sense_span.len()], known)? {
            estimates.push(out.estimate);
        }
        if let Some(c) = &mut comm {
            c.push(m, &col[sense_span.len()..])?;
        }
    }

    let aligned = scenario.timeline.apply(&scenario.track)?;
    let truth = derive_radial_velocity(&aligned, scenario.node(rx).position, scenario.file.truth_smoothing)?;
    let stamps: Vec<f64> = estimates.iter().map(|e| e.timestamp).collect();
    let truth = resample_to(&truth, &stamps)?;

    Ok(NodeResult {
        track: SensingTrack {
            node: rx,
            subband: format!("{}-{}", sense_span.first, sense_span.last),
            estimates,
            truth,
        },
        comm: comm.map(|c| CommReport {
            node: rx,
            snr_db: scenario.node(rx).snr_db,
            result: c.finish(),
        }),
        noise_variance,
    })
}

fn own_delay_ramp(num: &OfdmNumerology, span: RowSpan, offset_samples: usize) -> Vec<Complex64> {
    let tau = offset_samples as f64 / num.sample_rate;
    span.rows()
        .into_iter()
        .map(|n| Complex64::cis(-TAU * num.subcarrier_offset(n) * tau))
        .collect()
}

/// Feeds received comm-subband columns through chunked decoding with enough
/// margin that results equal whole-grid processing.
struct CommChunker<'a> {
    scenario: &'a Scenario,
    tx: Transmitter,
    span: RowSpan,
    total: usize,
    half: usize,
    core_start: usize,
    buf_first: usize,
    buf: Vec<Complex64>,
    result: CommResult,
}

impl<'a> CommChunker<'a> {
    fn new(scenario: &'a Scenario, tx: Transmitter, total: usize) -> Self {
        let span = RowSpan::of(&tx.allocation);
        Self {
            scenario,
            half: scenario.file.comm.pilot_smoothing / 2,
            span,
            tx,
            total,
            core_start: 0,
            buf_first: 0,
            buf: Vec::new(),
            result: CommResult::default(),
        }
    }

    fn push(&mut self, m: usize, column: &[Complex64]) -> Result<()> {
        self.buf.extend_from_slice(column);
        while self.core_start < self.total {
            let core_end = (self.core_start + COMM_CHUNK).min(self.total);
            if m + 1 < (core_end + self.half).min(self.total) {
                break;
            }
            let width = self.span.len();
            let y = SymbolGrid::from_columns(
                self.scenario.numerology,
                self.span.rows(),
                self.buf.clone(),
            )?;
            let bits: Vec<u8> = (self.core_start..core_end).flat_map(|s| self.tx.bits(s)).collect();
            let r = comm_process_chunk(
                &y,
                self.buf_first,
                self.total,
                self.core_start..core_end,
                &self.tx.allocation,
                &bits,
                &self.scenario.file.comm,
            )?;
            self.result.absorb(r, false, self.scenario.file.comm.constellation_points);
            self.core_start = core_end;
            let keep_from = self.core_start.saturating_sub(self.half).max(self.buf_first);
            self.buf.drain(..(keep_from - self.buf_first) * width);
            self.buf_first = keep_from;
        }
        Ok(())
    }

    fn finish(self) -> CommResult {
        self.result
    }
}
