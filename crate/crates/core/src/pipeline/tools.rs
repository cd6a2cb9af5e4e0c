use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::artifacts::{Artifact, ArtifactWriter, Table};
use crate::channel::{transmitters, Mode, Scenario, ScenarioFile};
use crate::error::{invalid, Error, Result};
use crate::groundtruth::write_track;
use crate::waveform::{modulate, papr, psd, IqBuffer, IqMetadata, NodeId, PayloadSource};

#[derive(Debug, Clone, PartialEq)]
pub struct InspectReport {
    /// Occupied frequency runs of the composite PSD, Hz from the carrier.
    pub occupied_bands: Vec<(f64, f64)>,
    pub artifacts: Vec<Artifact>,
}

/// Transmit-side dumps: `psd.csv`, `papr.csv` and `allocation.csv` for the
/// sum of the selected nodes' baseband signals (all nodes if `node` is None).
pub fn inspect_waveform(
    file: &ScenarioFile,
    mode: Mode,
    node: Option<NodeId>,
    symbols: usize,
    out_dir: &Path,
) -> Result<InspectReport> {
    if symbols == 0 {
        return Err(invalid("need at least one symbol"));
    }
    let s = Scenario::with_mode(file, mode, 0)?;
    let selected: Vec<NodeId> = match node {
        Some(n) => vec![n],
        None => NodeId::ALL.to_vec(),
    };
    if mode == Mode::Multiband && selected.len() > 1 {
        return Err(invalid("multiband carriers do not share a baseband; inspect one node"));
    }
    let mut txs = transmitters(&s)?;
    let mut composite = vec![Complex64::new(0.0, 0.0); symbols * s.numerology.symbol_samples()];
    for &n in &selected {
        let buf = modulate(&txs[n.index()].grid(s.numerology, 0, symbols)?);
        composite.iter_mut().zip(&buf.samples).for_each(|(a, b)| *a += b);
    }
    let buf = IqBuffer::new(s.numerology_for(selected[0]), composite, 0.0);
    let spectrum = psd(&buf, s.numerology.fft_size.min(buf.len()))?;
    // 20 dB below the peak separates occupied bins from Hann leakage into guards
    let bands = spectrum.occupied_bands(20.0, 4);

    let mut out = ArtifactWriter::new(out_dir)?;
    let mut t = Table::new(&["frequency_hz", "power_db"])?;
    for (f, p) in spectrum.frequency_offsets.iter().zip(&spectrum.power_db) {
        t.row(&[f, p])?;
    }
    out.write("psd.csv", &t.into_bytes()?)?;

    let mut t = Table::new(&["symbol", "papr_db"])?;
    for (m, p) in papr(&buf, true)?.iter().enumerate() {
        t.row(&[&m, p])?;
    }
    out.write("papr.csv", &t.into_bytes()?)?;

    let mut t = Table::new(&[
        "node", "carrier_hz", "first", "last", "active", "pilots", "data", "payload", "bandwidth_hz", "overlaps",
    ])?;
    for &n in &selected {
        let a = &txs[n.index()].allocation;
        let payload = match &txs[n.index()].payload {
            PayloadSource::Zc { root, .. } => format!("zc-root-{root}"),
            PayloadSource::Qpsk(_) => "qpsk".to_string(),
        };
        let overlaps: Vec<String> = selected
            .iter()
            .filter(|&&o| o != n && s.node(o).center_frequency == s.node(n).center_frequency)
            .filter(|&&o| a.overlaps(&txs[o.index()].allocation))
            .map(|o| o.number().to_string())
            .collect();
        t.row(&[
            &n.number(),
            &s.node(n).center_frequency,
            &a.first(),
            &a.last(),
            &a.active.len(),
            &a.pilots.len(),
            &a.data.len(),
            &payload,
            &a.bandwidth(&s.numerology),
            &overlaps.join(" "),
        ])?;
    }
    out.write("allocation.csv", &t.into_bytes()?)?;
    Ok(InspectReport {
        occupied_bands: bands,
        artifacts: out.finish(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IqFormat {
    Cf32,
    Csv,
}

impl IqFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("cf32") => Ok(Self::Cf32),
            Some("csv") => Ok(Self::Csv),
            _ => Err(invalid(format!("{}: expected a .cf32 or .csv file", path.display()))),
        }
    }
}

/// Converts between raw `.cf32` and `i,q` CSV lines (no header). Floats are
/// printed with the shortest representation that parses back to the same
/// f32, so round trips are bit-exact.
pub fn convert_iq(input: &Path, output: &Path) -> Result<()> {
    let from = IqFormat::from_path(input)?;
    let to = IqFormat::from_path(output)?;
    let floats = match from {
        IqFormat::Cf32 => {
            let bytes = fs::read(input)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Malformed(format!(
                    "{}: {} bytes is not a whole number of I/Q pairs",
                    input.display(),
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect::<Vec<_>>()
        }
        IqFormat::Csv => parse_iq_csv(&fs::read_to_string(input)?)?,
    };
    match to {
        IqFormat::Cf32 => {
            let bytes: Vec<u8> = floats.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(output, bytes)?;
            if from == IqFormat::Cf32 {
                let side = IqMetadata::sidecar_path(input);
                if side.exists() {
                    fs::copy(side, IqMetadata::sidecar_path(output))?;
                }
            }
        }
        IqFormat::Csv => {
            let mut text = String::with_capacity(floats.len() * 12);
            for pair in floats.chunks_exact(2) {
                text.push_str(&format!("{},{}\n", pair[0], pair[1]));
            }
            fs::write(output, text)?;
        }
    }
    Ok(())
}

fn parse_iq_csv(text: &str) -> Result<Vec<f32>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Malformed(format!("line {}: expected `i,q`", i + 1)));
        }
        for f in fields {
            out.push(
                f.parse::<f32>()
                    .map_err(|e| Error::Malformed(format!("line {}: {e}", i + 1)))?,
            );
        }
    }
    Ok(out)
}

/// Writes the capture-clock trajectory of `run` as `t_s,x_m,y_m,z_m` CSV.
pub fn synthesize_ground_truth(file: &ScenarioFile, run: usize, out: &Path) -> Result<()> {
    let s = Scenario::for_run(file, run)?;
    let mut bytes = Vec::new();
    write_track(&mut bytes, &s.track)?;
    fs::write(out, bytes)?;
    Ok(())
}
