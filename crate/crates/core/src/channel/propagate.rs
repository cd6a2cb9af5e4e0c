use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{compute_paths, transmitters, Mode, PathTap, Scenario};
use crate::error::{invalid, Error, Result};
use crate::rng::CellNoise;
use crate::waveform::{IqBuffer, NodeId, OfdmEngine, OfdmNumerology, SubbandAllocation, SymbolGrid, Transmitter};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
// phasor recurrences are re-anchored this often to bound rounding drift
const REANCHOR: usize = 256;

/// Contiguous subcarriers `first..=last` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSpan {
    pub first: usize,
    pub last: usize,
}

impl RowSpan {
    pub fn new(first: usize, last: usize) -> Self {
        assert!(first >= 1 && first <= last, "empty or zero-based span");
        Self { first, last }
    }

    pub fn of(allocation: &SubbandAllocation) -> Self {
        Self::new(allocation.first(), allocation.last())
    }

    pub fn full(numerology: &OfdmNumerology) -> Self {
        Self::new(1, numerology.fft_size)
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> Vec<usize> {
        (self.first..=self.last).collect()
    }

    fn intersect(&self, other: RowSpan) -> Option<RowSpan> {
        let first = self.first.max(other.first);
        let last = self.last.min(other.last);
        (first <= last).then_some(RowSpan { first, last })
    }
}

/// Whether `tx` is heard at `rx`: always, except across carriers in
/// multiband mode where the other bands fall outside the capture.
pub fn contributes(scenario: &Scenario, tx: NodeId, rx: NodeId) -> bool {
    scenario.mode != Mode::Multiband || scenario.node(tx).center_frequency == scenario.node(rx).center_frequency
}

/// `out[i] += x[i] * H(span.first + i)` with
/// `H(n) = sum_taps gain * exp(-j 2 pi (n - n0) df delay)`.
fn accumulate(taps: &[PathTap], numerology: &OfdmNumerology, span: RowSpan, x: &[Complex64], out: &mut [Complex64]) {
    debug_assert_eq!(x.len(), span.len());
    let df = numerology.subcarrier_spacing();
    for tap in taps {
        let step = Complex64::cis(-TAU * df * tap.delay);
        for (c, (xs, os)) in x.chunks(REANCHOR).zip(out.chunks_mut(REANCHOR)).enumerate() {
            let n = span.first + c * REANCHOR;
            let mut ph = tap.gain * Complex64::cis(-TAU * numerology.subcarrier_offset(n) * tap.delay);
            for (xv, ov) in xs.iter().zip(os.iter_mut()) {
                *ov += xv * ph;
                ph *= step;
            }
        }
    }
}

/// Frequency response of `taps` on `span`, written to `out`.
pub fn channel_response(taps: &[PathTap], numerology: &OfdmNumerology, span: RowSpan, out: &mut [Complex64]) {
    out.fill(ZERO);
    let ones = vec![Complex64::new(1.0, 0.0); span.len()];
    accumulate(taps, numerology, span, &ones, out);
}

/// Block-fading channel on one buffer: each CP-prefixed symbol `m` is
/// filtered by the taps returned for it, through the frequency domain.
/// `taps_at` receives the symbol index and its start time.
pub fn apply_taps<F>(buffer: &IqBuffer, mut taps_at: F) -> Result<IqBuffer>
where
    F: FnMut(usize, f64) -> Result<Vec<PathTap>>,
{
    let num = buffer.numerology;
    let p = num.symbol_samples();
    if buffer.len() % p != 0 {
        return Err(invalid("buffer is not a whole number of symbols"));
    }
    let engine = OfdmEngine::new(num);
    let mut out = vec![ZERO; buffer.len()];
    let mut spectrum = vec![ZERO; num.fft_size];
    let mut h = vec![ZERO; num.fft_size];
    for (m, (src, dst)) in buffer.samples.chunks_exact(p).zip(out.chunks_exact_mut(p)).enumerate() {
        let t = buffer.start_timestamp + m as f64 * num.symbol_duration();
        let taps = taps_at(m, t)?;
        channel_response(&taps, &num, RowSpan::full(&num), &mut h);
        filter_symbol(&engine, src, &h, &mut spectrum);
        write_symbol(&engine, &mut spectrum, dst);
    }
    Ok(IqBuffer::new(num, out, buffer.start_timestamp))
}

/// FFT of the useful part of `src`, multiplied by `h` (subcarrier order),
/// added into `acc` (FFT order).
fn filter_symbol(engine: &OfdmEngine, src: &[Complex64], h: &[Complex64], acc: &mut [Complex64]) {
    let num = engine.numerology();
    let mut body = src[num.cp_samples..].to_vec();
    engine.forward_in_place(&mut body);
    for (k, v) in body.into_iter().enumerate() {
        acc[k] += v * h[num.subcarrier_of_fft_index(k) - 1];
    }
}

/// Inverse FFT of `spectrum` into a CP-prefixed symbol; clears `spectrum`.
fn write_symbol(engine: &OfdmEngine, spectrum: &mut [Complex64], dst: &mut [Complex64]) {
    let num = engine.numerology();
    let cp = num.cp_samples;
    engine.inverse_in_place(spectrum);
    let n = num.fft_size;
    dst[cp..].copy_from_slice(spectrum);
    dst[..cp].copy_from_slice(&spectrum[n - cp..]);
    spectrum.fill(ZERO);
}

/// Paths from `tx` to `rx` including the transmitter's start offset.
fn link_taps(scenario: &Scenario, t: f64, tx: NodeId, rx: NodeId) -> Result<Vec<PathTap>> {
    let mut taps = compute_paths(scenario, t, tx, rx)?;
    let extra = scenario.node(tx).start_offset_samples as f64 / scenario.numerology.sample_rate;
    // a late start is a pure baseband delay: it moves the subcarrier phase
    // ramp but not the carrier phase already folded into the gains
    let amp = scenario.tx_amplitude[tx.index()];
    for tap in &mut taps {
        tap.delay += extra;
        tap.gain *= amp;
    }
    Ok(taps)
}

/// Noise-free time-domain signal at `rx`: superposition of every
/// contributing transmitter through its per-symbol taps.
pub fn propagate(tx_buffers: &[IqBuffer], scenario: &Scenario, rx: NodeId) -> Result<IqBuffer> {
    if tx_buffers.len() != 3 {
        return Err(Error::LengthMismatch {
            expected: 3,
            actual: tx_buffers.len(),
        });
    }
    let first = &tx_buffers[0];
    for b in tx_buffers {
        if !b.numerology.same_sampling(&scenario.numerology)
            || b.len() != first.len()
            || b.start_timestamp != first.start_timestamp
        {
            return Err(Error::NumerologyMismatch);
        }
    }
    let num = scenario.numerology;
    let p = num.symbol_samples();
    if first.len() % p != 0 {
        return Err(invalid("buffer is not a whole number of symbols"));
    }
    let engine = OfdmEngine::new(num);
    let mut out = vec![ZERO; first.len()];
    let mut spectrum = vec![ZERO; num.fft_size];
    let mut h = vec![ZERO; num.fft_size];
    for (m, dst) in out.chunks_exact_mut(p).enumerate() {
        let t = first.start_timestamp + m as f64 * num.symbol_duration();
        for tx in NodeId::ALL {
            if !contributes(scenario, tx, rx) {
                continue;
            }
            let taps = link_taps(scenario, t, tx, rx)?;
            channel_response(&taps, &num, RowSpan::full(&num), &mut h);
            filter_symbol(&engine, &tx_buffers[tx.index()].samples[m * p..(m + 1) * p], &h, &mut spectrum);
        }
        write_symbol(&engine, &mut spectrum, dst);
    }
    Ok(IqBuffer::new(scenario.numerology_for(rx), out, first.start_timestamp))
}

struct Source {
    node: NodeId,
    tx: Transmitter,
    span: RowSpan,
    /// Active-bin values when the payload does not change between symbols.
    fixed: Option<Vec<Complex64>>,
    column: Vec<Complex64>,
}

/// Frequency-domain receiver model for one node.
///
/// Produces the demodulated grid a time-domain simulation would give
/// (`ofdm_demodulate(propagate(..) + noise)`), one symbol at a time and only
/// on the requested subcarriers, without materialising IQ buffers. Noise is
/// addressed by (symbol, subcarrier) so any subset of rows can be generated
/// in any order with identical values.
pub struct ReceiveModel<'a> {
    scenario: &'a Scenario,
    rx: NodeId,
    sources: Vec<Source>,
    noise: Option<(CellNoise, f64)>,
}

impl<'a> ReceiveModel<'a> {
    pub fn new(scenario: &'a Scenario, rx: NodeId, transmitters: &[Transmitter; 3]) -> Self {
        let sources = NodeId::ALL
            .into_iter()
            .filter(|&tx| contributes(scenario, tx, rx))
            .map(|node| {
                let mut tx = transmitters[node.index()].clone();
                let span = RowSpan::of(&tx.allocation);
                let mut column = vec![ZERO; span.len()];
                let fixed = tx.is_symbol_invariant().then(|| {
                    tx.active_column(0, &mut column);
                    column.clone()
                });
                Source {
                    node,
                    tx,
                    span,
                    fixed,
                    column,
                }
            })
            .collect();
        Self {
            scenario,
            rx,
            sources,
            noise: None,
        }
    }

    pub fn rx(&self) -> NodeId {
        self.rx
    }

    /// Smallest span covering every contributing transmitter.
    pub fn occupied_span(&self) -> RowSpan {
        let first = self.sources.iter().map(|s| s.span.first).min().unwrap_or(1);
        let last = self.sources.iter().map(|s| s.span.last).max().unwrap_or(1);
        RowSpan::new(first, last)
    }

    /// Noise-free received values of symbol `m` on `spans`, concatenated.
    pub fn clean_column(&mut self, m: usize, spans: &[RowSpan], out: &mut Vec<Complex64>) -> Result<()> {
        let num = self.scenario.numerology;
        let t = m as f64 * num.symbol_duration();
        out.clear();
        out.resize(spans.iter().map(RowSpan::len).sum(), ZERO);
        for src in &mut self.sources {
            if !spans.iter().any(|s| s.intersect(src.span).is_some()) {
                continue;
            }
            let taps = link_taps(self.scenario, t, src.node, self.rx)?;
            let x: &[Complex64] = match &src.fixed {
                Some(col) => col,
                None => {
                    src.tx.active_column(m, &mut src.column);
                    &src.column
                }
            };
            let mut offset = 0;
            for s in spans {
                if let Some(common) = s.intersect(src.span) {
                    let xs = &x[common.first - src.span.first..=common.last - src.span.first];
                    let os = &mut out[offset + common.first - s.first..=offset + common.last - s.first];
                    accumulate(&taps, &num, common, xs, os);
                }
                offset += s.len();
            }
        }
        Ok(())
    }

    /// Mean received power per time-domain sample over the first
    /// `num_symbols` symbols, `sum |Y|^2 / N` averaged over symbols.
    pub fn signal_power(&mut self, num_symbols: usize) -> Result<f64> {
        if num_symbols == 0 {
            return Err(invalid("need at least one symbol"));
        }
        let span = [self.occupied_span()];
        let n = self.scenario.numerology.fft_size as f64;
        let mut col = Vec::new();
        let mut total = 0.0;
        for m in 0..num_symbols {
            self.clean_column(m, &span, &mut col)?;
            total += col.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        }
        Ok(total / num_symbols as f64)
    }

    /// Enables AWGN at `snr_db` relative to `signal_power`; `+inf` disables it.
    pub fn set_noise(&mut self, snr_db: f64, signal_power: f64) -> Result<()> {
        if snr_db == f64::INFINITY {
            self.noise = None;
            return Ok(());
        }
        if !snr_db.is_finite() {
            return Err(invalid("SNR must be finite or +inf"));
        }
        if !(signal_power > 0.0) {
            return Err(invalid("signal power is zero, SNR undefined"));
        }
        let variance = signal_power / 10f64.powf(snr_db / 10.0);
        let noise = CellNoise::new(
            self.scenario.noise_seed(self.rx),
            0,
            self.scenario.numerology.fft_size,
        );
        self.noise = Some((noise, variance.sqrt()));
        Ok(())
    }

    /// Applies the receiver's configured SNR and returns the noise variance.
    ///
    /// The SNR refers to the power this receiver sees in SBFD mode over the
    /// whole run, so one node has the same noise floor in every mode.
    pub fn calibrate(&mut self) -> Result<f64> {
        let p = if self.scenario.mode == Mode::Sbfd {
            self.signal_power(self.scenario.num_symbols())?
        } else {
            let reference = Scenario::with_mode(&self.scenario.file, Mode::Sbfd, self.scenario.run)?;
            let tx = transmitters(&reference)?;
            ReceiveModel::new(&reference, self.rx, &tx).signal_power(reference.num_symbols())?
        };
        self.set_noise(self.scenario.node(self.rx).snr_db, p)?;
        Ok(self.noise_variance())
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise.as_ref().map_or(0.0, |(_, s)| s * s)
    }

    /// Received values of symbol `m` on `spans`, noise included.
    pub fn column(&mut self, m: usize, spans: &[RowSpan], out: &mut Vec<Complex64>) -> Result<()> {
        self.clean_column(m, spans, out)?;
        if let Some((noise, sigma)) = &mut self.noise {
            let mut offset = 0;
            for s in spans {
                noise.seek(m, s.first - 1);
                for v in &mut out[offset..offset + s.len()] {
                    *v += noise.next_unit() * *sigma;
                }
                offset += s.len();
            }
        }
        Ok(())
    }

    /// Received grid on `span` for symbols `start..start + len`.
    pub fn grid(&mut self, span: RowSpan, start: usize, len: usize) -> Result<SymbolGrid> {
        let mut values = Vec::with_capacity(span.len() * len);
        let mut col = Vec::new();
        for m in start..start + len {
            self.column(m, &[span], &mut col)?;
            values.extend_from_slice(&col);
        }
        SymbolGrid::from_columns(self.scenario.numerology_for(self.rx), span.rows(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::scenario::tests::minimal;
    use crate::channel::{transmitters, PathKind};
    use crate::waveform::{modulate, OfdmNumerology};

    fn random_buffer(symbols: usize, seed: u64) -> IqBuffer {
        let num = OfdmNumerology::default();
        let mut noise = CellNoise::new(seed, 9, num.fft_size);
        noise.seek(0, 0);
        let samples = (0..symbols * num.symbol_samples()).map(|_| noise.next_unit()).collect();
        IqBuffer::new(num, samples, 0.0)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_and_linearity() {
        // a CP-consistent buffer so frequency-domain filtering is lossless
        let s = minimal(Mode::Sbfd);
        let mut tx = transmitters(&s).unwrap();
        let g = tx[2].grid(s.numerology, 0, 3).unwrap();
        let b = modulate(&g);
        let same = apply_taps(&b, |_, _| Ok(vec![PathTap::fixed(0.0, 1.0)])).unwrap();
        assert!(max_diff(&same.samples, &b.samples) < 1e-12);
        let twice = apply_taps(&b, |_, _| Ok(vec![PathTap::fixed(0.0, 1.0); 2])).unwrap();
        let doubled: Vec<Complex64> = b.samples.iter().map(|v| v * 2.0).collect();
        assert!(max_diff(&twice.samples, &doubled) < 1e-12);
    }

    #[test]
    fn integer_delay_is_a_circular_shift() {
        let b = random_buffer(2, 1);
        let num = b.numerology;
        let d = 7;
        let out = apply_taps(&b, |_, _| Ok(vec![PathTap::fixed(d as f64 / num.sample_rate, 1.0)])).unwrap();
        let p = num.symbol_samples();
        let cp = num.cp_samples;
        for m in 0..2 {
            let body_in = &b.samples[m * p + cp..(m + 1) * p];
            let body_out = &out.samples[m * p + cp..(m + 1) * p];
            for t in 0..num.fft_size {
                let src = body_in[(t + num.fft_size - d) % num.fft_size];
                assert!((body_out[t] - src).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn doppler_rotation_on_dc_tone() {
        let num = OfdmNumerology::default();
        let mut g = SymbolGrid::zeros(num, 8);
        for m in 0..8 {
            g.column_mut(m)[num.dc_bin() - 1] = Complex64::new(1.0, 0.0);
        }
        let b = modulate(&g);
        let fd = 100.0;
        let out = apply_taps(&b, |_, t| Ok(vec![PathTap::rotating(0.0, fd, Complex64::new(1.0, 0.0), t)])).unwrap();
        let engine = OfdmEngine::new(num);
        let p = num.symbol_samples();
        let mut col = vec![ZERO; num.fft_size];
        let mut phases = Vec::new();
        for m in 0..8 {
            engine.demodulate_symbol(&out.samples[m * p..(m + 1) * p], &mut col);
            phases.push(col[num.dc_bin() - 1].arg());
        }
        let expected = TAU * fd * num.symbol_duration();
        for w in phases.windows(2) {
            let step = (Complex64::cis(w[1]) / Complex64::cis(w[0])).arg();
            assert!((step - expected).abs() < 1e-3);
        }
    }

    #[test]
    fn unit_tap_preserves_symbol_energy() {
        let b = random_buffer(3, 2);
        let num = b.numerology;
        let out = apply_taps(&b, |_, _| Ok(vec![PathTap::fixed(13.37e-9, 1.0)])).unwrap();
        let p = num.symbol_samples();
        for m in 0..3 {
            let e_in: f64 = b.samples[m * p + num.cp_samples..(m + 1) * p].iter().map(|v| v.norm_sqr()).sum();
            let e_out: f64 = out.samples[m * p + num.cp_samples..(m + 1) * p].iter().map(|v| v.norm_sqr()).sum();
            assert!((e_out / e_in - 1.0).abs() < 1e-6);
        }
    }

    fn tx_buffers(s: &Scenario, symbols: usize) -> Vec<IqBuffer> {
        transmitters(s)
            .unwrap()
            .iter_mut()
            .map(|t| modulate(&t.grid(s.numerology, 0, symbols).unwrap()))
            .collect()
    }

    #[test]
    fn superposition_over_transmitters() {
        let s = minimal(Mode::SameBand);
        let bufs = tx_buffers(&s, 3);
        let all = propagate(&bufs, &s, NodeId::Node2).unwrap();
        let zero = IqBuffer::new(s.numerology, vec![ZERO; bufs[0].len()], 0.0);
        let mut sum = vec![ZERO; bufs[0].len()];
        for i in 0..3 {
            let mut only = vec![zero.clone(), zero.clone(), zero.clone()];
            only[i] = bufs[i].clone();
            let part = propagate(&only, &s, NodeId::Node2).unwrap();
            sum.iter_mut().zip(&part.samples).for_each(|(a, b)| *a += b);
        }
        let scale = all.samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_diff(&all.samples, &sum) / scale < 1e-9);
    }

    #[test]
    fn multiband_ignores_other_carriers() {
        let s = minimal(Mode::Multiband);
        let bufs = tx_buffers(&s, 2);
        let zero = IqBuffer::new(s.numerology, vec![ZERO; bufs[0].len()], 0.0);
        let with = propagate(&bufs, &s, NodeId::Node1).unwrap();
        let without = propagate(&[bufs[0].clone(), zero.clone(), zero], &s, NodeId::Node1).unwrap();
        assert_eq!(with.samples, without.samples);
        assert_eq!(with.numerology.center_frequency, 6.74e9);
    }

    #[test]
    fn mismatched_buffers_are_rejected() {
        let s = minimal(Mode::Sbfd);
        let mut bufs = tx_buffers(&s, 2);
        bufs[1].samples.truncate(2560);
        assert!(propagate(&bufs, &s, NodeId::Node1).is_err());
        assert!(propagate(&bufs[..2], &s, NodeId::Node1).is_err());
    }

    fn fast_vs_time_domain(mode: Mode) {
        let mut f = minimal(mode).file;
        f.nodes[1].start_offset_samples = 5;
        f.nodes[2].start_offset_samples = 2;
        let s = Scenario::with_mode(&f, mode, 0).unwrap();
        let symbols = 4;
        let bufs = tx_buffers(&s, symbols);
        let engine = OfdmEngine::new(s.numerology);
        let p = s.numerology.symbol_samples();
        for rx in NodeId::ALL {
            let td = propagate(&bufs, &s, rx).unwrap();
            let mut model = ReceiveModel::new(&s, rx, &transmitters(&s).unwrap());
            let full = RowSpan::full(&s.numerology);
            let fast = model.grid(full, 0, symbols).unwrap();
            let mut col = vec![ZERO; s.numerology.fft_size];
            for m in 0..symbols {
                engine.demodulate_symbol(&td.samples[m * p..(m + 1) * p], &mut col);
                assert!(max_diff(&col, fast.column(m)) < 1e-9, "{mode} {rx} symbol {m}");
            }
        }
    }

    #[test]
    fn fast_path_matches_time_domain_sbfd() {
        fast_vs_time_domain(Mode::Sbfd);
    }

    #[test]
    fn fast_path_matches_time_domain_full_band() {
        fast_vs_time_domain(Mode::SameBand);
        fast_vs_time_domain(Mode::Multiband);
    }

    #[test]
    fn noise_is_address_based_and_scaled() {
        let s = minimal(Mode::Sbfd);
        let tx = transmitters(&s).unwrap();
        let mut model = ReceiveModel::new(&s, NodeId::Node1, &tx);
        let p = model.signal_power(20).unwrap();
        model.set_noise(0.0, p).unwrap();
        assert!((model.noise_variance() - p).abs() < 1e-15);
        let a = RowSpan::new(65, 662);
        let b = RowSpan::new(1387, 1984);
        let mut both = Vec::new();
        let mut one = Vec::new();
        model.column(7, &[a, b], &mut both).unwrap();
        model.column(7, &[b], &mut one).unwrap();
        assert_eq!(&both[a.len()..], &one[..]);
        assert!(model.set_noise(f64::NAN, p).is_err());
        assert!(model.set_noise(10.0, 0.0).is_err());
    }

    #[test]
    fn echo_tap_is_present_in_paths() {
        let s = minimal(Mode::Sbfd);
        let taps = link_taps(&s, 0.0, NodeId::Node1, NodeId::Node1).unwrap();
        assert!(taps.iter().any(|t| t.kind == PathKind::TargetReflection));
    }
}
