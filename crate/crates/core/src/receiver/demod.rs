use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::waveform::{IqBuffer, OfdmEngine, SubbandAllocation, SymbolGrid};

/// CP removal and forward FFT of every whole symbol in `buffer`. A trailing
/// partial symbol is dropped with a warning.
pub fn ofdm_demodulate(buffer: &IqBuffer) -> Result<SymbolGrid> {
    let num = buffer.numerology;
    let p = num.symbol_samples();
    if buffer.len() < p {
        return Err(invalid(format!("buffer of {} samples is shorter than one symbol", buffer.len())));
    }
    if buffer.len() % p != 0 {
        log::warn!("dropping {} trailing samples of a partial symbol", buffer.len() % p);
    }
    let engine = OfdmEngine::new(num);
    let symbols = buffer.len() / p;
    let mut grid = SymbolGrid::zeros(num, symbols);
    for m in 0..symbols {
        engine.demodulate_symbol(&buffer.samples[m * p..(m + 1) * p], grid.column_mut(m));
    }
    Ok(grid)
}

/// Rows of `allocation.active`; guard rows are discarded.
pub fn extract_subband(grid: &SymbolGrid, allocation: &SubbandAllocation) -> Result<SymbolGrid> {
    if grid.numerology.fft_size != allocation.fft_size {
        return Err(Error::NumerologyMismatch);
    }
    grid.select_rows(&allocation.active)
}

/// Symbol start estimate in `0..=max_offset` samples, by maximising the
/// normalised correlation between the cyclic prefix and the symbol tail,
/// summed over every whole symbol that fits after the offset.
pub fn coarse_timing(buffer: &IqBuffer, max_offset: usize) -> Result<usize> {
    let num = buffer.numerology;
    let (n, cp, p) = (num.fft_size, num.cp_samples, num.symbol_samples());
    if buffer.len() < max_offset + p {
        return Err(invalid("buffer too short for the timing search"));
    }
    let s = &buffer.samples;
    let symbols = (buffer.len() - max_offset) / p;
    let metric = |d: usize| {
        let mut corr = Complex64::new(0.0, 0.0);
        let mut energy = 0.0;
        for m in 0..symbols {
            let base = d + m * p;
            for i in base..base + cp {
                corr += s[i] * s[i + n].conj();
                energy += 0.5 * (s[i].norm_sqr() + s[i + n].norm_sqr());
            }
        }
        if energy > 0.0 {
            corr.norm() / energy
        } else {
            0.0
        }
    };
    let best = (0..=max_offset)
        .map(|d| (d, metric(d)))
        .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{build_allocation, modulate, NodeId, OfdmNumerology, Transmitter};

    fn node_grid(node: NodeId, symbols: usize) -> (SymbolGrid, SubbandAllocation) {
        let num = OfdmNumerology::default();
        let a = build_allocation(node, &num, 20).unwrap();
        let mut tx = match node {
            NodeId::Node3 => Transmitter::comm(a.clone(), 5, 3),
            _ => Transmitter::sensing(a.clone(), 7).unwrap(),
        };
        (tx.grid(num, 0, symbols).unwrap(), a)
    }

    #[test]
    fn round_trip() {
        let (g, _) = node_grid(NodeId::Node3, 4);
        let back = ofdm_demodulate(&modulate(&g)).unwrap();
        assert!(back.max_abs_diff(&g) <= 1e-10);
    }

    #[test]
    fn zero_and_short_buffers() {
        let num = OfdmNumerology::default();
        let z = IqBuffer::new(num, vec![Complex64::new(0.0, 0.0); 2 * 2560 + 100], 0.0);
        let g = ofdm_demodulate(&z).unwrap();
        assert_eq!(g.num_symbols(), 2);
        assert_eq!(g.energy(), 0.0);
        let short = IqBuffer::new(num, vec![Complex64::new(0.0, 0.0); 2000], 0.0);
        assert!(ofdm_demodulate(&short).is_err());
    }

    #[test]
    fn sample_delay_is_a_phase_ramp() {
        let (g, a) = node_grid(NodeId::Node3, 2);
        let b = modulate(&g);
        let num = b.numerology;
        let d = 9;
        let mut delayed = vec![Complex64::new(0.0, 0.0); d];
        delayed.extend_from_slice(&b.samples[..b.len() - d]);
        let rx = ofdm_demodulate(&IqBuffer::new(num, delayed, 0.0)).unwrap();
        // second symbol is fully inside the delayed capture
        for &n in &a.active {
            let ramp = Complex64::cis(-std::f64::consts::TAU * num.subcarrier_offset(n) * d as f64 / num.sample_rate);
            let y = rx.get(n, 1).unwrap();
            let x = g.get(n, 1).unwrap();
            assert!((y - x * ramp).norm() < 1e-10);
            // equalising by the ramp recovers the data
            assert!((y / ramp - x).norm() < 1e-10);
        }
    }

    #[test]
    fn extraction_rows_and_disjointness() {
        let (g, a1) = node_grid(NodeId::Node1, 1);
        let s1 = extract_subband(&g, &a1).unwrap();
        assert_eq!(s1.num_rows(), 598);
        assert_eq!(s1.rows()[0], 65);
        assert_eq!(*s1.rows().last().unwrap(), 662);
        let (_, a3) = node_grid(NodeId::Node3, 1);
        let s3 = extract_subband(&g, &a3).unwrap();
        assert!(s1.rows().iter().all(|r| !s3.rows().contains(r)));
        // node 1 transmits nothing on the node 3 subband
        assert_eq!(s3.energy(), 0.0);
    }

    #[test]
    fn coarse_timing_finds_the_offset() {
        let (g, _) = node_grid(NodeId::Node3, 6);
        let b = modulate(&g);
        let mut shifted = vec![Complex64::new(0.0, 0.0); 37];
        shifted.extend_from_slice(&b.samples);
        let buf = IqBuffer::new(b.numerology, shifted, 0.0);
        assert_eq!(coarse_timing(&buf, 100).unwrap(), 37);
    }
}
