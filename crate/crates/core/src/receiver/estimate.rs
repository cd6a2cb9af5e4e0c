use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::waveform::{SubbandAllocation, SymbolGrid};

/// Channel estimate on the active subcarriers, column-major by symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub rows: Vec<usize>,
    pub num_symbols: usize,
    pub response: Vec<Complex64>,
    pub allocation: SubbandAllocation,
}

impl ChannelEstimate {
    pub fn column(&self, m: usize) -> &[Complex64] {
        let r = self.rows.len();
        &self.response[m * r..(m + 1) * r]
    }

    pub fn get(&self, n: usize, m: usize) -> Option<Complex64> {
        let i = self.rows.iter().position(|&r| r == n)?;
        self.response.get(m * self.rows.len() + i).copied()
    }
}

/// Linear interpolation weights mapping pilot estimates onto every active
/// bin: `(left pilot index, right pilot index, weight of right)`. Bins
/// outside the outermost pilots hold the nearest pilot value.
pub(crate) fn interpolation_plan(allocation: &SubbandAllocation) -> Vec<(usize, usize, f64)> {
    let p = &allocation.pilots;
    allocation
        .active
        .iter()
        .map(|&n| {
            let right = p.partition_point(|&q| q < n);
            if right == 0 {
                (0, 0, 0.0)
            } else if right == p.len() {
                (p.len() - 1, p.len() - 1, 0.0)
            } else if p[right] == n {
                (right, right, 0.0)
            } else {
                let l = right - 1;
                (l, right, (n - p[l]) as f64 / (p[right] - p[l]) as f64)
            }
        })
        .collect()
}

/// Least-squares estimate `Y / X`.
///
/// With `interpolate`, only pilot bins are divided and data bins are filled
/// by linear interpolation per symbol; otherwise every bin is divided by the
/// known transmit value. `known` may hold a single column that applies to
/// every symbol.
pub fn estimate_channel(
    rx: &SymbolGrid,
    known: &SymbolGrid,
    allocation: &SubbandAllocation,
    interpolate: bool,
) -> Result<ChannelEstimate> {
    if rx.rows() != allocation.active.as_slice() || known.rows() != rx.rows() {
        return Err(Error::LengthMismatch {
            expected: allocation.active.len(),
            actual: rx.num_rows(),
        });
    }
    let broadcast = known.num_symbols() == 1;
    if !broadcast && known.num_symbols() != rx.num_symbols() {
        return Err(Error::LengthMismatch {
            expected: rx.num_symbols(),
            actual: known.num_symbols(),
        });
    }
    let first = allocation.first();
    let plan = interpolate.then(|| interpolation_plan(allocation));
    let mut response = Vec::with_capacity(rx.values().len());
    let mut pilots = vec![Complex64::new(0.0, 0.0); allocation.pilots.len()];
    for m in 0..rx.num_symbols() {
        let y = rx.column(m);
        let x = known.column(if broadcast { 0 } else { m });
        let divide = |n: usize| -> Result<Complex64> {
            let i = n - first;
            if x[i] == Complex64::new(0.0, 0.0) {
                return Err(Error::ZeroSymbol { subcarrier: n, symbol: m });
            }
            Ok(y[i] / x[i])
        };
        match &plan {
            Some(plan) => {
                for (slot, &p) in pilots.iter_mut().zip(&allocation.pilots) {
                    *slot = divide(p)?;
                }
                response.extend(plan.iter().map(|&(l, r, w)| pilots[l] * (1.0 - w) + pilots[r] * w));
            }
            None => {
                for &n in &allocation.active {
                    response.push(divide(n)?);
                }
            }
        }
    }
    Ok(ChannelEstimate {
        rows: allocation.active.clone(),
        num_symbols: rx.num_symbols(),
        response,
        allocation: allocation.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_response, PathTap, RowSpan};
    use crate::waveform::{build_allocation, NodeId, OfdmNumerology, Transmitter};

    fn setup() -> (OfdmNumerology, SubbandAllocation, SymbolGrid) {
        let num = OfdmNumerology::default();
        let a = build_allocation(NodeId::Node3, &num, 20).unwrap();
        let mut tx = Transmitter::comm(a.clone(), 3, 3);
        let x = tx.subband_grid(num, 0, 3).unwrap();
        (num, a, x)
    }

    fn apply(x: &SymbolGrid, h: &[Complex64]) -> SymbolGrid {
        let values = x
            .values()
            .chunks(h.len())
            .flat_map(|c| c.iter().zip(h).map(|(a, b)| a * b).collect::<Vec<_>>())
            .collect();
        SymbolGrid::from_columns(x.numerology, x.rows().to_vec(), values).unwrap()
    }

    #[test]
    fn identity_channel() {
        let (_, a, x) = setup();
        for interp in [false, true] {
            let est = estimate_channel(&x, &x, &a, interp).unwrap();
            assert!(est.response.iter().all(|h| (h - 1.0).norm() < 1e-9));
        }
    }

    #[test]
    fn two_tap_channel_full_grid() {
        let (num, a, x) = setup();
        let taps = [PathTap::fixed(0.0, 1.0), PathTap::fixed(200e-9, 0.4)];
        let mut h = vec![Complex64::new(0.0, 0.0); a.active.len()];
        channel_response(&taps, &num, RowSpan::of(&a), &mut h);
        let y = apply(&x, &h);
        let est = estimate_channel(&y, &x, &a, false).unwrap();
        // closed form: 1 + 0.4 exp(-j 2 pi (n - n0) df tau)
        for &n in &a.active {
            let oracle = 1.0
                + 0.4 * Complex64::cis(-std::f64::consts::TAU * (n as f64 - 1025.0) * 9765.625 * 200e-9);
            assert!((est.get(n, 2).unwrap() - oracle).norm() < 1e-6);
        }
    }

    #[test]
    fn flat_gain_interpolates_exactly() {
        let (_, a, x) = setup();
        let g = Complex64::new(0.3, -0.7);
        let y = apply(&x, &vec![g; a.active.len()]);
        let est = estimate_channel(&y, &x, &a, true).unwrap();
        assert!(est.response.iter().all(|h| (h - g).norm() < 1e-9));
    }

    #[test]
    fn zero_transmit_symbol_is_an_error() {
        let (_, a, x) = setup();
        let mut values = x.values().to_vec();
        values[5] = Complex64::new(0.0, 0.0);
        let bad = SymbolGrid::from_columns(x.numerology, x.rows().to_vec(), values).unwrap();
        assert!(matches!(
            estimate_channel(&x, &bad, &a, false),
            Err(Error::ZeroSymbol { subcarrier: 1392, symbol: 0 })
        ));
    }
}
