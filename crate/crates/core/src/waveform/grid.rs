use num_complex::Complex64;

use super::{OfdmNumerology, SubbandAllocation};
use crate::error::{invalid, Error, Result};

/// Frequency-domain symbols, one column per OFDM symbol.
///
/// `rows` lists the 1-based subcarrier held by each row in ascending order.
/// A full grid has rows `1..=fft_size`; a subband grid holds only the active
/// bins of one allocation. Storage is column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub numerology: OfdmNumerology,
    rows: Vec<usize>,
    num_symbols: usize,
    values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn zeros(numerology: OfdmNumerology, num_symbols: usize) -> Self {
        let rows = (1..=numerology.fft_size).collect();
        Self::zeros_on(numerology, rows, num_symbols)
    }

    pub fn zeros_on(numerology: OfdmNumerology, rows: Vec<usize>, num_symbols: usize) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        let values = vec![Complex64::new(0.0, 0.0); rows.len() * num_symbols];
        Self {
            numerology,
            rows,
            num_symbols,
            values,
        }
    }

    pub fn from_columns(numerology: OfdmNumerology, rows: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if rows.is_empty() || values.len() % rows.len() != 0 {
            return Err(invalid("grid values do not divide into whole columns"));
        }
        if rows.iter().any(|&n| n < 1 || n > numerology.fft_size) || rows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid rows must be ascending subcarriers within 1..=fft_size"));
        }
        let num_symbols = values.len() / rows.len();
        Ok(Self {
            numerology,
            rows,
            num_symbols,
            values,
        })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.numerology.fft_size
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn column(&self, m: usize) -> &[Complex64] {
        let r = self.rows.len();
        &self.values[m * r..(m + 1) * r]
    }

    pub fn column_mut(&mut self, m: usize) -> &mut [Complex64] {
        let r = self.rows.len();
        &mut self.values[m * r..(m + 1) * r]
    }

    /// Row index of 1-based subcarrier `n`, if present.
    pub fn row_of(&self, n: usize) -> Option<usize> {
        if self.is_full() {
            return (n >= 1 && n <= self.rows.len()).then(|| n - 1);
        }
        self.rows.binary_search(&n).ok()
    }

    /// Value on subcarrier `n` of symbol `m`.
    pub fn get(&self, n: usize, m: usize) -> Option<Complex64> {
        self.row_of(n).map(|r| self.column(m)[r])
    }

    /// Copy restricted to `rows`, which must all be present.
    pub fn select_rows(&self, rows: &[usize]) -> Result<SymbolGrid> {
        let idx: Vec<usize> = rows
            .iter()
            .map(|&n| {
                self.row_of(n)
                    .ok_or_else(|| Error::OutOfRange(format!("subcarrier {n} not present in grid")))
            })
            .collect::<Result<_>>()?;
        let mut out = SymbolGrid::zeros_on(self.numerology, rows.to_vec(), self.num_symbols);
        for m in 0..self.num_symbols {
            let src = self.column(m);
            for (dst, &i) in out.column_mut(m).iter_mut().zip(&idx) {
                *dst = src[i];
            }
        }
        Ok(out)
    }

    /// Copy of symbols `start..start + len`.
    pub fn select_symbols(&self, start: usize, len: usize) -> Result<SymbolGrid> {
        if start + len > self.num_symbols {
            return Err(Error::OutOfRange(format!(
                "symbols {start}..{} beyond grid of {}",
                start + len,
                self.num_symbols
            )));
        }
        let r = self.rows.len();
        Ok(SymbolGrid {
            numerology: self.numerology,
            rows: self.rows.clone(),
            num_symbols: len,
            values: self.values[start * r..(start + len) * r].to_vec(),
        })
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &SymbolGrid) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.num_symbols, other.num_symbols);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &SymbolGrid {
    type Output = SymbolGrid;
    fn add(self, rhs: &SymbolGrid) -> SymbolGrid {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.num_symbols, rhs.num_symbols);
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
        out
    }
}

impl std::ops::Mul<Complex64> for &SymbolGrid {
    type Output = SymbolGrid;
    fn mul(self, k: Complex64) -> SymbolGrid {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= k);
        out
    }
}

/// Full-band transmit grid: payload on data bins in ascending order, `1` on
/// pilots, zero on guards.
///
/// `payload` holds either one symbol's worth of data values (repeated in
/// every column, the sensing case) or `num_symbols` consecutive blocks (fresh
/// data per symbol, the communication case).
pub fn assemble_grid(
    allocation: &SubbandAllocation,
    numerology: OfdmNumerology,
    payload: &[Complex64],
    num_symbols: usize,
) -> Result<SymbolGrid> {
    if allocation.fft_size != numerology.fft_size {
        return Err(Error::NumerologyMismatch);
    }
    let per_symbol = allocation.data.len();
    let repeats = if payload.len() == per_symbol {
        false
    } else if payload.len() == per_symbol * num_symbols {
        true
    } else {
        return Err(Error::LengthMismatch {
            expected: per_symbol,
            actual: payload.len(),
        });
    };
    let mut grid = SymbolGrid::zeros(numerology, num_symbols);
    let one = Complex64::new(1.0, 0.0);
    for m in 0..num_symbols {
        let block = if repeats {
            &payload[m * per_symbol..(m + 1) * per_symbol]
        } else {
            payload
        };
        let col = grid.column_mut(m);
        for &p in &allocation.pilots {
            col[p - 1] = one;
        }
        for (&d, &v) in allocation.data.iter().zip(block) {
            col[d - 1] = v;
        }
    }
    Ok(grid)
}
