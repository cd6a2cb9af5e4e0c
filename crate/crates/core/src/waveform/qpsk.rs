use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Gray-mapped QPSK points for bit pairs 00, 01, 10, 11.
pub const QPSK_POINTS: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn map_qpsk(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(invalid(format!("QPSK needs an even bit count, got {}", bits.len())));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|p| QPSK_POINTS[((p[0] & 1) << 1 | (p[1] & 1)) as usize])
        .collect())
}

/// Nearest-point decision; for Gray QPSK that is the sign of each axis.
pub fn demap_qpsk(symbol: Complex64) -> [u8; 2] {
    [(symbol.re < 0.0) as u8, (symbol.im < 0.0) as u8]
}
