use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZcParams {
    pub length: usize,
    pub root: usize,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ZcParams {
    pub fn new(length: usize, root: usize) -> Result<Self> {
        if length < 2 || root < 1 || root >= length {
            return Err(invalid(format!("ZC root {root} must satisfy 1 <= u < L = {length}")));
        }
        if gcd(root, length) != 1 {
            return Err(invalid(format!("ZC root {root} is not coprime with length {length}")));
        }
        Ok(Self { length, root })
    }
}

/// Zadoff-Chu sequence `exp(-j*pi*u*m*(m+c)/L)` with `c = L mod 2`.
///
/// The quadratic phase index is reduced modulo `2L` in integer arithmetic so
/// long sequences keep full precision.
pub fn generate_zc(params: ZcParams) -> Result<Vec<Complex64>> {
    let ZcParams { length, root } = ZcParams::new(params.length, params.root)?;
    let l = length as u128;
    let odd = (length % 2) as u128;
    Ok((0..l)
        .map(|m| {
            let k = (root as u128 * m * (m + odd)) % (2 * l);
            Complex64::from_polar(1.0, -PI * k as f64 / length as f64)
        })
        .collect())
}
