//! Seed derivation and counter-addressed random streams.
//!
//! The simulator needs noise and payload bits that can be regenerated for any
//! (symbol, subcarrier) cell without replaying the whole run, so that results
//! do not depend on processing order or on which subband is being examined.
//! Both streams are ChaCha8 keyed by a derived seed and addressed by word
//! position.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to derive independent seeds from a base seed.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian samples addressed by (symbol, bin).
///
/// Each cell consumes exactly four 32-bit words, so a cell's value depends
/// only on its address.
#[derive(Clone)]
pub struct CellNoise {
    rng: ChaCha8Rng,
    bins_per_symbol: u128,
}

impl CellNoise {
    pub fn new(seed: u64, stream: u64, bins_per_symbol: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            bins_per_symbol: bins_per_symbol as u128,
        }
    }

    /// Positions the stream at cell `(symbol, bin)`; subsequent calls to
    /// [`CellNoise::next_unit`] return consecutive bins.
    pub fn seek(&mut self, symbol: usize, bin: usize) {
        let cell = symbol as u128 * self.bins_per_symbol + bin as u128;
        self.rng.set_word_pos(cell * 4);
    }

    /// Unit-variance complex Gaussian (E|z|^2 = 1), Box-Muller.
    pub fn next_unit(&mut self) -> Complex64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // (0, 1] so ln never sees zero.
        let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        Complex64::new(r * c, r * s)
    }
}

/// Payload bits addressed by symbol index.
#[derive(Clone)]
pub struct SymbolBits {
    rng: ChaCha8Rng,
    bits_per_symbol: usize,
}

impl SymbolBits {
    pub fn new(seed: u64, stream: u64, bits_per_symbol: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, bits_per_symbol }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    fn words_per_symbol(&self) -> usize {
        self.bits_per_symbol.div_ceil(32)
    }

    /// Writes the bits of `symbol` (values 0/1) into `out`.
    pub fn fill(&mut self, symbol: usize, out: &mut [u8]) {
        assert_eq!(out.len(), self.bits_per_symbol);
        self.rng
            .set_word_pos(symbol as u128 * self.words_per_symbol() as u128);
        for chunk in out.chunks_mut(32) {
            let word = self.rng.next_u32();
            for (i, b) in chunk.iter_mut().enumerate() {
                *b = ((word >> i) & 1) as u8;
            }
        }
    }

    pub fn symbol(&mut self, symbol: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.bits_per_symbol];
        self.fill(symbol, &mut out);
        out
    }
}
