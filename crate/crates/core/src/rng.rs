//! Counter-based randomness for CWS.
//!
//! Every `(seed, repetition, coordinate)` triple owns an independent
//! SplitMix64 stream, so the per-coordinate Gamma and uniform variates can be
//! regenerated on demand instead of stored as `D x k` matrices. Any two
//! vectors sketched with the same seed see the same variates.

use crate::numeric::mix64;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Address of one coordinate's variates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub repetition: u64,
    pub coordinate: u64,
}

impl RandomStream {
    pub fn new(seed: u64, repetition: u64, coordinate: u64) -> Self {
        Self {
            seed,
            repetition,
            coordinate,
        }
    }

    fn initial_state(&self) -> u64 {
        mix64(
            self.seed
                ^ mix64(self.repetition.wrapping_add(1))
                ^ mix64(self.coordinate.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// The 64-bit outputs of this stream.
    pub fn outputs(&self) -> SplitMix64 {
        SplitMix64 {
            state: self.initial_state(),
        }
    }
}

/// Plain SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `(0, 1]`, from the top 53 bits.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_MINUS_53
    }

    /// Uniform on `[0, 1)`, from the top 53 bits.
    #[inline]
    pub fn next_closed_open01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
    }
}

impl Iterator for SplitMix64 {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(self.next_u64())
    }
}

/// The three variates CWS needs per coordinate and repetition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwsDraw {
    /// Gamma(2, 1).
    pub r: f64,
    /// Gamma(2, 1).
    pub c: f64,
    /// Uniform on `[0, 1)`.
    pub beta: f64,
}

/// Deterministic draw for one stream address.
///
/// `r` and `c` are `-ln(U1 * U2)` with `U1, U2` uniform on `(0, 1]`; `beta`
/// uses the fifth output. The Gamma variates are clamped to the smallest
/// positive normal value, which only matters when both uniforms are exactly 1.
#[inline]
pub fn draw(stream: RandomStream) -> CwsDraw {
    let mut g = stream.outputs();
    let (u1, u2) = (g.next_open01(), g.next_open01());
    let (u3, u4) = (g.next_open01(), g.next_open01());
    let beta = g.next_closed_open01();
    CwsDraw {
        r: (-(u1 * u2).ln()).max(f64::MIN_POSITIVE),
        c: (-(u3 * u4).ln()).max(f64::MIN_POSITIVE),
        beta,
    }
}

/// Derives an independent seed for replicate `index` of an experiment.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
