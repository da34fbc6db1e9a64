//! Splittable counter-based random streams.
//!
//! A stream is an immutable `(seed, stream-id)` token. Drawing from it opens
//! an [`RngCursor`], a ChaCha8 keystream whose 256-bit key is the seed in
//! little-endian order followed by 24 zero bytes, whose 64-bit stream (nonce)
//! is the stream id, and whose block counter starts at zero. 64-bit outputs
//! are consumed in keystream order, two 32-bit words per output, low word
//! first.
//!
//! Derived quantities:
//!
//! * uniform on `(0, 1]`: `((x >> 11) + 1) · 2⁻⁵³`; on `[0, 1)`: `(x >> 11) · 2⁻⁵³`.
//! * normals: Box–Muller on two consecutive outputs `x`, `y` with
//!   `u₁ = ((x >> 11) + 1) · 2⁻⁵³`, `u₂ = (y >> 11) · 2⁻⁵³`,
//!   `r = √(−2 ln u₁)`, emitting `r cos(2πu₂)` then `r sin(2πu₂)`.
//!   Transcendentals come from the pure-Rust `libm` so the bits do not depend
//!   on the platform C library.
//! * signs: one output per sign, `−1` when the top bit is set.
//! * bounded integers: Lemire's multiply-and-reject method.
//!
//! Child streams keep the seed and replace the stream id by
//! `mix(stream ^ mix(index + φ))`, where `mix` is the SplitMix64 finalizer and
//! `φ = 0x9E3779B97F4A7C15`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::matrix::RealVector;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// An immutable handle to one deterministic random sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// The `index`-th child stream.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(index.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    /// Opens a cursor positioned at the start of this stream.
    pub fn cursor(&self) -> RngCursor {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(self.stream);
        RngCursor { inner, spare: None }
    }
}

/// Sequential reader over an [`RngStream`].
pub struct RngCursor {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngCursor {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `(0, 1]`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_M53
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        let r = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }

    /// `k` distinct indices from `0..n`, sorted ascending (Floyd's algorithm).
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "subset larger than population");
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for j in n - k..n {
            let t = self.below(j as u64 + 1) as usize;
            if chosen.contains(&t) {
                chosen.push(j);
            } else {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        chosen
    }
}

/// `count` standard normal draws from the start of `r`.
pub fn rng_standard_normal(r: RngStream, count: usize) -> RealVector {
    let mut out = vec![0.0; count];
    r.cursor().fill_normal(&mut out);
    RealVector::from_vec_unchecked(out)
}
