//! Reproducible Rademacher sign draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// `+1`/`-1` values indexed by points of `Z^n`, fixed by a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignSequence {
    Random { seed: u64 },
    /// Every draw is `+1`.
    Ones,
}

impl SignSequence {
    pub fn new(seed: u64) -> Self {
        Self::Random { seed }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Random { seed } => Some(*seed),
            Self::Ones => None,
        }
    }

    /// The sign attached to `index`; each index owns its own ChaCha stream.
    pub fn draw(&self, index: &[i64]) -> f64 {
        match self {
            Self::Ones => 1.0,
            Self::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(stream_id(index));
                if rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Independent sequence for trial `t` of a Monte-Carlo run.
    pub fn trial(&self, t: u64) -> Self {
        match self {
            Self::Ones => Self::Ones,
            Self::Random { seed } => Self::Random {
                seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t.wrapping_add(1)),
            },
        }
    }
}

fn stream_id(index: &[i64]) -> u64 {
    index.iter().fold(0xCBF2_9CE4_8422_2325u64, |h, &k| {
        (h ^ k as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
