//! Seeded random profiles on [0, 1] with denominators dividing 10^6.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{feasible, Instance};
use crate::rational::Rational;

pub const GRID: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomModel {
    Uniform,
    /// Three random centres, each agent near one of them.
    Clustered,
}

impl fmt::Display for RandomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomModel::Uniform => "uniform",
            RandomModel::Clustered => "clustered",
        })
    }
}

impl FromStr for RandomModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(RandomModel::Uniform),
            "clustered" => Ok(RandomModel::Clustered),
            other => Err(Error::Malformed(format!("unknown random model {other:?}"))),
        }
    }
}

/// Largest jitter around a cluster centre, in units of 10^-6.
const JITTER: i64 = 2_000;

/// A point of the 10^-6 grid on [0, 1].
pub fn grid_point<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    Rational::new(rng.random_range(0..=GRID), GRID)
}

/// `n` locations drawn from `model`.
pub fn random_locations<R: Rng + ?Sized>(n: usize, model: RandomModel, rng: &mut R) -> Vec<Rational> {
    match model {
        RandomModel::Uniform => (0..n).map(|_| grid_point(rng)).collect(),
        RandomModel::Clustered => {
            let centres: [i64; 3] = std::array::from_fn(|_| rng.random_range(0..=GRID));
            (0..n)
                .map(|_| {
                    let c = centres[rng.random_range(0..3)];
                    let v = (c + rng.random_range(-JITTER..=JITTER)).clamp(0, GRID);
                    Rational::new(v, GRID)
                })
                .collect()
        }
    }
}

/// Deterministic in `seed`; requires a mechanism-feasible `(n, z)`.
pub fn gen_random(n: usize, z: usize, model: RandomModel, seed: u64) -> Result<Instance> {
    if !feasible(n, z) {
        return Err(Error::Infeasible { n, z });
    }
    gen_random_any(n, z, model, seed)
}

/// As [`gen_random`] for any `z < n`.
pub fn gen_random_any(n: usize, z: usize, model: RandomModel, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::new(random_locations(n, model, &mut rng), z)
}

/// Independent per-index seed, so results do not depend on scheduling.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finaliser over the combined input
    let mut x = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
