//! Seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator seeded from a 64-bit
//! value derived here. The derivations are pure functions so runs can be
//! replayed and dispatched to worker threads in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for key `key` under `seed`: `mix64(seed + key·γ)`.
///
/// For a fixed `seed` this is injective in `key`, since multiplication by the
/// odd constant `γ` is a bijection mod 2⁶⁴ and so is `mix64`.
pub fn derive(seed: u64, key: u64) -> u64 {
    mix64(seed.wrapping_add(key.wrapping_mul(GOLDEN_GAMMA)))
}

/// Named sub-streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Contexts = 1,
    Noise = 2,
    Shuffle = 3,
    Policy = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    StreamRng::seed_from_u64(derive(seed, stream as u64))
}

/// Seeds for one (policy, run) pair.
///
/// The environment seed depends only on the run index, so every policy in an
/// experiment faces the same contexts and reward noise in its `run`-th
/// repetition. The policy seed depends on both indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub environment: u64,
    pub policy: u64,
}

impl RunSeeds {
    /// Both streams from one seed; handy for single runs and tests.
    pub fn single(seed: u64) -> Self {
        Self {
            environment: derive(seed, 0),
            policy: derive(seed, 1),
        }
    }

    /// `environment = derive(master, ENV_KEY | run)`,
    /// `policy = child_seed(master, policy_index, run)`.
    pub fn for_run(master_seed: u64, policy_index: usize, run_index: usize) -> Self {
        Self {
            environment: derive(master_seed, ENVIRONMENT_KEY | run_index as u64),
            policy: child_seed(master_seed, policy_index, run_index),
        }
    }
}

/// Policy index reserved for environment streams.
const ENVIRONMENT_KEY: u64 = 0xffff_ffff << 32;

/// Seed of the `(policy_index, run_index)` pair:
/// `derive(master, policy_index·2³² + run_index)`.
///
/// Injective over pairs with both indices below 2³² (policy index below
/// 2³² − 1, which is reserved for environment streams).
pub fn child_seed(master_seed: u64, policy_index: usize, run_index: usize) -> u64 {
    assert!(policy_index < u32::MAX as usize && run_index <= u32::MAX as usize);
    derive(master_seed, ((policy_index as u64) << 32) | run_index as u64)
}
