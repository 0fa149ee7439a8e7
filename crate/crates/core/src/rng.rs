//! Seed derivation for independent random substreams.
//!
//! Every stream is a `ChaCha8Rng` seeded from a 64-bit value obtained by
//! folding a list of integers through the SplitMix64 finalizer:
//!
//! ```text
//! h = 0x243F6A8885A308D3
//! for part in parts: h = splitmix64(h ^ part)
//! ```
//!
//! The Monte-Carlo harness derives a trial seed as
//! `derive_seed(&[master_seed, environment_arm, trial_index, attempt])`,
//! and an environment derives `derive_seed(&[seed, STREAM_*])` for each of
//! its maps. ChaCha output is specified bit-for-bit, so streams are stable
//! across platforms and thread schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Substream tag for the analyte distribution map.
pub const STREAM_DISTRIBUTION: u64 = 1;
/// Substream tag for the obstacle map.
pub const STREAM_OBSTACLES: u64 = 2;
/// Substream tag for per-trial uniform parameter draws.
pub const STREAM_PARAMS: u64 = 3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |h, &p| splitmix64(h ^ p))
}

pub fn stream(parts: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}
