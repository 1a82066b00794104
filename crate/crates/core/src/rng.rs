//! Deterministic stream derivation.
//!
//! Every random quantity in the crate is a pure function of (master seed, task
//! name, grid index, chunk index). The splitting rule: the task name is folded
//! to 64 bits with FNV-1a, combined with the master seed and indices through a
//! SplitMix64 finalizer chain, and the result keys a ChaCha8 stream. Distinct
//! tasks, grid points, and chunks therefore get independent streams, and the
//! same tuple always reproduces the same draws regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replicates per RNG chunk. Scans hand chunks to worker threads; results are
/// combined in chunk order, so the chunk size is part of the output contract.
pub const CHUNK: u64 = 1 << 14;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for one (task, grid index) pair under a master seed.
pub fn task_seed(master: u64, task: &str, index: u64) -> u64 {
    let mut state = master ^ fnv1a64(task).rotate_left(1);
    let a = splitmix64(&mut state);
    state ^= index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    a ^ splitmix64(&mut state)
}

/// Stream for one chunk of a task. Chunk `c` covers replicates
/// `[c * CHUNK, (c+1) * CHUNK)`.
pub fn chunk_rng(task_seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut state = task_seed;
    let mut seed = [0u8; 32];
    let lanes = [
        splitmix64(&mut state),
        splitmix64(&mut state) ^ chunk.wrapping_mul(0xD134_2543_DE82_EF95),
        splitmix64(&mut state).wrapping_add(chunk),
        splitmix64(&mut state),
    ];
    for (i, lane) in lanes.iter().enumerate() {
        seed[i * 8..(i + 1) * 8].copy_from_slice(&lane.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
