//! Hierarchical, schedule-independent random streams.
//!
//! A [`RngStream`] is a 256-bit key. Child streams are derived by
//! mixing a tag (replication index, resample index, domain constant) into the
//! parent key, so every random draw in a simulation is addressed by its path
//! `(seed, cell, replication, ...)` and not by the order in which worker
//! threads happen to run. Each key seeds its own Xoshiro256++ generator.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator handed out by [`RngStream::rng`].
pub type StreamRng = Xoshiro256PlusPlus;

/// Domain tags for the independent sub-streams of one replication.
pub mod domain {
    pub const SAMPLE: u64 = 0x5341_4d50;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const SMOOTH: u64 = 0x534d_4f4f;
    pub const STUDENTIZED: u64 = 0x5354_5544;
    pub const DOUBLE: u64 = 0x444f_5542;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const CELL: u64 = 0x4345_4c4c;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    key: [u64; 4],
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u64; 4];
        let mut state = seed;
        for word in key.iter_mut() {
            state = state.wrapping_add(GOLDEN);
            *word = splitmix(state);
        }
        RngStream { key }
    }

    /// Child stream addressed by `tag`. Distinct tags give unrelated keys.
    pub fn derive(&self, tag: u64) -> Self {
        let t = splitmix(tag ^ 0xA076_1D64_78BD_642F);
        let mut key = [0u64; 4];
        for (i, word) in key.iter_mut().enumerate() {
            *word = splitmix(self.key[i] ^ t.rotate_left(16 * i as u32) ^ (i as u64).wrapping_mul(GOLDEN));
        }
        RngStream { key }
    }

    /// Child stream addressed by a string label (cell keys, method names).
    pub fn derive_str(&self, label: &str) -> Self {
        self.derive(fnv1a(label.as_bytes()))
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Xoshiro256PlusPlus::from_seed(seed)
    }
}

/// Fills `out` with independent uniform indices in `0..n`.
///
/// Two 32-bit Lemire draws are taken from each 64-bit output; the rejection
/// step keeps the distribution exactly uniform.
pub fn fill_indices<R: RngCore + ?Sized>(rng: &mut R, n: u32, out: &mut [u32]) {
    assert!(n > 0, "index range must be non-empty");
    let threshold = n.wrapping_neg() % n;
    let mut word = 0u64;
    let mut halves = 0u32;
    for slot in out.iter_mut() {
        loop {
            if halves == 0 {
                word = rng.next_u64();
                halves = 2;
            }
            let m = (word & 0xffff_ffff) * u64::from(n);
            word >>= 32;
            halves -= 1;
            if (m as u32) >= threshold {
                *slot = (m >> 32) as u32;
                break;
            }
        }
    }
}

/// 64-bit FNV-1a; stable across platforms and compiler versions.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_draws() {
        let a = RngStream::new(7).derive(3).derive(domain::SAMPLE);
        let b = RngStream::new(7).derive(3).derive(domain::SAMPLE);
        let xa: Vec<u64> = (0..8)
            .map({
                let mut r = a.rng();
                move |_| r.random()
            })
            .collect();
        let xb: Vec<u64> = (0..8)
            .map({
                let mut r = b.rng();
                move |_| r.random()
            })
            .collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn sibling_streams_differ() {
        let root = RngStream::new(7);
        assert_ne!(root.derive(0), root.derive(1));
        assert_ne!(root.derive(1).derive(0), root.derive(0).derive(1));
        assert_ne!(RngStream::new(1), RngStream::new(2));
    }

    #[test]
    fn indices_cover_range_uniformly() {
        let mut rng = RngStream::new(11).rng();
        let mut idx = vec![0u32; 60_000];
        fill_indices(&mut rng, 3, &mut idx);
        let mut counts = [0usize; 3];
        for &i in &idx {
            counts[i as usize] += 1;
        }
        // each count ~ Binomial(60000, 1/3): sd ≈ 115
        for c in counts {
            assert!((c as f64 - 20_000.0).abs() < 5.0 * 115.5, "{counts:?}");
        }
        fill_indices(&mut rng, 1, &mut idx[..10]);
        assert!(idx[..10].iter().all(|&i| i == 0));
    }

    #[test]
    fn fnv_reference_value() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
