//! Named random sub-streams derived from one master seed.
//!
//! Every stochastic step draws from `substream(seed, component, index)` so
//! results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, component, index)`.
pub fn substream(seed: u64, component: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ fnv1a(component)));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, for handing a sub-stream to an API that takes a seed.
pub fn child_seed(seed: u64, component: &str, index: u64) -> u64 {
    splitmix(splitmix(seed ^ fnv1a(component)).wrapping_add(index))
}

/// Uniform draw strictly inside (0, 1).
pub fn open_uniform<R: rand::Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
