//! Seed derivation and counter-keyed random streams.
//!
//! Every random quantity in the lab is drawn from a ChaCha stream keyed by a
//! 64-bit seed and a 64-bit stream index, so sample `i` of a dataset does not
//! depend on how many samples were drawn before it or on which worker drew it.
//!
//! Sub-seeds are derived with [`derive_seed`]: FNV-1a over the label bytes,
//! folded with the parent seed and the index through the SplitMix64
//! finaliser.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(parent, label, index)`.
pub fn derive_seed(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(splitmix64(parent ^ h) ^ splitmix64(index.wrapping_add(h)))
}

/// Random stream number `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Two independent standard normals by the Box–Muller transform.
#[inline]
pub fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = open_unit(rng);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

/// Fills `out` with standard normals, consuming pairs from `rng`.
pub fn fill_normals<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_mut(2);
    for chunk in &mut chunks {
        let (a, b) = normal_pair(rng);
        chunk[0] = a;
        if chunk.len() > 1 {
            chunk[1] = b;
        }
    }
}
