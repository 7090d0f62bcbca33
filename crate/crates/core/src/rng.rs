//! Counter-based randomness.
//!
//! Brownian nodes and ensemble paths never share a sequential generator:
//! every draw is a pure function of `(seed, key)`, so results do not depend
//! on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed.
#[inline]
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variate determined entirely by `key` (Box-Muller).
#[inline]
pub fn hashed_normal(key: u64) -> f64 {
    let a = splitmix64(key);
    let b = splitmix64(a);
    let u1 = open_unit(a);
    let u2 = open_unit(b);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential stream for path `index` under `master` seed.
pub fn path_stream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashed_normals_have_unit_moments() {
        let n = 200_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let z = hashed_normal(mix(7, i));
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
        let n = n as f64;
        assert!((s1 / n).abs() < 4.0 / n.sqrt());
        assert!((s2 / n - 1.0).abs() < 4.0 * 2f64.sqrt() / n.sqrt());
        assert!((s4 / n - 3.0).abs() < 0.1);
    }

    #[test]
    fn mix_separates_neighbouring_indices() {
        assert_ne!(mix(1, 0), mix(1, 1));
        assert_ne!(mix(0, 1), mix(1, 0));
        assert_eq!(mix(42, 3), mix(42, 3));
    }
}
