//! Seed derivation.
//!
//! All randomness flows from a single user seed. Subcomponents derive their
//! own streams from `(seed, label, index)` so that results never depend on
//! thread scheduling or on the order in which components are invoked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed for stream `label`, item `index`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let a = splitmix64(seed ^ label_hash(label));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, label: &str, index: u64) -> SimRng {
    rng_from_seed(derive_seed(seed, label, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        assert_eq!(derive_seed(7, "trial", 3), derive_seed(7, "trial", 3));
        assert_ne!(derive_seed(7, "trial", 3), derive_seed(7, "trial", 4));
        assert_ne!(derive_seed(7, "trial", 3), derive_seed(7, "gen", 3));
        assert_ne!(derive_seed(7, "trial", 3), derive_seed(8, "trial", 3));
    }

    #[test]
    fn derived_streams_reproduce() {
        let a: Vec<f64> = (0..5).map(|_| 0.0).scan(derived_rng(1, "x", 0), |r, _| Some(r.random())).collect();
        let b: Vec<f64> = (0..5).map(|_| 0.0).scan(derived_rng(1, "x", 0), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }
}
