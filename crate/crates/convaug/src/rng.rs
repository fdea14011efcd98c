//! Deterministic random streams.
//!
//! All randomness in the crate flows from a single root seed expanded by a
//! counter-based splitter: every subsystem asks for `(label, counter)` and
//! receives an independent, reproducible stream. Results are therefore
//! byte-identical across runs and independent of evaluation order, which the
//! concurrency in training and seed sweeps relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{sc, Scalar, Vector};

/// Splitmix64 finalizer; good avalanche, cheap, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Counter-based seed splitter rooted at a single user-facing seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedSplitter {
    root: u64,
}

impl SeedSplitter {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    /// Derives a child seed for `(label, counter)`.
    pub fn derive(&self, label: &str, counter: u64) -> u64 {
        splitmix64(self.root ^ fnv1a(label) ^ splitmix64(counter.wrapping_add(0x51ed_270b)))
    }

    /// A fresh deterministic stream for `(label, counter)`.
    pub fn stream(&self, label: &str, counter: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(label, counter))
    }
}

/// One standard-normal draw converted into the active scalar type.
///
/// Sampling always happens in `f64` so that the value sequence is identical
/// regardless of the scalar the caller instantiates.
pub fn normal<T: Scalar, R: Rng>(rng: &mut R) -> T {
    let x: f64 = rng.sample(StandardNormal);
    sc(x)
}

/// A vector of i.i.d. standard-normal entries.
pub fn normal_vector<T: Scalar, R: Rng>(rng: &mut R, dim: usize) -> Vector<T> {
    Vector::from_iterator(dim, (0..dim).map(|_| normal::<T, _>(rng)))
}

/// A uniformly random unit vector.
pub fn unit_vector<T: Scalar, R: Rng>(rng: &mut R, dim: usize) -> Vector<T> {
    loop {
        let v = normal_vector::<T, _>(rng, dim);
        let n = v.norm();
        if n > sc(1e-12) {
            return v / n;
        }
    }
}
