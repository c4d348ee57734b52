use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::ComplexMatrix;

/// Purposes used to key independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Bases = 1,
    TaskStructure = 2,
    SlotSample = 3,
    UeGeometry = 4,
    UeSlots = 5,
    Augment = 6,
    Baseline = 7,
    ModelInit = 8,
    Batching = 9,
    TaskOrder = 10,
    Split = 11,
}

/// Seeded, counter-based random stream.
///
/// Each `(seed, stream_id)` pair addresses an independent ChaCha keystream, so
/// workers can derive their own streams without coordination and the output
/// does not depend on scheduling order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Stream keyed by a purpose and a list of indices (task, UE, slot, ...).
    pub fn keyed(seed: u64, purpose: Purpose, indices: &[u64]) -> Self {
        Self::new(seed, stream_key(purpose, indices))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Rewinds to the start of the stream.
    pub fn reset(&mut self) {
        *self = Self::new(self.seed, self.stream_id);
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// One 𝒞𝒩(0,1) draw: real and imaginary parts each N(0, 1/2).
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.inner.sample(StandardNormal);
        let im: f64 = self.inner.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    /// Uniform sampling of `amount` elements without replacement, in draw order.
    pub fn choose_without_replacement<T: Copy>(&mut self, items: &[T], amount: usize) -> Vec<T> {
        assert!(
            amount <= items.len(),
            "cannot draw {amount} of {}",
            items.len()
        );
        rand::seq::index::sample(&mut self.inner, items.len(), amount)
            .into_iter()
            .map(|i| items[i])
            .collect()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Matrix of i.i.d. 𝒞𝒩(0,1) entries, filled row-major.
pub fn complex_gaussian(rng: &mut RngStream, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a purpose and index tuple into a 64-bit stream id.
pub fn stream_key(purpose: Purpose, indices: &[u64]) -> u64 {
    let mut h = splitmix64(purpose as u64);
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}
