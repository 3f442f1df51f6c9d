//! Indexable random substreams derived from a single master seed.
//!
//! Every replicate, split or pair block gets its own stream keyed by its
//! index, so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream number `index`. Children of distinct indices are
    /// statistically independent; the mapping is fixed forever.
    pub fn child(&self, index: u64) -> SeedStream {
        SeedStream { seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))) }
    }

    /// Named child, for separating purposes (e.g. "graph" vs "splits").
    pub fn fork(&self, label: &str) -> SeedStream {
        let h = label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3));
        self.child(h)
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Worker count from `LOCALDEG_THREADS`, or `None` for all cores.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("LOCALDEG_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Runs `f` inside a rayon pool sized by `LOCALDEG_THREADS` (if set).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match threads_from_env() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
