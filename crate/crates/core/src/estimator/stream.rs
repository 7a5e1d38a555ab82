use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOOTSTRAP_DOMAIN: u64 = 0x626f_6f74_7374_7270;
const PRUNING_DOMAIN: u64 = 0x7072_756e_696e_6721;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key_from(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Counter-based stream addressed by `(master_seed, stream_id)`.
///
/// Distinct ids give independent sequences, so sample `i` can be drawn from
/// stream `i` on any thread.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key_from(master_seed));
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// Streams for bootstrap resampling, disjoint from the sample streams.
    pub fn bootstrap(master_seed: u64, stream_id: u64) -> Self {
        Self::new(master_seed ^ BOOTSTRAP_DOMAIN, stream_id)
    }

    /// Streams for pruning masks, disjoint from the sample streams.
    pub fn pruning(master_seed: u64, stream_id: u64) -> Self {
        Self::new(master_seed ^ PRUNING_DOMAIN, stream_id)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`, unbiased.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.rng.next_u64();
            if v <= zone {
                return (v % n) as usize;
            }
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
