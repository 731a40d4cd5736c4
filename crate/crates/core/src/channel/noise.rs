use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Counter-addressed random values: the draw for `(stream, index)` depends only
/// on the seed, so any instant of a channel can be evaluated independently.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    base: ChaCha8Rng,
}

// Words reserved per index; rejection sampling rarely needs more than two u64s.
const WORDS_PER_INDEX: u128 = 16;
const INDEX_OFFSET: i128 = 1 << 62;

pub(crate) const STREAM_BASELINE: u64 = 1;
pub(crate) const STREAM_MEDIA: u64 = 2;
pub(crate) const STREAM_MEASUREMENT: u64 = 3;

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn rng(&self, stream: u64, index: i64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(stream);
        rng.set_word_pos((index as i128 + INDEX_OFFSET) as u128 * WORDS_PER_INDEX);
        rng
    }

    pub fn uniform(&self, stream: u64, index: i64) -> f64 {
        self.rng(stream, index).random::<f64>()
    }

    pub fn gaussian(&self, stream: u64, index: i64) -> f64 {
        self.rng(stream, index).sample(StandardNormal)
    }
}
