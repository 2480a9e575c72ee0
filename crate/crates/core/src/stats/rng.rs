//! Reproducible, seekable random streams.
//!
//! A [`RandomStream`] names a ChaCha8 key (derived from `seed`) and a 64-bit
//! stream number. Sample `i` of a run reads from its own window of the
//! keystream starting at word `i << 32`, so the draws behind sample `i` do not
//! depend on how samples are split into blocks or spread across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator handed to samplers.
pub type StreamRng = ChaCha8Rng;

/// Words reserved per sample; a conditional draw in dimension `d` consumes
/// about `2d` of them.
const WORDS_PER_SAMPLE_LOG2: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator positioned at the start of the stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Generator positioned at the window reserved for sample `index`.
    pub fn rng_for_sample(&self, index: u64) -> StreamRng {
        let mut rng = self.rng();
        rng.set_word_pos((index as u128) << WORDS_PER_SAMPLE_LOG2);
        rng
    }

    /// Independent stream sharing the seed, e.g. for replication `k`.
    pub fn substream(&self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }

    /// Stream with a seed derived from this one, for nesting replications
    /// whose own stream ids are already in use.
    pub fn derive(&self, tag: u64) -> Self {
        // splitmix64 finaliser
        let mut z = self
            .seed
            .wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Self {
            seed: z ^ (z >> 31),
            stream_id: self.stream_id,
        }
    }
}

/// Reusable cursor that hands out per-sample generators without re-deriving
/// the key each time.
#[derive(Clone)]
pub struct SampleCursor {
    base: StreamRng,
}

impl SampleCursor {
    pub fn new(stream: &RandomStream) -> Self {
        Self { base: stream.rng() }
    }

    pub fn at(&self, index: u64) -> StreamRng {
        let mut rng = self.base.clone();
        rng.set_word_pos((index as u128) << WORDS_PER_SAMPLE_LOG2);
        rng
    }
}
