use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a sequence of stream tags (step index, epoch, purpose).
///
/// Every random draw in the crate is taken from a generator seeded this way, so
/// a draw at step `t` never depends on how many draws earlier steps made, nor
/// on anything that happens after `t`.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(base ^ 0x5eed_0f_401a_4d00);
    for &tag in tags {
        state = splitmix(state ^ splitmix(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

pub(crate) fn rng_for(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream tags, kept distinct so purposes never share a generator.
pub(crate) mod stream {
    pub const INIT: u64 = 1;
    pub const LABELS: u64 = 2;
    pub const TRAIN_NEG: u64 = 3;
}
