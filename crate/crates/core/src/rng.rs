use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for item `i` under `seed`, so work on different rows
/// can run in any order and still reproduce.
pub fn stream_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
