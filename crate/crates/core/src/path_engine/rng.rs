use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams carried by each simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Levy = 0,
    Brownian = 1,
    Lattice = 2,
}

/// Generator for `(master seed, path index, stream)`. Streams for distinct
/// triples never overlap.
pub fn path_rng(seed: u64, index: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_mul(4).wrapping_add(stream as u64));
    rng
}
