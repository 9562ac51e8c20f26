use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The simulation generator: counter-based, seedable and splittable into streams.
pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` of the master `seed`.
///
/// Streams of one seed are independent, so trial `i` of an experiment can
/// run on `stream_rng(seed, i)` in any order and on any thread.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
