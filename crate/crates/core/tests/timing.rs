//! Empirical cost of the pair sum against its `N_vec²` model.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sim_hmimo::channel::complex_gaussian;
use sim_hmimo::objective::evaluate_objective;
use sim_hmimo::signaling::{build_constellation, build_differences, enumerate_vectors, ConstellationKind};
use sim_hmimo::CMatrix;

/// Fastest of several timed evaluations, in seconds.
fn pair_sum_time(order: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let h = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng, 1.0));
    let p = CMatrix::identity(2, 2);
    let vectors = enumerate_vectors(&build_constellation(ConstellationKind::Psk, order).unwrap(), 2, 4096).unwrap();
    let diffs = build_differences(&vectors);
    (0..25)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(evaluate_objective(&h, &p, &diffs, 1.0).unwrap());
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn pair_sum_grows_quadratically_in_vector_count() {
    // 64 -> 256 transmit vectors: the model predicts x16
    let ratio = pair_sum_time(16) / pair_sum_time(8);
    assert!((8.0..=32.0).contains(&ratio), "time ratio {ratio:.2}, expected 16 within x2");
}
