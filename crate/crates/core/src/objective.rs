//! Cutoff-rate objective and Monte-Carlo mutual information.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::signaling::{DifferenceSet, TransmitVectorSet};
use crate::{CMatrix, CVector, Error, Result};

/// Additive white Gaussian noise with variance `σ²` per receive antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be positive, got {variance}")));
        }
        Ok(Self { variance })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn db(&self) -> f64 {
        10.0 * self.variance.log10()
    }
}

/// Neumaier-compensated sum; the objective's terms span many decades.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `‖H P Δx‖²` for every stored unordered pair, in `diffs.pairs` order.
pub fn pair_distances(h: &CMatrix, p: &CMatrix, diffs: &DifferenceSet) -> Result<Vec<f64>> {
    if h.ncols() != p.nrows() {
        return Err(Error::dim("H·P", h.ncols(), p.nrows()));
    }
    if p.ncols() != diffs.num_streams {
        return Err(Error::dim("P·Δx", diffs.num_streams, p.ncols()));
    }
    let t = h * p;
    Ok(diffs
        .pairs
        .iter()
        .map(|pair| (&t * &pair.delta).norm_squared())
        .collect())
}

/// Full symmetric matrix `F[i,j] = ‖H P (x_i - x_j)‖²`.
pub fn pairwise_distances(h: &CMatrix, p: &CMatrix, diffs: &DifferenceSet) -> Result<DMatrix<f64>> {
    let per_pair = pair_distances(h, p, diffs)?;
    Ok(distance_matrix(diffs, &per_pair))
}

pub(crate) fn distance_matrix(diffs: &DifferenceSet, per_pair: &[f64]) -> DMatrix<f64> {
    let n = diffs.num_vectors;
    let mut f = DMatrix::zeros(n, n);
    for (pair, &d) in diffs.pairs.iter().zip(per_pair) {
        f[(pair.i, pair.j)] = d;
        f[(pair.j, pair.i)] = d;
    }
    f
}

/// Pair weight `exp(-F / (4σ²))`.
#[inline]
pub fn pair_weight(distance: f64, noise_variance: f64) -> f64 {
    (-distance / (4.0 * noise_variance)).exp()
}

/// `Σ_{i,j} exp(-F[i,j] / 4σ²)` over all ordered pairs, diagonal included.
pub fn objective_f(distances: &DMatrix<f64>, noise_variance: f64) -> f64 {
    let n = distances.nrows();
    let off = compensated_sum((0..n).flat_map(|i| {
        (0..n)
            .filter(move |&j| j != i)
            .map(move |j| pair_weight(distances[(i, j)], noise_variance))
    }));
    n as f64 + off
}

/// `-log2(f / N_vec²)`.
pub fn cutoff_rate(f: f64, num_vectors: usize) -> Result<f64> {
    let n = num_vectors as f64;
    let (lower, upper) = (n, n * n);
    let slack = 1e-12 * upper;
    if !(f >= lower - slack && f <= upper + slack) {
        return Err(Error::ObjectiveOutOfBounds { f, lower, upper });
    }
    Ok(-(f / upper).log2())
}

/// Objective at one design point.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    /// Full objective `f`, diagonal pairs included.
    pub f: f64,
    /// Contribution of the off-diagonal pairs, `f - N_vec`.
    pub off_diagonal: f64,
    /// Cutoff rate in bits.
    pub r0: f64,
    pub num_vectors: usize,
    /// `F` for each unordered pair, in `DifferenceSet::pairs` order.
    pub pair_distances: Vec<f64>,
}

impl ObjectiveValue {
    pub fn distance_matrix(&self, diffs: &DifferenceSet) -> DMatrix<f64> {
        distance_matrix(diffs, &self.pair_distances)
    }
}

pub fn evaluate_objective(
    h: &CMatrix,
    p: &CMatrix,
    diffs: &DifferenceSet,
    noise_variance: f64,
) -> Result<ObjectiveValue> {
    let pair_distances = pair_distances(h, p, diffs)?;
    // each unordered pair stands for (i,j) and (j,i)
    let off_diagonal = 2.0 * compensated_sum(pair_distances.iter().map(|&d| pair_weight(d, noise_variance)));
    let n = diffs.num_vectors;
    let f = n as f64 + off_diagonal;
    let r0 = cutoff_rate(f, n)?;
    Ok(ObjectiveValue {
        f,
        off_diagonal,
        r0,
        num_vectors: n,
        pair_distances,
    })
}

/// Monte-Carlo mutual information with its standard error, both in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    pub std_error: f64,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Discrete-input mutual information for equiprobable transmit vectors.
///
/// For each transmit vector `x_i`, `num_noise_samples` noise vectors are
/// drawn and `log2 Σ_j exp(κ_ij)` averaged, with
/// `κ_ij = (-‖H P (x_i - x_j) + n‖² + ‖n‖²) / σ²`. Everything is evaluated in
/// noise-normalized units and the inner sum uses log-sum-exp. One sub-seed per
/// transmit vector is drawn from `rng` up front, so the result is independent
/// of thread scheduling and two calls with equally seeded generators share
/// their noise draws.
pub fn mutual_information_mc<R: Rng + ?Sized>(
    h: &CMatrix,
    p: &CMatrix,
    vectors: &TransmitVectorSet,
    noise_variance: f64,
    rng: &mut R,
    num_noise_samples: usize,
) -> Result<MiEstimate> {
    if num_noise_samples == 0 {
        return Err(Error::InvalidArgument("need at least one noise sample".into()));
    }
    if h.ncols() != p.nrows() || p.ncols() != vectors.num_streams {
        return Err(Error::dim("H·P·x", format!("{}x{} · {}", h.ncols(), p.ncols(), vectors.num_streams), format!("{}x{}", p.nrows(), p.ncols())));
    }
    let n_vec = vectors.len();
    let scale = 1.0 / noise_variance.sqrt();
    let t = h * p;
    let received: Vec<CVector> = vectors.vectors.iter().map(|x| &t * x * crate::C64::from(scale)).collect();
    let seeds: Vec<u64> = (0..n_vec).map(|_| rng.random()).collect();
    let nr = h.nrows();

    let per_vector: Vec<(f64, f64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            let deltas: Vec<CVector> = received.iter().map(|y| &received[i] - y).collect();
            let mut kappa = vec![0.0; n_vec];
            let mut samples = Vec::with_capacity(num_noise_samples);
            for _ in 0..num_noise_samples {
                let w = CVector::from_fn(nr, |_, _| complex_gaussian(&mut local, 1.0));
                let w_energy = w.norm_squared();
                for (k, d) in kappa.iter_mut().zip(&deltas) {
                    *k = -(d + &w).norm_squared() + w_energy;
                }
                samples.push(log_sum_exp(&kappa) / std::f64::consts::LN_2);
            }
            let s = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / s;
            let var = if samples.len() > 1 {
                samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)
            } else {
                0.0
            };
            (mean, var / s)
        })
        .collect();

    let n = n_vec as f64;
    let mean_term = per_vector.iter().map(|(m, _)| m).sum::<f64>() / n;
    let var_of_mean = per_vector.iter().map(|(_, v)| v).sum::<f64>() / (n * n);
    Ok(MiEstimate {
        bits: n.log2() - mean_term,
        std_error: var_of_mean.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signaling::{build_constellation, build_differences, enumerate_vectors, ConstellationKind};
    use crate::C64;
    use rand_chacha::ChaCha20Rng;

    fn bpsk_scalar() -> (TransmitVectorSet, DifferenceSet) {
        let c = build_constellation(ConstellationKind::Psk, 2).unwrap();
        let v = enumerate_vectors(&c, 1, 16).unwrap();
        let d = build_differences(&v);
        (v, d)
    }

    fn one() -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(1.0, 0.0))
    }

    fn random_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| complex_gaussian(rng, 1.0))
    }

    #[test]
    fn noise_db_conversion() {
        let n = NoiseModel::from_db(-110.0).unwrap();
        assert!((n.variance / 1e-11 - 1.0).abs() < 1e-12);
        assert!((n.db() + 110.0).abs() < 1e-9);
        assert!(NoiseModel::new(0.0).is_err());
    }

    #[test]
    fn scalar_bpsk_distances() {
        let (_, d) = bpsk_scalar();
        let f = pairwise_distances(&one(), &one(), &d).unwrap();
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]));
    }

    #[test]
    fn distances_match_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let v = enumerate_vectors(&c, 2, 4096).unwrap();
        let d = build_differences(&v);
        let h = random_matrix(&mut rng, 2, 2);
        let p = random_matrix(&mut rng, 2, 2);
        let f = pairwise_distances(&h, &p, &d).unwrap();
        for i in 0..v.len() {
            assert_eq!(f[(i, i)], 0.0);
            for j in 0..v.len() {
                let direct = (&h * &p * (&v.vectors[i] - &v.vectors[j])).norm_squared();
                assert!((f[(i, j)] - direct).abs() <= 1e-12 * direct.max(1.0));
                assert_eq!(f[(i, j)], f[(j, i)]);
            }
        }
    }

    #[test]
    fn scalar_bpsk_objective_and_rate() {
        let (_, d) = bpsk_scalar();
        let value = evaluate_objective(&one(), &one(), &d, 1.0).unwrap();
        let expected_f = 2.0 + 2.0 * (-1.0f64).exp();
        assert!((value.f - expected_f).abs() < 1e-12);
        assert!((value.r0 - 0.548_058_916_916_951_9).abs() < 1e-9);
        let f = pairwise_distances(&one(), &one(), &d).unwrap();
        assert!((objective_f(&f, 1.0) - expected_f).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_objective() {
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let v = enumerate_vectors(&c, 2, 4096).unwrap();
        let d = build_differences(&v);
        let value = evaluate_objective(&CMatrix::zeros(2, 2), &CMatrix::identity(2, 2), &d, 1e-11).unwrap();
        assert_eq!(value.f, 256.0);
        assert_eq!(value.r0, 0.0);
    }

    #[test]
    fn vanishing_noise_limit() {
        let (_, d) = bpsk_scalar();
        let value = evaluate_objective(&one(), &one(), &d, 1e-6).unwrap();
        assert_eq!(value.f, 2.0);
        assert_eq!(value.r0, 1.0);
    }

    #[test]
    fn cutoff_rate_bounds() {
        assert_eq!(cutoff_rate(16.0, 4).unwrap(), 0.0);
        assert_eq!(cutoff_rate(4.0, 4).unwrap(), 2.0);
        assert!(matches!(cutoff_rate(3.0, 4), Err(Error::ObjectiveOutOfBounds { .. })));
        assert!(cutoff_rate(17.0, 4).is_err());
        assert!(cutoff_rate(f64::NAN, 4).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-17, 1000));
        assert!((compensated_sum(values) - (1.0 + 1e-14)).abs() < 1e-16);
    }

    #[test]
    fn mi_is_zero_without_channel() {
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let v = enumerate_vectors(&c, 2, 4096).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mi = mutual_information_mc(&CMatrix::zeros(2, 2), &CMatrix::identity(2, 2), &v, 1e-11, &mut rng, 50).unwrap();
        assert!(mi.bits.abs() < 1e-12);
        assert!(mi.std_error < 1e-12);
    }

    #[test]
    fn mi_saturates_at_high_snr() {
        let (v, _) = bpsk_scalar();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mi = mutual_information_mc(&one(), &one(), &v, 1e-4, &mut rng, 200).unwrap();
        assert!((mi.bits - 1.0).abs() < 1e-9);
    }

    /// Binary-input AWGN mutual information by fine-grid quadrature over the
    /// real received component (the imaginary noise component cancels).
    fn biawgn_quadrature(sigma2: f64) -> f64 {
        // y = 1 + n_r, n_r ~ N(0, σ²/2); MI = 1 - E[log2(1 + exp(-4y/σ²))]
        let sd = (sigma2 / 2.0).sqrt();
        let (lo, hi, steps) = (1.0 - 12.0 * sd, 1.0 + 12.0 * sd, 200_000);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for k in 0..=steps {
            let y = lo + k as f64 * h;
            let pdf = (-(y - 1.0).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            let z = -4.0 * y / sigma2;
            let log_term = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            acc += w * pdf * log_term / std::f64::consts::LN_2;
        }
        1.0 - acc * h
    }

    #[test]
    fn mi_matches_quadrature_for_bpsk() {
        let oracle = biawgn_quadrature(1.0);
        let (v, _) = bpsk_scalar();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mi = mutual_information_mc(&one(), &one(), &v, 1.0, &mut rng, 20_000).unwrap();
        assert!(
            (mi.bits - oracle).abs() < 3.0 * mi.std_error,
            "estimate {} ± {}, oracle {oracle}",
            mi.bits,
            mi.std_error
        );
        // and the cutoff rate sits below
        assert!(0.548_058_916_916_951_9 < oracle);
    }

    #[test]
    fn mi_is_reproducible_with_equal_seeds() {
        let (v, _) = bpsk_scalar();
        let a = mutual_information_mc(&one(), &one(), &v, 0.5, &mut ChaCha20Rng::seed_from_u64(9), 100).unwrap();
        let b = mutual_information_mc(&one(), &one(), &v, 0.5, &mut ChaCha20Rng::seed_from_u64(9), 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_channel_does_not_increase_objective() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let v = enumerate_vectors(&c, 2, 4096).unwrap();
        let d = build_differences(&v);
        let h = random_matrix(&mut rng, 2, 2);
        let p = random_matrix(&mut rng, 2, 2);
        let base = evaluate_objective(&h, &p, &d, 2.0).unwrap();
        let scaled = evaluate_objective(&(&h * C64::from(1.7)), &p, &d, 2.0).unwrap();
        assert!(scaled.f <= base.f);
        assert!(scaled.r0 >= base.r0);
    }

    #[test]
    fn permuting_vectors_leaves_objective_unchanged() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let v = enumerate_vectors(&c, 2, 4096).unwrap();
        let mut shuffled = v.clone();
        shuffled.vectors.reverse();
        shuffled.vectors.swap(2, 7);
        let h = random_matrix(&mut rng, 2, 2);
        let p = random_matrix(&mut rng, 2, 2);
        let a = evaluate_objective(&h, &p, &build_differences(&v), 0.8).unwrap();
        let b = evaluate_objective(&h, &p, &build_differences(&shuffled), 0.8).unwrap();
        assert!((a.f - b.f).abs() < 1e-12 * a.f);
    }
}
