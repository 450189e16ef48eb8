//! Analytic gradients of the cutoff-rate objective with respect to the
//! conjugates of the precoder and of every layer's phase vector.
//!
//! All three gradients share the Hermitian `N_s x N_s` matrix
//! `S = Σ_{i,j} exp(-F_ij / 4σ²) Δx_ij Δx_ij^H`, so the pair sum is formed
//! once and the per-layer chains only ever multiply thin `N x N_t` or
//! `N_r x E` operands.

use crate::problem::{Evaluation, Problem};
use crate::signaling::DifferenceSet;
use crate::wavefield::{scale_rows, DesignPoint};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Gradients at one design point.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub grad_p: CMatrix,
    pub grad_phi: Vec<CVector>,
    pub grad_psi: Vec<CVector>,
    pub weight_sum: CMatrix,
}

/// `S = Σ_{i,j} exp(-F_ij / 4σ²) Δx_ij Δx_ij^H` over all ordered pairs.
///
/// `pair_distances` is aligned with `diffs.pairs`; diagonal pairs contribute
/// nothing.
pub fn weighted_pair_sum(pair_distances: &[f64], noise_variance: f64, diffs: &DifferenceSet) -> CMatrix {
    let ns = diffs.num_streams;
    let mut acc = CMatrix::zeros(ns, ns);
    for (pair, &d) in diffs.pairs.iter().zip(pair_distances) {
        let w = crate::objective::pair_weight(d, noise_variance);
        if w > 0.0 {
            acc += &pair.outer * C64::from(2.0 * w);
        }
    }
    (&acc + acc.adjoint()) * C64::from(0.5)
}

fn gradient_scale(noise_variance: f64) -> C64 {
    C64::from(-1.0 / (4.0 * noise_variance))
}

/// `∇_{P*} f = -(1/4σ²) H^H H P S`.
pub fn grad_precoder(h: &CMatrix, p: &CMatrix, weight_sum: &CMatrix, noise_variance: f64) -> Result<CMatrix> {
    if h.ncols() != p.nrows() || p.ncols() != weight_sum.nrows() {
        return Err(Error::dim("precoder gradient", format!("{}x{}", h.ncols(), weight_sum.nrows()), format!("{}x{}", p.nrows(), p.ncols())));
    }
    Ok(h.adjoint() * (h * (p * weight_sum)) * gradient_scale(noise_variance))
}

/// `P S P^H`, the N_t x N_t core shared by both phase gradients.
fn core_matrix(p: &CMatrix, weight_sum: &CMatrix) -> CMatrix {
    p * weight_sum * p.adjoint()
}

/// `∇_{φ^l*} f`: the diagonal of
/// `Θ^{l+1:L} G^H Z^H H P S P^H Θ^{1:l-1} (W^l)^H`, scaled by `-1/4σ²`.
pub fn grad_phase_tx(
    l: usize,
    point: &DesignPoint,
    problem: &Problem,
    eval: &Evaluation,
    weight_sum: &CMatrix,
) -> Result<CVector> {
    let tx = &problem.prop.tx;
    let layers = tx.len();
    if l == 0 || l > layers {
        return Err(Error::IndexOutOfRange { what: "transmit layer", index: l, max: layers });
    }
    let cache = &eval.cache;
    // N x N_t
    let mut left = problem.g.adjoint() * (cache.z.adjoint() * (&cache.h * core_matrix(&point.precoder, weight_sum)));
    for m in (l + 1..=layers).rev() {
        scale_rows(&mut left, &point.tx_phases[m - 1].map(|c| c.conj()));
        left = tx[m - 1].adjoint() * left;
    }
    // W^l Φ^{l-1} W^{l-1} ··· Φ^1 W^1, N x N_t
    let mut right = tx[0].clone();
    for m in 2..=l {
        scale_rows(&mut right, &point.tx_phases[m - 2]);
        right = &tx[m - 1] * right;
    }
    let scale = gradient_scale(problem.noise_variance);
    Ok(CVector::from_fn(left.nrows(), |n, _| {
        left.row(n).iter().zip(right.row(n).iter()).map(|(a, b)| a * b.conj()).sum::<C64>() * scale
    }))
}

/// `∇_{ψ^k*} f`: the diagonal of
/// `(U^k)^H Υ^{k-1:1} H P S P^H B^H G^H Υ^{K:k+1}`, scaled by `-1/4σ²`.
pub fn grad_phase_rx(
    k: usize,
    point: &DesignPoint,
    problem: &Problem,
    eval: &Evaluation,
    weight_sum: &CMatrix,
) -> Result<CVector> {
    let rx = &problem.prop.rx;
    let layers = rx.len();
    if k == 0 || k > layers {
        return Err(Error::IndexOutOfRange { what: "receive layer", index: k, max: layers });
    }
    let cache = &eval.cache;
    // (H P S P^H B^H G^H)^H = G B P S P^H H^H, E x N_r
    let mut tail = &problem.g * (&cache.b * (core_matrix(&point.precoder, weight_sum) * cache.h.adjoint()));
    for m in (k + 1..=layers).rev() {
        scale_rows(&mut tail, &point.rx_phases[m - 1]);
        tail = &rx[m - 1] * tail;
    }
    // U^1 Ψ^1 ··· U^{k-1} Ψ^{k-1} U^k, N_r x E
    let mut head = rx[0].clone();
    for m in 2..=k {
        crate::wavefield::scale_columns(&mut head, &point.rx_phases[m - 2]);
        head *= &rx[m - 1];
    }
    let scale = gradient_scale(problem.noise_variance);
    // diag(head^H tail^H)[e] = Σ_r conj(head[r,e]) conj(tail[e,r])
    Ok(CVector::from_fn(head.ncols(), |e, _| {
        head.column(e).iter().zip(tail.row(e).iter()).map(|(a, b)| (a * b).conj()).sum::<C64>() * scale
    }))
}

impl GradientBundle {
    pub fn at(point: &DesignPoint, problem: &Problem, eval: &Evaluation) -> Result<Self> {
        let weight_sum = weighted_pair_sum(&eval.objective.pair_distances, problem.noise_variance, &problem.diffs);
        let grad_p = grad_precoder(&eval.cache.h, &point.precoder, &weight_sum, problem.noise_variance)?;
        let grad_phi = (1..=problem.prop.tx_layers())
            .map(|l| grad_phase_tx(l, point, problem, eval, &weight_sum))
            .collect::<Result<_>>()?;
        let grad_psi = (1..=problem.prop.rx_layers())
            .map(|k| grad_phase_rx(k, point, problem, eval, &weight_sum))
            .collect::<Result<_>>()?;
        Ok(Self {
            grad_p,
            grad_phi,
            grad_psi,
            weight_sum,
        })
    }
}
