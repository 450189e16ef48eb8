//! Wall-clock cost of one optimizer iteration, by block, and how it scales
//! with the layer size.

use std::fmt;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::experiment::{child_seed, Scenario};
use crate::apgm::{apgm_iteration, StepState};
use crate::objective::evaluate_objective;
use crate::{Error, Result};

/// Layer sizes of the scaling table.
pub const SCALING_ATOMS: [usize; 3] = [25, 49, 100];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStat {
    pub mean_ms: f64,
    /// `None` for a single sample.
    pub std_ms: Option<f64>,
    pub samples: usize,
}

impl TimingStat {
    pub fn of(samples_ms: &[f64]) -> Self {
        let n = samples_ms.len();
        let mean_ms = samples_ms.iter().sum::<f64>() / n as f64;
        let std_ms = (n > 1).then(|| {
            (samples_ms.iter().map(|s| (s - mean_ms).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        });
        Self {
            mean_ms,
            std_ms,
            samples: n,
        }
    }

    fn fmt_cell(&self) -> String {
        match self.std_ms {
            Some(s) => format!("{:>10.3} ± {:<8.3}", self.mean_ms, s),
            None => format!("{:>10.3}           ", self.mean_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockBreakdown {
    pub atoms: usize,
    pub num_vectors: usize,
    pub precoder: TimingStat,
    pub tx_layers: TimingStat,
    pub rx_layers: TimingStat,
    /// One objective evaluation with the cascades fixed (the pair sum).
    pub pair_sum: TimingStat,
    pub iteration: TimingStat,
    /// `N³ (L + K)`: multiplications of dense layer-to-layer products.
    pub layer_product_term: f64,
    /// `N_vec² N_s²`: multiplications of the pairwise-distance sum.
    pub pair_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub breakdown: BlockBreakdown,
    pub scaling: Vec<BlockBreakdown>,
}

/// Time `repeats` iterations of the configured problem, each from the same
/// starting state of realization 0.
pub fn benchmark_blocks(config: &ExperimentConfig, repeats: usize) -> Result<BlockBreakdown> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let scenario = Scenario::new(config)?;
    let (problem, point) = scenario.realization(child_seed(config.run.master_seed, 0))?;
    let eval = problem.evaluate(&point)?;
    let g = &config.geometry;
    let steps = StepState::new(&config.optimizer.initial_steps, g.tx_layers, g.rx_layers);

    let mut precoder = Vec::with_capacity(repeats);
    let mut tx = Vec::with_capacity(repeats);
    let mut rx = Vec::with_capacity(repeats);
    let mut pair = Vec::with_capacity(repeats);
    let mut total = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let out = apgm_iteration(&problem, point.clone(), steps.clone(), eval.clone(), &config.optimizer, 1)?;
        total.push(start.elapsed().as_secs_f64() * 1e3);
        precoder.push(out.timings.precoder_ms);
        tx.push(out.timings.tx_ms);
        rx.push(out.timings.rx_ms);

        let start = Instant::now();
        std::hint::black_box(evaluate_objective(
            &eval.cache.h,
            &point.precoder,
            &problem.diffs,
            problem.noise_variance,
        )?);
        pair.push(start.elapsed().as_secs_f64() * 1e3);
    }

    let n = g.atoms_per_tx_layer.max(g.atoms_per_rx_layer) as f64;
    let nvec = problem.num_vectors() as f64;
    let ns = problem.num_streams() as f64;
    Ok(BlockBreakdown {
        atoms: g.atoms_per_tx_layer,
        num_vectors: problem.num_vectors(),
        precoder: TimingStat::of(&precoder),
        tx_layers: TimingStat::of(&tx),
        rx_layers: TimingStat::of(&rx),
        pair_sum: TimingStat::of(&pair),
        iteration: TimingStat::of(&total),
        layer_product_term: n.powi(3) * (g.tx_layers + g.rx_layers) as f64,
        pair_term: nvec * nvec * ns * ns,
    })
}

/// Block breakdown of the configured problem plus the same measurement at
/// every size in [`SCALING_ATOMS`].
pub fn benchmark_iteration(config: &ExperimentConfig, repeats: usize) -> Result<BenchReport> {
    let breakdown = benchmark_blocks(config, repeats)?;
    let scaling = SCALING_ATOMS
        .iter()
        .map(|&n| {
            let mut cfg = config.clone();
            cfg.geometry.atoms_per_tx_layer = n;
            cfg.geometry.atoms_per_rx_layer = n;
            benchmark_blocks(&cfg, repeats)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport { breakdown, scaling })
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.breakdown;
        writeln!(
            f,
            "per-iteration wall time, N = {}, N_vec = {}, {} sample(s) [ms]",
            b.atoms, b.num_vectors, b.iteration.samples
        )?;
        writeln!(f, "  precoder      {}", b.precoder.fmt_cell())?;
        writeln!(f, "  tx layers     {}", b.tx_layers.fmt_cell())?;
        writeln!(f, "  rx layers     {}", b.rx_layers.fmt_cell())?;
        writeln!(f, "  pair sum      {}", b.pair_sum.fmt_cell())?;
        writeln!(f, "  iteration     {}", b.iteration.fmt_cell())?;
        writeln!(f)?;
        writeln!(f, "scaling in N (model terms are multiplication counts)")?;
        writeln!(
            f,
            "  {:>5}  {:>21}  {:>21}  {:>14}  {:>14}",
            "N", "iteration [ms]", "pair sum [ms]", "N^3 (L+K)", "N_vec^2 N_s^2"
        )?;
        for row in &self.scaling {
            writeln!(
                f,
                "  {:>5}  {}  {}  {:>14.3e}  {:>14.3e}",
                row.atoms,
                row.iteration.fmt_cell(),
                row.pair_sum.fmt_cell(),
                row.layer_product_term,
                row.pair_term
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.geometry.atoms_per_tx_layer = 9;
        cfg.geometry.atoms_per_rx_layer = 9;
        cfg.geometry.tx_layers = 2;
        cfg.geometry.rx_layers = 2;
        cfg
    }

    #[test]
    fn single_repeat_has_no_spread() {
        let b = benchmark_blocks(&small(), 1).unwrap();
        assert_eq!(b.iteration.samples, 1);
        assert!(b.iteration.std_ms.is_none());
        assert!(b.iteration.mean_ms >= b.tx_layers.mean_ms);
    }

    #[test]
    fn model_terms() {
        let b = benchmark_blocks(&small(), 2).unwrap();
        assert_eq!(b.layer_product_term, 729.0 * 4.0);
        assert_eq!(b.pair_term, 16.0 * 16.0 * 4.0);
        assert!(b.iteration.std_ms.is_some());
        assert!(benchmark_blocks(&small(), 0).is_err());
    }

    #[test]
    fn timing_stats() {
        let s = TimingStat::of(&[1.0, 3.0]);
        assert_eq!(s.mean_ms, 2.0);
        assert!((s.std_ms.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
