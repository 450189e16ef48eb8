//! Adaptive projected gradient method.
//!
//! One outer iteration runs a backtracking projected-gradient step on the
//! precoder, then on each transmit layer in order, then on each receive layer
//! in order. Every block keeps its own step size across iterations, and every
//! block evaluates its gradient at the freshest iterate, so later blocks see
//! the updates of earlier ones.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gradients::{grad_phase_rx, grad_phase_tx, grad_precoder, weighted_pair_sum};
use crate::objective::{evaluate_objective, MiEstimate};
use crate::problem::{Evaluation, Problem};
use crate::wavefield::DesignPoint;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Rescale `P` onto `tr(P P^H) = N_s`.
pub fn project_power(p: &CMatrix) -> Result<CMatrix> {
    // prescale by the largest entry so huge trial points do not overflow
    let peak = p.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::ZeroPrecoder);
    }
    let q = p.map(|c| c / peak);
    let energy = q.norm_squared();
    Ok(q * C64::from((p.ncols() as f64 / energy).sqrt()))
}

/// Map every entry onto the unit circle; zeros go to `1`.
pub fn project_unit_modulus(v: &CVector) -> CVector {
    v.map(|x| {
        let r = x.norm();
        if r > 0.0 && r.is_finite() {
            x / r
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// A block of optimization variables.
pub trait Block: Clone {
    /// `self - step * grad`.
    fn descend(&self, grad: &Self, step: f64) -> Self;
    fn distance_sq(&self, other: &Self) -> f64;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
}

impl Block for CMatrix {
    fn descend(&self, grad: &Self, step: f64) -> Self {
        self - grad * C64::from(step)
    }

    fn distance_sq(&self, other: &Self) -> f64 {
        (self - other).norm_squared()
    }

    fn is_zero(&self) -> bool {
        self.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Block for CVector {
    fn descend(&self, grad: &Self, step: f64) -> Self {
        self - grad * C64::from(step)
    }

    fn distance_sq(&self, other: &Self) -> f64 {
        (self - other).norm_squared()
    }

    fn is_zero(&self) -> bool {
        self.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Per-block step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepState {
    pub precoder: f64,
    pub tx: Vec<f64>,
    pub rx: Vec<f64>,
}

impl StepState {
    pub fn new(initial: &InitialSteps, tx_layers: usize, rx_layers: usize) -> Self {
        Self {
            precoder: initial.precoder,
            tx: vec![initial.tx; tx_layers],
            rx: vec![initial.rx; rx_layers],
        }
    }

    fn grow(&mut self, factor: f64) {
        let grow = |s: &mut f64| {
            let next = *s * factor;
            if next.is_finite() {
                *s = next;
            }
        };
        grow(&mut self.precoder);
        self.tx.iter_mut().for_each(grow);
        self.rx.iter_mut().for_each(grow);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSteps {
    pub precoder: f64,
    pub tx: f64,
    pub rx: f64,
}

impl Default for InitialSteps {
    fn default() -> Self {
        Self {
            precoder: 1000.0,
            tx: 1000.0,
            rx: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Step shrink factor on a failed trial, in (0, 1).
    pub shrink: f64,
    /// Weight of the `‖new - old‖²` term in the sufficient-decrease test.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Step inflation applied to every block at the start of an outer
    /// iteration; 1 disables it.
    pub growth: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            sufficient_decrease: 1e-3,
            max_backtracks: 60,
            growth: 2.0,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument(format!("shrink factor must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.sufficient_decrease > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sufficient-decrease weight must be positive, got {}",
                self.sufficient_decrease
            )));
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth factor must be at least 1, got {}", self.growth)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome<B, T> {
    pub block: B,
    pub value: f64,
    /// Step size to carry into the next iteration.
    pub step: f64,
    pub backtracks: usize,
    pub stalled: bool,
    /// Whatever `eval` returned alongside the accepted value; `None` when the
    /// block was left unchanged.
    pub extra: Option<T>,
}

/// Backtracking projected-gradient step on one block.
///
/// Tries `project(current - step * grad)` and accepts it once
/// `eval(candidate) <= current_value - δ ‖candidate - current‖²`, shrinking
/// the step by `ρ` after every failure. After `max_backtracks` failures the
/// block is left untouched and the outcome is marked stalled.
pub fn line_search_block<B, T, E, P>(
    mut eval: E,
    current: &B,
    current_value: f64,
    grad: &B,
    step: f64,
    project: P,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome<B, T>>
where
    B: Block,
    E: FnMut(&B) -> Result<(f64, T)>,
    P: Fn(&B) -> Result<B>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {step}")));
    }
    if grad.is_zero() {
        return Ok(LineSearchOutcome {
            block: current.clone(),
            value: current_value,
            step,
            backtracks: 0,
            stalled: false,
            extra: None,
        });
    }
    let mut step = step;
    for backtracks in 0..=params.max_backtracks {
        let descended = current.descend(grad, step);
        // an overflowing step is just another rejected trial
        if !descended.is_finite() {
            if backtracks < params.max_backtracks {
                step *= params.shrink;
            }
            continue;
        }
        let candidate = project(&descended)?;
        let (value, extra) = eval(&candidate)?;
        if value <= current_value - params.sufficient_decrease * candidate.distance_sq(current) {
            return Ok(LineSearchOutcome {
                block: candidate,
                value,
                step,
                backtracks,
                stalled: false,
                extra: Some(extra),
            });
        }
        if backtracks < params.max_backtracks {
            step *= params.shrink;
        }
    }
    Ok(LineSearchOutcome {
        block: current.clone(),
        value: current_value,
        step,
        backtracks: params.max_backtracks,
        stalled: true,
        extra: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial_steps: InitialSteps,
    pub line_search: LineSearchParams,
    pub max_iterations: usize,
    /// Relative decrease of `f` below which an iteration counts as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    /// When false the precoder stays at its initial value.
    pub optimize_precoder: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            initial_steps: InitialSteps::default(),
            line_search: LineSearchParams::default(),
            max_iterations: 200,
            tolerance: 1e-6,
            patience: 5,
            optimize_precoder: true,
        }
    }
}

/// Backtrack counts of one outer iteration, per block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub precoder: usize,
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.precoder + self.tx.iter().sum::<usize>() + self.rx.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub f: f64,
    pub r0: f64,
    pub mi: Option<MiEstimate>,
    pub backtracks: BlockCounts,
    /// Blocks that exhausted their backtracking budget.
    pub stalls: usize,
    pub elapsed_ms: f64,
}

/// Wall time spent in each block group during one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockTimings {
    pub precoder_ms: f64,
    pub tx_ms: f64,
    pub rx_ms: f64,
}

/// Result of one outer iteration.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub point: DesignPoint,
    pub steps: StepState,
    pub eval: Evaluation,
    pub trace: IterationTrace,
    pub timings: BlockTimings,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// One outer iteration starting from a feasible `point` whose evaluation is
/// `eval`.
pub fn apgm_iteration(
    problem: &Problem,
    mut point: DesignPoint,
    mut steps: StepState,
    mut eval: Evaluation,
    config: &OptimizerConfig,
    iteration: usize,
) -> Result<IterationOutcome> {
    let params = &config.line_search;
    let start = Instant::now();
    let mut counts = BlockCounts::default();
    let mut stalls = 0;
    let mut timings = BlockTimings::default();
    steps.grow(params.growth);

    // precoder: the cascades do not depend on P, so only the pair terms change
    let block_start = Instant::now();
    if config.optimize_precoder {
        let s = weighted_pair_sum(&eval.objective.pair_distances, problem.noise_variance, &problem.diffs);
        let grad = grad_precoder(&eval.cache.h, &point.precoder, &s, problem.noise_variance)?;
        let h = &eval.cache.h;
        let outcome = line_search_block(
            |p: &CMatrix| {
                let value = evaluate_objective(h, p, &problem.diffs, problem.noise_variance)?;
                Ok((value.off_diagonal, value))
            },
            &point.precoder,
            eval.objective.off_diagonal,
            &grad,
            steps.precoder,
            project_power,
            params,
        )?;
        steps.precoder = outcome.step;
        counts.precoder = outcome.backtracks;
        stalls += usize::from(outcome.stalled);
        if let Some(objective) = outcome.extra {
            point.precoder = outcome.block;
            eval.objective = objective;
        }
    }
    timings.precoder_ms = ms_since(block_start);

    let block_start = Instant::now();
    for l in 1..=problem.prop.tx_layers() {
        let s = weighted_pair_sum(&eval.objective.pair_distances, problem.noise_variance, &problem.diffs);
        let grad = grad_phase_tx(l, &point, problem, &eval, &s)?;
        let mut trial = point.clone();
        let outcome = line_search_block(
            |phi: &CVector| {
                trial.tx_phases[l - 1] = phi.clone();
                let e = problem.evaluate(&trial)?;
                Ok((e.objective.off_diagonal, e))
            },
            &point.tx_phases[l - 1],
            eval.objective.off_diagonal,
            &grad,
            steps.tx[l - 1],
            |v| Ok(project_unit_modulus(v)),
            params,
        )?;
        steps.tx[l - 1] = outcome.step;
        counts.tx.push(outcome.backtracks);
        stalls += usize::from(outcome.stalled);
        if let Some(e) = outcome.extra {
            point.tx_phases[l - 1] = outcome.block;
            eval = e;
        }
    }
    timings.tx_ms = ms_since(block_start);

    let block_start = Instant::now();
    for k in 1..=problem.prop.rx_layers() {
        let s = weighted_pair_sum(&eval.objective.pair_distances, problem.noise_variance, &problem.diffs);
        let grad = grad_phase_rx(k, &point, problem, &eval, &s)?;
        let mut trial = point.clone();
        let outcome = line_search_block(
            |psi: &CVector| {
                trial.rx_phases[k - 1] = psi.clone();
                let e = problem.evaluate(&trial)?;
                Ok((e.objective.off_diagonal, e))
            },
            &point.rx_phases[k - 1],
            eval.objective.off_diagonal,
            &grad,
            steps.rx[k - 1],
            |v| Ok(project_unit_modulus(v)),
            params,
        )?;
        steps.rx[k - 1] = outcome.step;
        counts.rx.push(outcome.backtracks);
        stalls += usize::from(outcome.stalled);
        if let Some(e) = outcome.extra {
            point.rx_phases[k - 1] = outcome.block;
            eval = e;
        }
    }
    timings.rx_ms = ms_since(block_start);

    let trace = IterationTrace {
        iteration,
        f: eval.objective.f,
        r0: eval.objective.r0,
        mi: None,
        backtracks: counts,
        stalls,
        elapsed_ms: ms_since(start),
    };
    Ok(IterationOutcome {
        point,
        steps,
        eval,
        trace,
        timings,
    })
}

/// Outcome of a full optimization run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub initial: Evaluation,
    pub point: DesignPoint,
    pub eval: Evaluation,
    pub steps: StepState,
    pub trace: Vec<IterationTrace>,
}

/// Iterate until `max_iterations` or until the relative decrease of `f`
/// stays below `tolerance` for `patience` consecutive iterations.
pub fn run(problem: &Problem, initial: DesignPoint, config: &OptimizerConfig) -> Result<RunResult> {
    run_with_observer(problem, initial, config, |_, _, _| Ok(None))
}

/// Like [`run`], calling `observer(iteration, point, eval)` after every
/// iteration; a returned estimate is attached to that iteration's trace.
pub fn run_with_observer<O>(
    problem: &Problem,
    initial: DesignPoint,
    config: &OptimizerConfig,
    mut observer: O,
) -> Result<RunResult>
where
    O: FnMut(usize, &DesignPoint, &Evaluation) -> Result<Option<MiEstimate>>,
{
    config.line_search.validate()?;
    initial.check_dims(&problem.prop)?;
    if initial.num_streams() != problem.num_streams() {
        return Err(Error::dim("precoder columns", problem.num_streams(), initial.num_streams()));
    }
    let first = problem.evaluate(&initial)?;
    let mut point = initial;
    let mut eval = first.clone();
    let mut steps = StepState::new(&config.initial_steps, problem.prop.tx_layers(), problem.prop.rx_layers());
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut quiet = 0;

    for iteration in 1..=config.max_iterations {
        let previous_f = eval.objective.f;
        let mut outcome = apgm_iteration(problem, point, steps, eval, config, iteration)?;
        outcome.trace.mi = observer(iteration, &outcome.point, &outcome.eval)?;
        let relative = (previous_f - outcome.eval.objective.f) / previous_f;
        trace.push(outcome.trace);
        point = outcome.point;
        steps = outcome.steps;
        eval = outcome.eval;

        if relative < config.tolerance {
            quiet += 1;
            if quiet >= config.patience.max(1) {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(RunResult {
        initial: first,
        point,
        eval,
        steps,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::geometry::Propagation;
    use crate::signaling::{build_constellation, enumerate_vectors, ConstellationKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| complex_gaussian(rng, 1.0))
    }

    #[test]
    fn power_projection() {
        let p = CMatrix::identity(2, 2);
        assert_eq!(project_power(&p).unwrap(), p);
        let big = &p * C64::from(2.0);
        assert!((project_power(&big).unwrap() - &p).norm() < 1e-15);
        assert!(matches!(project_power(&CMatrix::zeros(2, 2)), Err(Error::ZeroPrecoder)));
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20 {
            let q = random_matrix(&mut rng, 3, 2);
            let out = project_power(&q).unwrap();
            assert!(((&out * out.adjoint()).trace().re - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_modulus_projection() {
        let v = CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::from_polar(3.0, 1.2)]);
        let out = project_unit_modulus(&v);
        assert_eq!(out[0], C64::new(1.0, 0.0));
        assert_eq!(out[1], C64::new(1.0, 0.0));
        assert!((out[2] - C64::from_polar(1.0, 1.2)).norm() < 1e-15);
    }

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::from(v))
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let params = LineSearchParams::default();
        let out = line_search_block(
            |b: &CMatrix| Ok((b[(0, 0)].norm_sqr(), ())),
            &scalar(1.0),
            1.0,
            &scalar(0.0),
            1000.0,
            |b| Ok(b.clone()),
            &params,
        )
        .unwrap();
        assert_eq!(out.block, scalar(1.0));
        assert_eq!(out.backtracks, 0);
        assert!(!out.stalled);
    }

    #[test]
    fn quadratic_toy_backtracks_then_accepts() {
        // f(x) = x², x0 = 1, grad = 2 (as ∂f/∂x*, the real step direction
        // is x - 2 step). Starting at step 1000 and halving, the first step s
        // with (1-2s)² <= 1 - δ (2s)² is s = 1000 / 2^10 ≈ 0.977.
        let params = LineSearchParams::default();
        let out = line_search_block(
            |b: &CMatrix| Ok((b[(0, 0)].norm_sqr(), ())),
            &scalar(1.0),
            1.0,
            &scalar(2.0),
            1000.0,
            |b| Ok(b.clone()),
            &params,
        )
        .unwrap();
        let mut expected = 0;
        let mut s = 1000.0f64;
        while (1.0 - 2.0 * s).powi(2) > 1.0 - 1e-3 * (2.0 * s).powi(2) {
            s *= 0.5;
            expected += 1;
        }
        assert_eq!(out.backtracks, expected);
        assert_eq!(out.step, s);
        assert!(out.value < 1.0);
    }

    #[test]
    fn tiny_step_on_flat_objective() {
        let params = LineSearchParams::default();
        let out = line_search_block(
            |b: &CMatrix| Ok((1e-3 * b[(0, 0)].re, ())),
            &scalar(0.0),
            0.0,
            &scalar(1.0),
            1e-6,
            |b| Ok(b.clone()),
            &params,
        )
        .unwrap();
        assert_eq!(out.backtracks, 0);
        assert!(((&out.block - scalar(0.0)).norm() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn stall_leaves_block_unchanged() {
        let params = LineSearchParams {
            max_backtracks: 5,
            ..Default::default()
        };
        let x = scalar(0.25);
        let out = line_search_block(
            |_: &CMatrix| Ok((10.0, ())),
            &x,
            1.0,
            &scalar(1.0),
            1.0,
            |b| Ok(b.clone()),
            &params,
        )
        .unwrap();
        assert!(out.stalled);
        assert_eq!(out.block, x);
        assert_eq!(out.value, 1.0);
        assert_eq!(out.backtracks, 5);
        assert!(out.extra.is_none());
    }

    fn small_problem(seed: u64) -> (Problem, DesignPoint) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (n, e) = (6, 6);
        let tx = vec![random_matrix(&mut rng, n, 2), random_matrix(&mut rng, n, n)];
        let rx = vec![random_matrix(&mut rng, 2, e), random_matrix(&mut rng, e, e)];
        let prop = Propagation { tx, rx };
        let g = random_matrix(&mut rng, e, n);
        let c = build_constellation(ConstellationKind::Qam, 4).unwrap();
        let vectors = enumerate_vectors(&c, 2, 4096).unwrap();
        let point = DesignPoint::random(&mut rng, &prop, 2);
        let problem = Problem::new(prop, g, vectors, 50.0).unwrap();
        (problem, point)
    }

    #[test]
    fn zero_channel_is_stationary() {
        let (mut problem, point) = small_problem(2);
        problem.g.fill(C64::new(0.0, 0.0));
        let result = run(&problem, point.clone(), &OptimizerConfig { max_iterations: 3, tolerance: 0.0, ..Default::default() }).unwrap();
        assert_eq!(result.point, point);
        assert!(result.trace.iter().all(|t| t.f == 256.0 && t.backtracks.total() == 0));
    }

    #[test]
    fn zero_iterations_returns_initial_point() {
        let (problem, point) = small_problem(3);
        let result = run(&problem, point.clone(), &OptimizerConfig { max_iterations: 0, ..Default::default() }).unwrap();
        assert_eq!(result.point, point);
        assert!(result.trace.is_empty());
        assert_eq!(result.eval.objective.f, result.initial.objective.f);
    }

    #[test]
    fn zero_tolerance_runs_all_iterations() {
        let (problem, point) = small_problem(4);
        let config = OptimizerConfig {
            max_iterations: 25,
            tolerance: 0.0,
            ..Default::default()
        };
        let result = run(&problem, point, &config).unwrap();
        assert_eq!(result.trace.len(), 25);
    }

    #[test]
    fn descent_feasibility_and_determinism() {
        let (problem, point) = small_problem(5);
        let config = OptimizerConfig {
            max_iterations: 40,
            tolerance: 0.0,
            ..Default::default()
        };
        let result = run(&problem, point.clone(), &config).unwrap();
        let mut previous = result.initial.objective.f;
        for t in &result.trace {
            assert!(t.f <= previous, "iteration {}: {} > {}", t.iteration, t.f, previous);
            previous = t.f;
        }
        assert!(result.eval.objective.f < result.initial.objective.f);
        let p = &result.point.precoder;
        assert!(((p * p.adjoint()).trace().re - 2.0).abs() < 1e-9);
        for v in result.point.tx_phases.iter().chain(&result.point.rx_phases) {
            assert!(v.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        }
        let again = run(&problem, point, &config).unwrap();
        assert_eq!(again.trace.iter().map(|t| t.f).collect::<Vec<_>>(), result.trace.iter().map(|t| t.f).collect::<Vec<_>>());
        assert_eq!(again.point, result.point);
    }

    #[test]
    fn fixed_precoder_is_left_alone() {
        let (problem, point) = small_problem(6);
        let config = OptimizerConfig {
            max_iterations: 5,
            optimize_precoder: false,
            ..Default::default()
        };
        let result = run(&problem, point.clone(), &config).unwrap();
        assert_eq!(result.point.precoder, point.precoder);
        assert!(result.trace.iter().all(|t| t.backtracks.precoder == 0));
    }

    #[test]
    fn small_projected_steps_do_not_increase_objective() {
        for seed in 0..10 {
            let (problem, point) = small_problem(100 + seed);
            let eval = problem.evaluate(&point).unwrap();
            let grads = crate::gradients::GradientBundle::at(&point, &problem, &eval).unwrap();
            let mut moved = point.clone();
            let step = 1e-4 / grads.grad_phi[0].norm().max(1e-300);
            moved.tx_phases[0] = project_unit_modulus(&moved.tx_phases[0].descend(&grads.grad_phi[0], step));
            assert!(problem.evaluate(&moved).unwrap().objective.f <= eval.objective.f);
            let mut moved = point.clone();
            let step = 1e-4 / grads.grad_p.norm().max(1e-300);
            moved.precoder = project_power(&moved.precoder.descend(&grads.grad_p, step)).unwrap();
            assert!(problem.evaluate(&moved).unwrap().objective.f <= eval.objective.f);
        }
    }

    #[test]
    fn invalid_line_search_params() {
        let bad = LineSearchParams { shrink: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = LineSearchParams { sufficient_decrease: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
