//! Seeded multi-realization runs, their on-disk artifacts, and paired sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::apgm::{run_with_observer, IterationTrace};
use crate::channel::{sample_channel, CorrelationPair};
use crate::geometry::{build_all_propagation, Propagation};
use crate::objective::{mutual_information_mc, MiEstimate};
use crate::problem::{Evaluation, Problem};
use crate::signaling::{build_constellation, enumerate_vectors, TransmitVectorSet};
use crate::wavefield::{fixed_precoder, DesignPoint};
use crate::{Error, Result};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const TRACE_HEADER: &str = "iteration,f,R0,MI,MI_stderr,backtracks,ms";

const CHANNEL_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const MI_STREAM: u64 = 2;

/// Seed of realization `index`: a splitmix64 step of the master seed
/// advanced `index + 1` times, so any realization can be regenerated alone.
pub fn child_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Everything that is shared by all realizations of one configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub prop: Propagation,
    pub corr: CorrelationPair,
    pub path_gain: f64,
    pub vectors: TransmitVectorSet,
    pub noise_variance: f64,
}

impl Scenario {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.geometry;
        let prop = build_all_propagation(g)?;
        // G couples the outermost layers of the two stacks
        let corr = CorrelationPair::from_layouts(
            config.channel.correlation,
            &g.tx_layer_layout(g.tx_layers)?,
            &g.rx_layer_layout(g.rx_layers)?,
            g.wavelength,
        )?;
        let path_gain = config.path_loss()?.gain_linear(g.link_distance)?;
        let s = &config.signaling;
        let constellation = build_constellation(s.kind, s.modulation_order)?;
        let vectors = enumerate_vectors(&constellation, s.num_streams, s.vector_cap)?;
        Ok(Self {
            config: config.clone(),
            prop,
            corr,
            path_gain,
            vectors,
            noise_variance: config.noise_variance(),
        })
    }

    /// Channel and starting point of realization `seed`. The phases are drawn
    /// even when the precoder is fixed, so switching precoding on and off
    /// keeps the same starting phases.
    pub fn realization(&self, seed: u64) -> Result<(Problem, DesignPoint)> {
        let channel = sample_channel(&mut stream(seed, CHANNEL_STREAM), &self.corr, self.path_gain)?;
        let problem = Problem::new(self.prop.clone(), channel.g, self.vectors.clone(), self.noise_variance)?;
        let mut point = DesignPoint::random(&mut stream(seed, INIT_STREAM), &self.prop, problem.num_streams());
        if !self.config.precoding_enabled {
            point.precoder = fixed_precoder(self.prop.num_tx_antennas(), problem.num_streams());
        }
        Ok((problem, point))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub f: f64,
    pub r0: f64,
    pub mi: MiEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    pub iterations: usize,
    pub stalls: usize,
    pub initial: PointMetrics,
    #[serde(rename = "final")]
    pub last: PointMetrics,
}

#[derive(Debug, Clone)]
pub struct RealizationOutcome {
    pub summary: RealizationSummary,
    pub trace: Vec<IterationTrace>,
    pub point: DesignPoint,
}

/// Optimize one realization. MI is estimated at the start, every
/// `mi_interval` iterations, and at the final iteration, all from the
/// realization's own MI stream.
pub fn run_realization(scenario: &Scenario, index: usize, seed: u64) -> Result<RealizationOutcome> {
    let cfg = &scenario.config;
    let (problem, point) = scenario.realization(seed)?;
    let mut mi_rng = stream(seed, MI_STREAM);
    let samples = cfg.run.mi_samples;
    let estimate = |point: &DesignPoint, eval: &Evaluation, rng: &mut ChaCha8Rng| {
        mutual_information_mc(&eval.cache.h, &point.precoder, &problem.vectors, problem.noise_variance, rng, samples)
    };

    let initial_eval = problem.evaluate(&point)?;
    let initial = PointMetrics {
        f: initial_eval.objective.f,
        r0: initial_eval.objective.r0,
        mi: estimate(&point, &initial_eval, &mut mi_rng)?,
    };

    let interval = cfg.run.mi_interval;
    let mut result = run_with_observer(&problem, point, &cfg.optimizer, |iteration, point, eval| {
        if interval > 0 && iteration % interval == 0 {
            estimate(point, eval, &mut mi_rng).map(Some)
        } else {
            Ok(None)
        }
    })?;
    let last_mi = match result.trace.last_mut() {
        Some(t) => match t.mi {
            Some(mi) => mi,
            None => {
                let mi = estimate(&result.point, &result.eval, &mut mi_rng)?;
                t.mi = Some(mi);
                mi
            }
        },
        None => initial.mi,
    };
    let summary = RealizationSummary {
        index,
        seed,
        iterations: result.trace.len(),
        stalls: result.trace.iter().map(|t| t.stalls).sum(),
        initial,
        last: PointMetrics {
            f: result.eval.objective.f,
            r0: result.eval.objective.r0,
            mi: last_mi,
        },
    };
    Ok(RealizationOutcome {
        summary,
        trace: result.trace,
        point: result.point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub master_seed: u64,
    pub num_realizations: usize,
    pub final_r0: Stats,
    pub final_mi: Stats,
    pub iterations: Stats,
    pub realizations: Vec<RealizationSummary>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub traces: Vec<Vec<IterationTrace>>,
    pub points: Vec<DesignPoint>,
}

/// Run every realization (in parallel), then write artifacts to
/// `run.output_dir` if one is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let output = simulate(config)?;
    if let Some(dir) = &config.run.output_dir {
        write_run(dir, &output)?;
    }
    Ok(output)
}

/// Like [`run_experiment`] but never touches the filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<RunOutput> {
    let scenario = Scenario::new(config)?;
    let master = config.run.master_seed;
    // collected in index order, so scheduling cannot reorder anything
    let outcomes = (0..config.run.num_realizations)
        .into_par_iter()
        .map(|r| run_realization(&scenario, r, child_seed(master, r)))
        .collect::<Result<Vec<_>>>()?;

    let finals_r0: Vec<f64> = outcomes.iter().map(|o| o.summary.last.r0).collect();
    let finals_mi: Vec<f64> = outcomes.iter().map(|o| o.summary.last.mi.bits).collect();
    let iterations: Vec<f64> = outcomes.iter().map(|o| o.summary.iterations as f64).collect();
    let mut traces = Vec::with_capacity(outcomes.len());
    let mut points = Vec::with_capacity(outcomes.len());
    let mut realizations = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        traces.push(o.trace);
        points.push(o.point);
        realizations.push(o.summary);
    }
    Ok(RunOutput {
        summary: RunSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            master_seed: master,
            num_realizations: config.run.num_realizations,
            final_r0: Stats::of(&finals_r0),
            final_mi: Stats::of(&finals_mi),
            iterations: Stats::of(&iterations),
            realizations,
            config: config.clone(),
        },
        traces,
        points,
    })
}

/// One trace as CSV. Floats use Rust's shortest round-trip formatting, so
/// the text is independent of locale and identical for identical runs.
pub fn trace_csv(trace: &[IterationTrace], record_wall_time: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        let (mi, se) = match t.mi {
            Some(m) => (m.bits.to_string(), m.std_error.to_string()),
            None => (String::new(), String::new()),
        };
        let ms = if record_wall_time {
            format!("{:.3}", t.elapsed_ms)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.iteration,
            t.f,
            t.r0,
            mi,
            se,
            t.backtracks.total(),
            ms
        );
    }
    out
}

pub fn trace_file_name(index: usize) -> String {
    format!("realization_{index:03}.csv")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write `realization_NNN.csv` for each trace and `summary.json`.
pub fn write_run(dir: &Path, output: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let wall = output.summary.config.run.record_wall_time;
    for (i, trace) in output.traces.iter().enumerate() {
        write_file(&dir.join(trace_file_name(i)), &trace_csv(trace, wall))?;
    }
    let json = serde_json::to_string_pretty(&output.summary).map_err(|e| Error::Format {
        path: dir.join("summary.json").display().to_string(),
        message: e.to_string(),
    })?;
    write_file(&dir.join("summary.json"), &(json + "\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    MetaAtoms,
    ModulationOrder,
    Precoding,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::MetaAtoms => "meta_atoms",
            SweepAxis::ModulationOrder => "modulation_order",
            SweepAxis::Precoding => "precoding",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let bad = |what: &str| Error::InvalidArgument(format!("invalid {what} value '{value}'"));
        match self {
            SweepAxis::MetaAtoms => {
                let n: usize = value.trim().parse().map_err(|_| bad(self.name()))?;
                cfg.geometry.atoms_per_tx_layer = n;
                cfg.geometry.atoms_per_rx_layer = n;
            }
            SweepAxis::ModulationOrder => {
                cfg.signaling.modulation_order = value.trim().parse().map_err(|_| bad(self.name()))?;
            }
            SweepAxis::Precoding => {
                let on = match value.trim().to_ascii_lowercase().as_str() {
                    "on" | "true" | "yes" | "1" => true,
                    "off" | "false" | "no" | "0" => false,
                    _ => return Err(bad(self.name())),
                };
                cfg.precoding_enabled = on;
                cfg.optimizer.optimize_precoder = on;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "meta_atoms" | "n" => Ok(SweepAxis::MetaAtoms),
            "modulation_order" | "m" => Ok(SweepAxis::ModulationOrder),
            "precoding" => Ok(SweepAxis::Precoding),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep axis '{other}' (expected meta_atoms, modulation_order or precoding)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: String,
    pub output: RunOutput,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub entries: Vec<SweepEntry>,
}

impl SweepOutput {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("axis,value,mean_final_R0,std_final_R0,mean_final_MI,std_final_MI,mean_iterations\n");
        for e in &self.entries {
            let s = &e.output.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.axis.name(),
                e.value,
                s.final_r0.mean,
                s.final_r0.std,
                s.final_mi.mean,
                s.final_mi.std,
                s.iterations.mean
            );
        }
        out
    }
}

pub fn variant_dir(root: &Path, axis: SweepAxis, value: &str) -> PathBuf {
    root.join(format!("{}={}", axis.name(), value.trim()))
}

/// One run per value, all with the same master seed so realization `r` uses
/// the same child seed in every variant. Artifacts go to
/// `<output_dir>/<axis>=<value>/` plus a combined `sweep.csv`.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> Result<SweepOutput> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("a sweep needs at least one value".into()));
    }
    // validate every variant before spending time on any of them
    let variants = values
        .iter()
        .map(|v| axis.apply(base, v).map(|cfg| (v.trim().to_string(), cfg)))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(variants.len());
    for (value, cfg) in variants {
        let output = simulate(&cfg)?;
        if let Some(root) = &base.run.output_dir {
            write_run(&variant_dir(root, axis, &value), &output)?;
        }
        entries.push(SweepEntry { value, output });
    }
    let sweep = SweepOutput { axis, entries };
    if let Some(root) = &base.run.output_dir {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        write_file(&root.join("sweep.csv"), &sweep.table_csv())?;
    }
    Ok(sweep)
}
