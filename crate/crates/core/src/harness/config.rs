//! Experiment configuration: a sectioned TOML document with every key
//! optional. Missing keys fall back to the desk-scale reference setup.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::apgm::{InitialSteps, LineSearchParams, OptimizerConfig};
use crate::channel::{CorrelationModel, PathLossModel};
use crate::geometry::SimGeometry;
use crate::objective::NoiseModel;
use crate::signaling::{build_constellation, ConstellationKind, DEFAULT_VECTOR_CAP};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub reference_distance: f64,
    pub path_loss_exponent: f64,
    pub correlation: CorrelationModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingConfig {
    pub kind: ConstellationKind,
    pub modulation_order: usize,
    pub num_streams: usize,
    pub vector_cap: usize,
}

impl SignalingConfig {
    pub fn num_vectors(&self) -> usize {
        self.modulation_order.pow(self.num_streams as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub num_realizations: usize,
    pub master_seed: u64,
    pub mi_samples: usize,
    /// MI is estimated every `mi_interval` iterations and always at the
    /// final one; 0 means final only.
    pub mi_interval: usize,
    pub output_dir: Option<PathBuf>,
    /// Fill the `ms` column of trace CSVs. Off by default so that traces of
    /// identical runs are byte-identical.
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: SimGeometry,
    pub channel: ChannelConfig,
    pub signaling: SignalingConfig,
    pub sigma2_db: f64,
    pub optimizer: OptimizerConfig,
    pub run: RunConfig,
    pub precoding_enabled: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: SimGeometry::reference(),
            channel: ChannelConfig {
                reference_distance: 1.0,
                path_loss_exponent: 3.5,
                correlation: CorrelationModel::Sinc,
            },
            signaling: SignalingConfig {
                kind: ConstellationKind::Qam,
                modulation_order: 4,
                num_streams: 2,
                vector_cap: DEFAULT_VECTOR_CAP,
            },
            sigma2_db: -110.0,
            optimizer: OptimizerConfig::default(),
            run: RunConfig {
                num_realizations: 30,
                master_seed: 0,
                mi_samples: 1000,
                mi_interval: 10,
                output_dir: None,
                record_wall_time: false,
            },
            precoding_enabled: true,
        }
    }
}

impl ExperimentConfig {
    pub fn noise_variance(&self) -> f64 {
        NoiseModel::from_db(self.sigma2_db).map(|n| n.variance).unwrap_or(f64::NAN)
    }

    pub fn path_loss(&self) -> Result<PathLossModel> {
        PathLossModel::new(
            self.channel.reference_distance,
            self.channel.path_loss_exponent,
            self.geometry.wavelength,
        )
    }

    /// Check every cross-field constraint, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive("geometry.wavelength", g.wavelength)?;
        positive("geometry.layer_spacing", g.layer_spacing)?;
        positive("geometry.antenna_spacing", g.antenna_spacing)?;
        positive("geometry.atom_spacing", g.atom_spacing)?;
        positive("geometry.atom_area", g.atom_area)?;
        at_least("geometry.num_tx_antennas", g.num_tx_antennas, 1)?;
        at_least("geometry.num_rx_antennas", g.num_rx_antennas, 1)?;
        at_least("geometry.tx_layers", g.tx_layers, 1)?;
        at_least("geometry.rx_layers", g.rx_layers, 1)?;
        perfect_square("geometry.atoms_per_tx_layer", g.atoms_per_tx_layer)?;
        perfect_square("geometry.atoms_per_rx_layer", g.atoms_per_rx_layer)?;
        positive("channel.distance", g.link_distance)?;
        g.validate().map_err(|e| Error::config("geometry", e.to_string()))?;

        positive("channel.reference_distance", self.channel.reference_distance)?;
        positive("channel.path_loss_exponent", self.channel.path_loss_exponent)?;
        if g.link_distance < self.channel.reference_distance {
            return Err(Error::config(
                "channel.distance",
                format!(
                    "link distance {} is below the reference distance {}",
                    g.link_distance, self.channel.reference_distance
                ),
            ));
        }

        let s = &self.signaling;
        build_constellation(s.kind, s.modulation_order)
            .map_err(|e| Error::config("signaling.modulation_order", e.to_string()))?;
        at_least("signaling.num_streams", s.num_streams, 1)?;
        let max_streams = g.num_tx_antennas.min(g.num_rx_antennas);
        if s.num_streams > max_streams {
            return Err(Error::config(
                "signaling.num_streams",
                format!("{} streams exceed min(N_t, N_r) = {max_streams}", s.num_streams),
            ));
        }
        let count = (s.modulation_order as u128).checked_pow(s.num_streams as u32);
        if count.is_none_or(|c| c > s.vector_cap as u128) {
            return Err(Error::config(
                "signaling.modulation_order",
                format!(
                    "M^N_s = {}^{} transmit vectors exceed the cap of {}",
                    s.modulation_order, s.num_streams, s.vector_cap
                ),
            ));
        }

        if !self.sigma2_db.is_finite() {
            return Err(Error::config("noise.sigma2_db", "must be finite"));
        }

        let o = &self.optimizer;
        positive("optimizer.precoder_step", o.initial_steps.precoder)?;
        positive("optimizer.tx_step", o.initial_steps.tx)?;
        positive("optimizer.rx_step", o.initial_steps.rx)?;
        let ls = &o.line_search;
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(Error::config("optimizer.shrink", format!("must lie in (0, 1), got {}", ls.shrink)));
        }
        positive("optimizer.sufficient_decrease", ls.sufficient_decrease)?;
        if !(ls.growth >= 1.0 && ls.growth.is_finite()) {
            return Err(Error::config("optimizer.growth", format!("must be at least 1, got {}", ls.growth)));
        }
        if !(o.tolerance >= 0.0 && o.tolerance.is_finite()) {
            return Err(Error::config("optimizer.tolerance", format!("must be non-negative, got {}", o.tolerance)));
        }
        at_least("optimizer.patience", o.patience, 1)?;

        at_least("run.num_realizations", self.run.num_realizations, 1)?;
        at_least("run.mi_samples", self.run.mi_samples, 1)?;
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be at least {min}, got {v}")))
    }
}

fn perfect_square(key: &str, v: usize) -> Result<()> {
    let side = (v as f64).sqrt().round() as usize;
    if v > 0 && side * side == v {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be a positive perfect square, got {v}")))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    signaling: RawSignaling,
    #[serde(default)]
    noise: RawNoise,
    #[serde(default)]
    optimizer: RawOptimizer,
    #[serde(default)]
    run: RawRun,
    precoding_enabled: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    wavelength: Option<f64>,
    frequency_hz: Option<f64>,
    num_tx_antennas: Option<usize>,
    num_rx_antennas: Option<usize>,
    /// Shorthand for equal transmit and receive layer sizes.
    meta_atoms: Option<usize>,
    atoms_per_tx_layer: Option<usize>,
    atoms_per_rx_layer: Option<usize>,
    tx_layers: Option<usize>,
    rx_layers: Option<usize>,
    layer_spacing: Option<f64>,
    antenna_spacing: Option<f64>,
    atom_spacing: Option<f64>,
    atom_area: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    reference_distance: Option<f64>,
    path_loss_exponent: Option<f64>,
    distance: Option<f64>,
    correlation: Option<CorrelationModel>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignaling {
    kind: Option<ConstellationKind>,
    modulation_order: Option<usize>,
    num_streams: Option<usize>,
    vector_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma2_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    /// Shorthand for all three initial steps.
    initial_step: Option<f64>,
    precoder_step: Option<f64>,
    tx_step: Option<f64>,
    rx_step: Option<f64>,
    shrink: Option<f64>,
    sufficient_decrease: Option<f64>,
    growth: Option<f64>,
    max_backtracks: Option<usize>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    patience: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    num_realizations: Option<usize>,
    master_seed: Option<u64>,
    mi_samples: Option<usize>,
    mi_interval: Option<usize>,
    output_dir: Option<PathBuf>,
    record_wall_time: Option<bool>,
}

fn exclusive<T>(a: Option<T>, a_key: &str, b: Option<T>, b_key: &str) -> Result<Option<T>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::config(b_key, format!("conflicts with {a_key}; give only one"))),
        (a, b) => Ok(a.or(b)),
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let key = e.span().map(|s| key_path_at(text, s.start)).unwrap_or_default();
        Error::config(key, e.message().trim().to_string())
    })?;
    let mut cfg = ExperimentConfig::default();

    let g = raw.geometry;
    let wavelength = match (g.wavelength, g.frequency_hz) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "geometry.frequency_hz",
                "conflicts with geometry.wavelength; give only one",
            ))
        }
        (Some(w), None) => w,
        (None, Some(f)) => {
            positive("geometry.frequency_hz", f)?;
            SimGeometry::wavelength_from_frequency(f)
        }
        (None, None) => cfg.geometry.wavelength,
    };
    positive("geometry.wavelength", wavelength)?;
    let geom = &mut cfg.geometry;
    geom.wavelength = wavelength;
    geom.num_tx_antennas = g.num_tx_antennas.unwrap_or(geom.num_tx_antennas);
    geom.num_rx_antennas = g.num_rx_antennas.unwrap_or(geom.num_rx_antennas);
    let tx_atoms = exclusive(g.meta_atoms, "geometry.meta_atoms", g.atoms_per_tx_layer, "geometry.atoms_per_tx_layer")?;
    let rx_atoms = exclusive(g.meta_atoms, "geometry.meta_atoms", g.atoms_per_rx_layer, "geometry.atoms_per_rx_layer")?;
    geom.atoms_per_tx_layer = tx_atoms.unwrap_or(geom.atoms_per_tx_layer);
    geom.atoms_per_rx_layer = rx_atoms.unwrap_or(geom.atoms_per_rx_layer);
    geom.tx_layers = g.tx_layers.unwrap_or(geom.tx_layers);
    geom.rx_layers = g.rx_layers.unwrap_or(geom.rx_layers);
    // spacings and the atom area scale with the wavelength unless given
    geom.layer_spacing = g.layer_spacing.unwrap_or(wavelength / 2.0);
    geom.antenna_spacing = g.antenna_spacing.unwrap_or(wavelength / 2.0);
    geom.atom_spacing = g.atom_spacing.unwrap_or(wavelength / 2.0);
    geom.atom_area = g.atom_area.unwrap_or(wavelength * wavelength / 4.0);

    let c = raw.channel;
    geom.link_distance = c.distance.unwrap_or(geom.link_distance);
    cfg.channel.reference_distance = c.reference_distance.unwrap_or(cfg.channel.reference_distance);
    cfg.channel.path_loss_exponent = c.path_loss_exponent.unwrap_or(cfg.channel.path_loss_exponent);
    cfg.channel.correlation = c.correlation.unwrap_or(cfg.channel.correlation);

    let s = raw.signaling;
    cfg.signaling.kind = s.kind.unwrap_or(cfg.signaling.kind);
    cfg.signaling.modulation_order = s.modulation_order.unwrap_or(cfg.signaling.modulation_order);
    cfg.signaling.num_streams = s.num_streams.unwrap_or(cfg.signaling.num_streams);
    cfg.signaling.vector_cap = s.vector_cap.unwrap_or(cfg.signaling.vector_cap);

    cfg.sigma2_db = raw.noise.sigma2_db.unwrap_or(cfg.sigma2_db);

    let o = raw.optimizer;
    let base = o.initial_step.unwrap_or(InitialSteps::default().precoder);
    cfg.optimizer.initial_steps = InitialSteps {
        precoder: o.precoder_step.unwrap_or(base),
        tx: o.tx_step.unwrap_or(base),
        rx: o.rx_step.unwrap_or(base),
    };
    let ls = LineSearchParams::default();
    cfg.optimizer.line_search = LineSearchParams {
        shrink: o.shrink.unwrap_or(ls.shrink),
        sufficient_decrease: o.sufficient_decrease.unwrap_or(ls.sufficient_decrease),
        max_backtracks: o.max_backtracks.unwrap_or(ls.max_backtracks),
        growth: o.growth.unwrap_or(ls.growth),
    };
    cfg.optimizer.max_iterations = o.max_iterations.unwrap_or(cfg.optimizer.max_iterations);
    cfg.optimizer.tolerance = o.tolerance.unwrap_or(cfg.optimizer.tolerance);
    cfg.optimizer.patience = o.patience.unwrap_or(cfg.optimizer.patience);

    let r = raw.run;
    cfg.run.num_realizations = r.num_realizations.unwrap_or(cfg.run.num_realizations);
    cfg.run.master_seed = r.master_seed.unwrap_or(cfg.run.master_seed);
    cfg.run.mi_samples = r.mi_samples.unwrap_or(cfg.run.mi_samples);
    cfg.run.mi_interval = r.mi_interval.unwrap_or(cfg.run.mi_interval);
    cfg.run.output_dir = r.output_dir;
    cfg.run.record_wall_time = r.record_wall_time.unwrap_or(cfg.run.record_wall_time);

    cfg.precoding_enabled = raw.precoding_enabled.unwrap_or(true);
    cfg.optimizer.optimize_precoder = cfg.precoding_enabled;

    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Dotted key path of the entry covering byte `offset`, reconstructed from
/// the nearest preceding section header.
fn key_path_at(text: &str, offset: usize) -> String {
    let offset = offset.min(text.len());
    let line_start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    if let Some(header) = section_name(line) {
        return header.to_string();
    }
    let key = line.split('=').next().unwrap_or("").trim().trim_matches('"');
    let section = text[..line_start].lines().rev().find_map(|l| section_name(l.trim()));
    match section {
        Some(s) if !key.is_empty() => format!("{s}.{key}"),
        Some(s) => s.to_string(),
        None => key.to_string(),
    }
}

fn section_name(line: &str) -> Option<&str> {
    line.strip_prefix('[')
        .and_then(|r| r.split(']').next())
        .map(str::trim)
        .filter(|s| !s.is_empty())
}
