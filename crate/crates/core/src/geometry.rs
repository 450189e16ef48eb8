//! Element layouts and Rayleigh-Sommerfeld propagation between parallel layers.
//!
//! All layers lie in planes parallel to the xy-plane and are centered on the
//! z-axis. The transmit antennas sit at `z = 0`, transmit layer `l` at
//! `z = l * layer_spacing`; the receive antennas sit at `z = d` and receive
//! layer `k` at `z = d - k * layer_spacing`. The wave therefore always travels
//! towards larger z.

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64, SPEED_OF_LIGHT};

/// Physical layout of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGeometry {
    pub wavelength: f64,
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    /// Meta-atoms per transmit layer; must be a perfect square.
    pub atoms_per_tx_layer: usize,
    /// Meta-atoms per receive layer; must be a perfect square.
    pub atoms_per_rx_layer: usize,
    pub tx_layers: usize,
    pub rx_layers: usize,
    /// Separation between neighbouring layers, and between the antenna array
    /// and the first layer.
    pub layer_spacing: f64,
    pub antenna_spacing: f64,
    pub atom_spacing: f64,
    pub atom_area: f64,
    pub link_distance: f64,
}

impl SimGeometry {
    /// Desk-scale reference layout: 6 GHz carrier, 2x2 antennas, 4+4 layers
    /// of 7x7 half-wavelength meta-atoms, 300 m link.
    pub fn reference() -> Self {
        let wavelength = 0.05;
        Self {
            wavelength,
            num_tx_antennas: 2,
            num_rx_antennas: 2,
            atoms_per_tx_layer: 49,
            atoms_per_rx_layer: 49,
            tx_layers: 4,
            rx_layers: 4,
            layer_spacing: wavelength / 2.0,
            antenna_spacing: wavelength / 2.0,
            atom_spacing: wavelength / 2.0,
            atom_area: wavelength * wavelength / 4.0,
            link_distance: 300.0,
        }
    }

    pub fn wavelength_from_frequency(frequency_hz: f64) -> f64 {
        SPEED_OF_LIGHT / frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("layer_spacing", self.layer_spacing),
            ("antenna_spacing", self.antenna_spacing),
            ("atom_spacing", self.atom_spacing),
            ("atom_area", self.atom_area),
            ("link_distance", self.link_distance),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Geometry(format!("{name} must be positive, got {value}")));
            }
        }
        let counts = [
            ("num_tx_antennas", self.num_tx_antennas),
            ("num_rx_antennas", self.num_rx_antennas),
            ("atoms_per_tx_layer", self.atoms_per_tx_layer),
            ("atoms_per_rx_layer", self.atoms_per_rx_layer),
            ("tx_layers", self.tx_layers),
            ("rx_layers", self.rx_layers),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Geometry(format!("{name} must be at least 1")));
            }
        }
        for (name, value) in [
            ("atoms_per_tx_layer", self.atoms_per_tx_layer),
            ("atoms_per_rx_layer", self.atoms_per_rx_layer),
        ] {
            if exact_sqrt(value).is_none() {
                return Err(Error::Geometry(format!(
                    "{name} = {value} is not a perfect square"
                )));
            }
        }
        let stack_depth = (self.tx_layers + self.rx_layers) as f64 * self.layer_spacing;
        if self.link_distance <= stack_depth {
            return Err(Error::Geometry(format!(
                "link distance {} m does not clear the two stacks ({} m)",
                self.link_distance, stack_depth
            )));
        }
        Ok(())
    }

    pub fn tx_antenna_layout(&self) -> Result<LayerLayout> {
        build_antenna_layout(self.num_tx_antennas, self.antenna_spacing, Point3::origin())
    }

    pub fn rx_antenna_layout(&self) -> Result<LayerLayout> {
        build_antenna_layout(
            self.num_rx_antennas,
            self.antenna_spacing,
            Point3::new(0.0, 0.0, self.link_distance),
        )
    }

    /// Layout of transmit layer `l` (1-based).
    pub fn tx_layer_layout(&self, l: usize) -> Result<LayerLayout> {
        build_layer_layout(
            self.atoms_per_tx_layer,
            self.atom_spacing,
            Point3::new(0.0, 0.0, l as f64 * self.layer_spacing),
        )
    }

    /// Layout of receive layer `k` (1-based, layer 1 is next to the antennas).
    pub fn rx_layer_layout(&self, k: usize) -> Result<LayerLayout> {
        build_layer_layout(
            self.atoms_per_rx_layer,
            self.atom_spacing,
            Point3::new(0.0, 0.0, self.link_distance - k as f64 * self.layer_spacing),
        )
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Element positions of one planar array.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerLayout {
    pub positions: Vec<Point3<f64>>,
}

impl LayerLayout {
    /// Layers are parallel to the xy-plane.
    pub fn normal_axis(&self) -> Vector3<f64> {
        Vector3::z()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Common z-coordinate of the plane.
    pub fn plane_z(&self) -> f64 {
        self.positions[0].z
    }
}

/// Square grid of `count` elements centered at `center`, row-major with x
/// varying fastest.
pub fn build_layer_layout(count: usize, spacing: f64, center: Point3<f64>) -> Result<LayerLayout> {
    let side = exact_sqrt(count)
        .filter(|&s| s > 0)
        .ok_or_else(|| Error::Geometry(format!("layer element count {count} is not a perfect square")))?;
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Geometry(format!("element spacing must be positive, got {spacing}")));
    }
    let offset = (side as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(count);
    for row in 0..side {
        for col in 0..side {
            positions.push(Point3::new(
                center.x + (col as f64 - offset) * spacing,
                center.y + (row as f64 - offset) * spacing,
                center.z,
            ));
        }
    }
    Ok(LayerLayout { positions })
}

/// Uniform linear array along x centered at `center`.
pub fn build_antenna_layout(count: usize, spacing: f64, center: Point3<f64>) -> Result<LayerLayout> {
    if count == 0 {
        return Err(Error::Geometry("antenna count must be at least 1".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Geometry(format!("antenna spacing must be positive, got {spacing}")));
    }
    let offset = (count as f64 - 1.0) / 2.0;
    let positions = (0..count)
        .map(|i| Point3::new(center.x + (i as f64 - offset) * spacing, center.y, center.z))
        .collect();
    Ok(LayerLayout { positions })
}

/// Rayleigh-Sommerfeld coupling between two elements:
/// `(A cos χ / d) (1/(2πd) - j/λ) exp(j 2π d / λ)`.
pub fn rs_coefficient(area: f64, distance: f64, cos_angle: f64, wavelength: f64) -> Result<C64> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Geometry(format!(
            "propagation distance must be positive, got {distance} (coincident elements?)"
        )));
    }
    if !(wavelength > 0.0 && area > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavelength and area must be positive (λ = {wavelength}, A = {area})"
        )));
    }
    if !(0.0..=1.0).contains(&cos_angle) {
        return Err(Error::InvalidArgument(format!("cos χ = {cos_angle} outside [0, 1]")));
    }
    let amplitude = area * cos_angle / distance;
    let near_far = C64::new(1.0 / (2.0 * PI * distance), -1.0 / wavelength);
    let phase = C64::from_polar(1.0, 2.0 * PI * distance / wavelength);
    Ok(near_far * phase * amplitude)
}

/// Propagation matrix with rows indexed by `dest` elements and columns by
/// `source` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    pub entries: CMatrix,
    pub source_z: f64,
    pub dest_z: f64,
}

pub fn build_propagation_matrix(
    source: &LayerLayout,
    dest: &LayerLayout,
    area: f64,
    wavelength: f64,
) -> Result<PropagationMatrix> {
    if source.is_empty() || dest.is_empty() {
        return Err(Error::Geometry("empty layout".into()));
    }
    let source_z = source.plane_z();
    let dest_z = dest.plane_z();
    let dz = (dest_z - source_z).abs();
    if dz == 0.0 {
        return Err(Error::Geometry(format!(
            "source and destination layers share the plane z = {source_z}"
        )));
    }
    let rows: Vec<Vec<C64>> = dest
        .positions
        .par_iter()
        .map(|p_dest| {
            source
                .positions
                .iter()
                .map(|p_src| {
                    let distance = (p_dest - p_src).norm();
                    rs_coefficient(area, distance, (dz / distance).min(1.0), wavelength)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let entries = CMatrix::from_fn(dest.len(), source.len(), |m, n| rows[m][n]);
    Ok(PropagationMatrix {
        entries,
        source_z,
        dest_z,
    })
}

/// All propagation matrices of the link.
///
/// `tx[0]` is `W^1` (N x N_t) and `tx[l-1]` is `W^l`; `rx[0]` is `U^1`
/// (N_r x E) and `rx[k-1]` is `U^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub tx: Vec<CMatrix>,
    pub rx: Vec<CMatrix>,
}

impl Propagation {
    pub fn tx_layers(&self) -> usize {
        self.tx.len()
    }

    pub fn rx_layers(&self) -> usize {
        self.rx.len()
    }

    pub fn num_tx_antennas(&self) -> usize {
        self.tx[0].ncols()
    }

    pub fn num_rx_antennas(&self) -> usize {
        self.rx[0].nrows()
    }

    pub fn tx_atoms(&self) -> usize {
        self.tx[0].nrows()
    }

    pub fn rx_atoms(&self) -> usize {
        self.rx[0].ncols()
    }
}

pub fn build_all_propagation(geom: &SimGeometry) -> Result<Propagation> {
    geom.validate()?;
    let (area, lambda) = (geom.atom_area, geom.wavelength);

    let tx_antennas = geom.tx_antenna_layout()?;
    let tx1 = geom.tx_layer_layout(1)?;
    let mut tx = vec![build_propagation_matrix(&tx_antennas, &tx1, area, lambda)?.entries];
    if geom.tx_layers > 1 {
        // every layer shares the same arrangement, so one matrix serves all
        let inner = build_propagation_matrix(&tx1, &geom.tx_layer_layout(2)?, area, lambda)?.entries;
        tx.extend(std::iter::repeat_n(inner, geom.tx_layers - 1));
    }

    let rx_antennas = geom.rx_antenna_layout()?;
    let rx1 = geom.rx_layer_layout(1)?;
    let mut rx = vec![build_propagation_matrix(&rx1, &rx_antennas, area, lambda)?.entries];
    if geom.rx_layers > 1 {
        let inner = build_propagation_matrix(&geom.rx_layer_layout(2)?, &rx1, area, lambda)?.entries;
        rx.extend(std::iter::repeat_n(inner, geom.rx_layers - 1));
    }

    Ok(Propagation { tx, rx })
}
