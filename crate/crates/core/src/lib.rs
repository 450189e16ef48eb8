//! Simulation and optimization of stacked-intelligent-metasurface (SIM)
//! holographic MIMO links.
//!
//! The crate models a link in which both transmitter and receiver carry a
//! stack of programmable metasurface layers. Propagation between layers
//! follows Rayleigh-Sommerfeld diffraction, the inter-SIM channel is a
//! spatially correlated Rayleigh channel, and the design variables (digital
//! precoder plus per-layer phase shifts) are chosen to maximize the channel
//! cutoff rate of a discrete-input MIMO channel with an adaptive projected
//! gradient method.
//!
//! Module map:
//!
//! - [`geometry`]: element layouts and inter-layer propagation matrices
//! - [`channel`]: path loss, spatial correlation and channel sampling
//! - [`signaling`]: constellations, transmit vectors, pairwise differences
//! - [`wavefield`]: wave-domain cascades and the end-to-end channel
//! - [`objective`]: cutoff-rate objective and Monte-Carlo mutual information
//! - [`gradients`]: analytic Wirtinger gradients of the objective
//! - [`apgm`]: projections, backtracking line search and the optimizer loop
//! - [`harness`]: configuration, experiments, sweeps, benchmarks, plot data

pub mod apgm;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod gradients;
pub mod harness;
pub mod objective;
pub mod problem;
pub mod signaling;
pub mod wavefield;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

/// Speed of light in vacuum (m/s), used to convert a carrier frequency to a
/// wavelength.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;
