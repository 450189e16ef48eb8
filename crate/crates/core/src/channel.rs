//! Spatially correlated Rayleigh channel between the transmit and receive
//! stacks, with log-distance path loss folded into the fading variance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::LayerLayout;
use crate::{CMatrix, Error, Result, C64};

/// Log-distance path loss anchored at free-space loss at `reference_distance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub reference_distance: f64,
    pub exponent: f64,
    pub wavelength: f64,
}

impl PathLossModel {
    pub fn new(reference_distance: f64, exponent: f64, wavelength: f64) -> Result<Self> {
        if !(reference_distance > 0.0 && exponent > 0.0 && wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "path loss needs d0 > 0, b > 0, λ > 0 (got {reference_distance}, {exponent}, {wavelength})"
            )));
        }
        Ok(Self {
            reference_distance,
            exponent,
            wavelength,
        })
    }

    /// Attenuation in dB at `distance`.
    pub fn path_loss_db(&self, distance: f64) -> Result<f64> {
        let d0 = self.reference_distance;
        if !(distance >= d0) {
            return Err(Error::InvalidArgument(format!(
                "distance {distance} m is below the reference distance {d0} m"
            )));
        }
        let free_space = 20.0 * (4.0 * PI * d0 / self.wavelength).log10();
        Ok(free_space + 10.0 * self.exponent * (distance / d0).log10())
    }

    /// Linear power gain `10^(-dB/10)`.
    pub fn gain_linear(&self, distance: f64) -> Result<f64> {
        Ok(db_to_linear(-self.path_loss_db(distance)?))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    /// Isotropic scattering: `sinc(2 d / λ)`.
    #[default]
    Sinc,
    /// Uncorrelated elements.
    Identity,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Spatial correlation of a planar layer, `R[m,n] = sinc(2 d_mn / λ)`.
pub fn correlation_matrix(layout: &LayerLayout, wavelength: f64) -> CMatrix {
    let n = layout.len();
    CMatrix::from_fn(n, n, |m, k| {
        if m == k {
            C64::new(1.0, 0.0)
        } else {
            let d = (layout.positions[m] - layout.positions[k]).norm();
            C64::new(sinc(2.0 * d / wavelength), 0.0)
        }
    })
}

pub fn correlation_for_model(model: CorrelationModel, layout: &LayerLayout, wavelength: f64) -> CMatrix {
    match model {
        CorrelationModel::Sinc => correlation_matrix(layout, wavelength),
        CorrelationModel::Identity => CMatrix::identity(layout.len(), layout.len()),
    }
}

/// Relative tolerance on negative eigenvalues before a matrix is declared
/// not positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-6;

/// Hermitian PSD square root via eigendecomposition, clamping tiny negative
/// eigenvalues to zero.
pub fn psd_sqrt(r: &CMatrix) -> Result<CMatrix> {
    if !r.is_square() {
        return Err(Error::dim("psd_sqrt", "square matrix", format!("{:?}", r.shape())));
    }
    let n = r.nrows();
    if n == 0 {
        return Ok(r.clone());
    }
    let hermitian = (r + r.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(hermitian);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if let Some(&worst) = eig
        .eigenvalues
        .iter()
        .filter(|&&v| v < -PSD_TOLERANCE * scale)
        .min_by(|a, b| a.total_cmp(b))
    {
        return Err(Error::NotPsd { eigenvalue: worst });
    }
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| C64::from(v.max(0.0).sqrt())));
    let q = &eig.eigenvectors;
    let s = q * roots * q.adjoint();
    Ok((&s + s.adjoint()) * C64::from(0.5))
}

/// Transmit- and receive-side correlation matrices with their square roots.
#[derive(Debug, Clone)]
pub struct CorrelationPair {
    pub tx: CMatrix,
    pub rx: CMatrix,
    pub sqrt_tx: CMatrix,
    pub sqrt_rx: CMatrix,
}

impl CorrelationPair {
    pub fn new(tx: CMatrix, rx: CMatrix) -> Result<Self> {
        let sqrt_tx = psd_sqrt(&tx)?;
        let sqrt_rx = psd_sqrt(&rx)?;
        Ok(Self {
            tx,
            rx,
            sqrt_tx,
            sqrt_rx,
        })
    }

    pub fn from_layouts(
        model: CorrelationModel,
        tx_layer: &LayerLayout,
        rx_layer: &LayerLayout,
        wavelength: f64,
    ) -> Result<Self> {
        Self::new(
            correlation_for_model(model, tx_layer, wavelength),
            correlation_for_model(model, rx_layer, wavelength),
        )
    }
}

/// One draw of the inter-stack channel `G` (E x N).
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub g: CMatrix,
    pub path_gain_linear: f64,
    pub seed: Option<u64>,
}

/// Circularly-symmetric complex Gaussian with the given total variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// `G = R_R^{1/2} Ḡ R_T^{1/2}` with `Ḡ ~ CN(0, β I)`.
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    corr: &CorrelationPair,
    path_gain_linear: f64,
) -> Result<ChannelRealization> {
    if !(path_gain_linear >= 0.0 && path_gain_linear.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "path gain must be finite and non-negative, got {path_gain_linear}"
        )));
    }
    let (e, n) = (corr.sqrt_rx.nrows(), corr.sqrt_tx.nrows());
    // column-major fill keeps the draw order stable
    let raw = CMatrix::from_fn(e, n, |_, _| complex_gaussian(rng, path_gain_linear));
    let g = &corr.sqrt_rx * raw * &corr.sqrt_tx;
    Ok(ChannelRealization {
        g,
        path_gain_linear,
        seed: None,
    })
}
