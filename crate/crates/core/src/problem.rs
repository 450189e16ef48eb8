//! One channel realization together with everything needed to evaluate the
//! objective and its gradients at arbitrary design points.

use crate::geometry::Propagation;
use crate::objective::{evaluate_objective, ObjectiveValue};
use crate::signaling::{build_differences, DifferenceSet, TransmitVectorSet};
use crate::wavefield::{CascadeCache, DesignPoint};
use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone)]
pub struct Problem {
    pub prop: Propagation,
    /// Inter-stack channel, E x N.
    pub g: CMatrix,
    pub vectors: TransmitVectorSet,
    pub diffs: DifferenceSet,
    pub noise_variance: f64,
}

/// Cascades and objective at one design point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cache: CascadeCache,
    pub objective: ObjectiveValue,
}

impl Problem {
    pub fn new(prop: Propagation, g: CMatrix, vectors: TransmitVectorSet, noise_variance: f64) -> Result<Self> {
        if g.shape() != (prop.rx_atoms(), prop.tx_atoms()) {
            return Err(Error::dim(
                "channel G",
                format!("{}x{}", prop.rx_atoms(), prop.tx_atoms()),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance must be positive, got {noise_variance}")));
        }
        let diffs = build_differences(&vectors);
        Ok(Self {
            prop,
            g,
            vectors,
            diffs,
            noise_variance,
        })
    }

    pub fn num_streams(&self) -> usize {
        self.vectors.num_streams
    }

    pub fn num_vectors(&self) -> usize {
        self.vectors.len()
    }

    pub fn evaluate(&self, point: &DesignPoint) -> Result<Evaluation> {
        let cache = CascadeCache::new(point, &self.prop, &self.g)?;
        let objective = evaluate_objective(&cache.h, &point.precoder, &self.diffs, self.noise_variance)?;
        Ok(Evaluation { cache, objective })
    }
}
