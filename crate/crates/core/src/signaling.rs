//! Discrete symbol alphabets, transmit-vector enumeration and the pairwise
//! differences the objective is built from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    #[default]
    Qam,
    Psk,
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstellationKind::Qam => "qam",
            ConstellationKind::Psk => "psk",
        })
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qam" => Ok(Self::Qam),
            "psk" => Ok(Self::Psk),
            other => Err(Error::Constellation(format!("unknown constellation kind `{other}`"))),
        }
    }
}

/// Unit-average-energy symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub kind: ConstellationKind,
    pub order: usize,
    pub symbols: Vec<C64>,
}

impl Constellation {
    pub fn average_energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.order as f64
    }
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Square Gray-mapped QAM (M a power of 4) or uniform PSK, scaled to unit
/// average energy.
pub fn build_constellation(kind: ConstellationKind, order: usize) -> Result<Constellation> {
    if order < 2 {
        return Err(Error::Constellation(format!("order must be at least 2, got {order}")));
    }
    let symbols = match kind {
        ConstellationKind::Psk => (0..order)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / order as f64))
            .collect(),
        ConstellationKind::Qam => {
            let is_power_of_four = order.is_power_of_two() && order.trailing_zeros() % 2 == 0;
            if !is_power_of_four {
                return Err(Error::Constellation(format!(
                    "square QAM needs M a power of 4 (4, 16, 64, ...), got {order}"
                )));
            }
            let bits_per_axis = order.trailing_zeros() / 2;
            let side = 1usize << bits_per_axis;
            let mask = side - 1;
            let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
            let level = |g: usize| (2.0 * gray_decode(g) as f64 - (side as f64 - 1.0)) / scale;
            (0..order)
                .map(|i| C64::new(level(i >> bits_per_axis), level(i & mask)))
                .collect()
        }
    };
    Ok(Constellation { kind, order, symbols })
}

/// Default cap on the number of enumerated transmit vectors.
pub const DEFAULT_VECTOR_CAP: usize = 4096;

/// All `M^{N_s}` transmit vectors in lexicographic order of the per-stream
/// symbol indices, first stream most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitVectorSet {
    pub num_streams: usize,
    pub vectors: Vec<CVector>,
}

impl TransmitVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vectors stacked as columns, `N_s x N_vec`.
    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }
}

pub fn enumerate_vectors(
    constellation: &Constellation,
    num_streams: usize,
    cap: usize,
) -> Result<TransmitVectorSet> {
    if num_streams == 0 {
        return Err(Error::InvalidArgument("stream count must be at least 1".into()));
    }
    let m = constellation.order;
    let count = (m as u128).checked_pow(num_streams as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::TooManyVectors { count, cap });
    }
    let vectors = (0..count as usize)
        .map(|idx| {
            let mut rest = idx;
            let mut digits = vec![0usize; num_streams];
            for d in digits.iter_mut().rev() {
                *d = rest % m;
                rest /= m;
            }
            CVector::from_iterator(num_streams, digits.iter().map(|&d| constellation.symbols[d]))
        })
        .collect();
    Ok(TransmitVectorSet { num_streams, vectors })
}

/// Difference `x_i - x_j` of one unordered pair `i < j` and its outer product.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDifference {
    pub i: usize,
    pub j: usize,
    pub delta: CVector,
    pub outer: CMatrix,
}

/// Pairwise differences of a transmit vector set.
///
/// Only pairs `i < j` are stored: the `(j, i)` difference is the negation and
/// shares the outer product, and diagonal pairs vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    pub num_vectors: usize,
    pub num_streams: usize,
    pub pairs: Vec<PairDifference>,
}

impl DifferenceSet {
    /// Difference of the ordered pair `(i, j)`.
    pub fn delta(&self, i: usize, j: usize) -> CVector {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => CVector::zeros(self.num_streams),
            std::cmp::Ordering::Less => self.pairs[self.pair_index(i, j)].delta.clone(),
            std::cmp::Ordering::Greater => -self.pairs[self.pair_index(j, i)].delta.clone(),
        }
    }

    /// Outer product of the ordered pair `(i, j)`.
    pub fn outer(&self, i: usize, j: usize) -> CMatrix {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => CMatrix::zeros(self.num_streams, self.num_streams),
            std::cmp::Ordering::Less => self.pairs[self.pair_index(i, j)].outer.clone(),
            std::cmp::Ordering::Greater => self.pairs[self.pair_index(j, i)].outer.clone(),
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        // rows i = 0.. each hold (n - 1 - i) pairs
        let n = self.num_vectors;
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }
}

pub fn build_differences(vectors: &TransmitVectorSet) -> DifferenceSet {
    let n = vectors.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let delta = &vectors.vectors[i] - &vectors.vectors[j];
            let outer = &delta * delta.adjoint();
            pairs.push(PairDifference { i, j, delta, outer });
        }
    }
    DifferenceSet {
        num_vectors: n,
        num_streams: vectors.num_streams,
        pairs,
    }
}
