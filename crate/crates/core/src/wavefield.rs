//! Wave-domain cascades of the two metasurface stacks.
//!
//! Phase matrices are diagonal, so they are applied as row or column
//! scalings and never materialized.

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::geometry::Propagation;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Optimization variables at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Precoder, N_t x N_s.
    pub precoder: CMatrix,
    /// `tx_phases[l-1]` holds the N unit-modulus phases of transmit layer l.
    pub tx_phases: Vec<CVector>,
    /// `rx_phases[k-1]` holds the E unit-modulus phases of receive layer k.
    pub rx_phases: Vec<CVector>,
}

impl DesignPoint {
    /// Random feasible point: Gaussian precoder projected to `tr(PP^H) = N_s`
    /// and phases uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, prop: &Propagation, num_streams: usize) -> Self {
        let precoder = CMatrix::from_fn(prop.num_tx_antennas(), num_streams, |_, _| {
            complex_gaussian(rng, 1.0)
        });
        let precoder = crate::apgm::project_power(&precoder).unwrap_or_else(|_| fixed_precoder(prop.num_tx_antennas(), num_streams));
        let mut phases = |n: usize| {
            CVector::from_fn(n, |_, _| {
                C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
            })
        };
        let tx_phases = (0..prop.tx_layers()).map(|_| phases(prop.tx_atoms())).collect();
        let rx_phases = (0..prop.rx_layers()).map(|_| phases(prop.rx_atoms())).collect();
        Self {
            precoder,
            tx_phases,
            rx_phases,
        }
    }

    pub fn num_streams(&self) -> usize {
        self.precoder.ncols()
    }

    pub fn check_dims(&self, prop: &Propagation) -> Result<()> {
        if self.precoder.nrows() != prop.num_tx_antennas() {
            return Err(Error::dim("precoder rows", prop.num_tx_antennas(), self.precoder.nrows()));
        }
        check_phases("transmit phases", &self.tx_phases, prop.tx_layers(), prop.tx_atoms())?;
        check_phases("receive phases", &self.rx_phases, prop.rx_layers(), prop.rx_atoms())
    }
}

fn check_phases(context: &'static str, phases: &[CVector], layers: usize, atoms: usize) -> Result<()> {
    if phases.len() != layers {
        return Err(Error::dim(context, format!("{layers} layers"), format!("{} layers", phases.len())));
    }
    if let Some(bad) = phases.iter().find(|p| p.len() != atoms) {
        return Err(Error::dim(context, format!("{atoms} atoms"), format!("{} atoms", bad.len())));
    }
    Ok(())
}

/// Power-feasible fixed precoder: the leading `N_s` columns of the identity,
/// scaled so that `tr(PP^H) = N_s`. With `N_t = N_s` this is the identity.
pub fn fixed_precoder(num_tx: usize, num_streams: usize) -> CMatrix {
    let p = CMatrix::identity(num_tx, num_streams);
    crate::apgm::project_power(&p).unwrap_or(p)
}

pub(crate) fn scale_rows(m: &mut CMatrix, d: &CVector) {
    for (mut row, &s) in m.row_iter_mut().zip(d.iter()) {
        row *= s;
    }
}

pub(crate) fn scale_columns(m: &mut CMatrix, d: &CVector) {
    for (mut col, &s) in m.column_iter_mut().zip(d.iter()) {
        col *= s;
    }
}

/// `B = Φ^L W^L ··· Φ^1 W^1` (N x N_t).
pub fn transmit_cascade(phases: &[CVector], tx: &[CMatrix]) -> Result<CMatrix> {
    if phases.len() != tx.len() || tx.is_empty() {
        return Err(Error::dim("transmit cascade", format!("{} layers", tx.len()), format!("{} phase vectors", phases.len())));
    }
    let mut b = tx[0].clone();
    for (l, (phi, w)) in phases.iter().zip(tx).enumerate() {
        if l > 0 {
            if w.ncols() != b.nrows() {
                return Err(Error::dim("transmit cascade", b.nrows(), w.ncols()));
            }
            b = w * b;
        }
        if phi.len() != b.nrows() {
            return Err(Error::dim("transmit cascade phases", b.nrows(), phi.len()));
        }
        scale_rows(&mut b, phi);
    }
    Ok(b)
}

/// `Z = U^1 Ψ^1 U^2 Ψ^2 ··· U^K Ψ^K` (N_r x E).
pub fn receive_cascade(phases: &[CVector], rx: &[CMatrix]) -> Result<CMatrix> {
    if phases.len() != rx.len() || rx.is_empty() {
        return Err(Error::dim("receive cascade", format!("{} layers", rx.len()), format!("{} phase vectors", phases.len())));
    }
    let mut z = rx[0].clone();
    for (k, (psi, u)) in phases.iter().zip(rx).enumerate() {
        if k > 0 {
            if u.nrows() != z.ncols() {
                return Err(Error::dim("receive cascade", z.ncols(), u.nrows()));
            }
            z = z * u;
        }
        if psi.len() != z.ncols() {
            return Err(Error::dim("receive cascade phases", z.ncols(), psi.len()));
        }
        scale_columns(&mut z, psi);
    }
    Ok(z)
}

/// `H = Z G B` (N_r x N_t).
pub fn end_to_end(z: &CMatrix, g: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if z.ncols() != g.nrows() {
        return Err(Error::dim("end-to-end Z·G", z.ncols(), g.nrows()));
    }
    if g.ncols() != b.nrows() {
        return Err(Error::dim("end-to-end G·B", g.ncols(), b.nrows()));
    }
    Ok(z * (g * b))
}

/// `Θ^{m:n} = (W^m)^H (Φ^m)^H ··· (W^n)^H (Φ^n)^H` with 1-based indices.
///
/// The empty range `m > n` is the identity sized to multiply whatever sits
/// at that position: `N_t` for `m = 1` and `N` otherwise.
pub fn theta_product(m: usize, n: usize, phases: &[CVector], tx: &[CMatrix]) -> Result<CMatrix> {
    let layers = tx.len();
    if m == 0 || m > layers + 1 {
        return Err(Error::IndexOutOfRange { what: "Θ start layer", index: m, max: layers + 1 });
    }
    if n > layers {
        return Err(Error::IndexOutOfRange { what: "Θ end layer", index: n, max: layers });
    }
    if m > n {
        let size = if m <= layers { tx[m - 1].ncols() } else { tx[layers - 1].nrows() };
        return Ok(CMatrix::identity(size, size));
    }
    // build right-to-left so each step multiplies a thinner operand
    let mut acc: Option<CMatrix> = None;
    for l in (m..=n).rev() {
        let mut factor = tx[l - 1].adjoint();
        scale_columns(&mut factor, &phases[l - 1].map(|c| c.conj()));
        acc = Some(match acc {
            None => factor,
            Some(right) => factor * right,
        });
    }
    Ok(acc.expect("non-empty range"))
}

/// `Υ^{m:n} = (Ψ^m)^H (U^m)^H (Ψ^{m-1})^H (U^{m-1})^H ··· (Ψ^n)^H (U^n)^H`,
/// descending from `m` to `n`.
///
/// The empty range `m < n` is the identity: `N_r` when `n = 1`, `E`
/// otherwise.
pub fn upsilon_product(m: usize, n: usize, phases: &[CVector], rx: &[CMatrix]) -> Result<CMatrix> {
    let layers = rx.len();
    if m > layers {
        return Err(Error::IndexOutOfRange { what: "Υ start layer", index: m, max: layers });
    }
    if n == 0 || n > layers + 1 {
        return Err(Error::IndexOutOfRange { what: "Υ end layer", index: n, max: layers + 1 });
    }
    if m < n {
        let size = if n == 1 { rx[0].nrows() } else { rx[0].ncols() };
        return Ok(CMatrix::identity(size, size));
    }
    let mut acc: Option<CMatrix> = None;
    for k in n..=m {
        let mut factor = rx[k - 1].adjoint();
        scale_rows(&mut factor, &phases[k - 1].map(|c| c.conj()));
        acc = Some(match acc {
            None => factor,
            Some(right) => factor * right,
        });
    }
    Ok(acc.expect("non-empty range"))
}

/// Cascades and end-to-end channel evaluated at one design point.
#[derive(Debug, Clone)]
pub struct CascadeCache {
    pub b: CMatrix,
    pub z: CMatrix,
    pub h: CMatrix,
    /// Bumped on every refresh; lets callers detect stale snapshots.
    pub version: u64,
}

impl CascadeCache {
    pub fn new(point: &DesignPoint, prop: &Propagation, g: &CMatrix) -> Result<Self> {
        let b = transmit_cascade(&point.tx_phases, &prop.tx)?;
        let z = receive_cascade(&point.rx_phases, &prop.rx)?;
        let h = end_to_end(&z, g, &b)?;
        Ok(Self { b, z, h, version: 0 })
    }

    pub fn refresh(&mut self, point: &DesignPoint, prop: &Propagation, g: &CMatrix) -> Result<()> {
        let version = self.version + 1;
        *self = Self::new(point, prop, g)?;
        self.version = version;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| complex_gaussian(rng, 1.0))
    }

    fn random_phases(rng: &mut ChaCha20Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| C64::from_polar(1.0, rng.random_range(0.0..6.3)))
    }

    fn diag(v: &CVector) -> CMatrix {
        CMatrix::from_diagonal(v)
    }

    /// Random stack: W^1 is n x nt, W^l is n x n.
    fn random_stack(rng: &mut ChaCha20Rng, layers: usize, n: usize, nt: usize) -> (Vec<CMatrix>, Vec<CVector>) {
        let mats = (0..layers)
            .map(|l| random_matrix(rng, n, if l == 0 { nt } else { n }))
            .collect();
        let phases = (0..layers).map(|_| random_phases(rng, n)).collect();
        (mats, phases)
    }

    fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn single_layer_identity_phases() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let w = random_matrix(&mut rng, 5, 2);
        let ones = CVector::from_element(5, C64::new(1.0, 0.0));
        assert_eq!(transmit_cascade(&[ones.clone()], &[w.clone()]).unwrap(), w);

        let u = random_matrix(&mut rng, 2, 5);
        assert_eq!(receive_cascade(&[ones], &[u.clone()]).unwrap(), u);
    }

    #[test]
    fn two_layer_structure() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (w, mut phi) = random_stack(&mut rng, 2, 4, 2);
        phi[1] = CVector::from_element(4, C64::new(1.0, 0.0));
        let b = transmit_cascade(&phi, &w).unwrap();
        assert!(rel(&b, &(&w[1] * diag(&phi[0]) * &w[0])) < 1e-14);

        let u = vec![random_matrix(&mut rng, 2, 4), random_matrix(&mut rng, 4, 4)];
        let ones = vec![CVector::from_element(4, C64::new(1.0, 0.0)); 2];
        let z = receive_cascade(&ones, &u).unwrap();
        assert!(rel(&z, &(&u[0] * &u[1])) < 1e-14);
    }

    #[test]
    fn cascades_match_dense_products() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (w, phi) = random_stack(&mut rng, 4, 6, 2);
        let mut dense = diag(&phi[0]) * &w[0];
        for l in 1..4 {
            dense = diag(&phi[l]) * &w[l] * dense;
        }
        assert!(rel(&transmit_cascade(&phi, &w).unwrap(), &dense) < 1e-12);

        let u: Vec<CMatrix> = (0..4)
            .map(|k| random_matrix(&mut rng, if k == 0 { 3 } else { 6 }, 6))
            .collect();
        let psi: Vec<CVector> = (0..4).map(|_| random_phases(&mut rng, 6)).collect();
        let mut dense = u[0].clone() * diag(&psi[0]);
        for k in 1..4 {
            dense = dense * &u[k] * diag(&psi[k]);
        }
        assert!(rel(&receive_cascade(&psi, &u).unwrap(), &dense) < 1e-12);
    }

    #[test]
    fn cascade_dimension_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (w, mut phi) = random_stack(&mut rng, 2, 4, 2);
        phi[1] = random_phases(&mut rng, 3);
        assert!(matches!(transmit_cascade(&phi, &w), Err(Error::Dimension { .. })));
        assert!(transmit_cascade(&phi[..1], &w).is_err());
        let z = random_matrix(&mut rng, 2, 4);
        let g = random_matrix(&mut rng, 5, 4);
        let b = random_matrix(&mut rng, 4, 2);
        assert!(end_to_end(&z, &g, &b).is_err());
    }

    #[test]
    fn end_to_end_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let z = random_matrix(&mut rng, 2, 4);
        let b = random_matrix(&mut rng, 3, 2);
        let h = end_to_end(&z, &CMatrix::zeros(4, 3), &b).unwrap();
        assert_eq!(h, CMatrix::zeros(2, 2));

        let s = |v: f64| CMatrix::from_element(1, 1, C64::new(v, 0.5));
        let h = end_to_end(&s(2.0), &s(3.0), &s(-1.0)).unwrap();
        let expected = C64::new(2.0, 0.5) * C64::new(3.0, 0.5) * C64::new(-1.0, 0.5);
        assert!((h[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn theta_boundaries_and_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (w, phi) = random_stack(&mut rng, 3, 5, 2);
        assert_eq!(theta_product(1, 0, &phi, &w).unwrap(), CMatrix::identity(2, 2));
        assert_eq!(theta_product(4, 3, &phi, &w).unwrap(), CMatrix::identity(5, 5));
        assert_eq!(theta_product(3, 2, &phi, &w).unwrap(), CMatrix::identity(5, 5));
        let single = theta_product(2, 2, &phi, &w).unwrap();
        assert!(rel(&single, &(w[1].adjoint() * diag(&phi[1]).adjoint())) < 1e-15);
        let b = transmit_cascade(&phi, &w).unwrap();
        assert!(rel(&theta_product(1, 3, &phi, &w).unwrap(), &b.adjoint()) < 1e-12);
        assert!(theta_product(0, 1, &phi, &w).is_err());
        assert!(theta_product(1, 4, &phi, &w).is_err());
    }

    #[test]
    fn upsilon_boundaries_and_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let u: Vec<CMatrix> = (0..3)
            .map(|k| random_matrix(&mut rng, if k == 0 { 2 } else { 5 }, 5))
            .collect();
        let psi: Vec<CVector> = (0..3).map(|_| random_phases(&mut rng, 5)).collect();
        assert_eq!(upsilon_product(0, 1, &psi, &u).unwrap(), CMatrix::identity(2, 2));
        assert_eq!(upsilon_product(3, 4, &psi, &u).unwrap(), CMatrix::identity(5, 5));
        let single = upsilon_product(2, 2, &psi, &u).unwrap();
        assert!(rel(&single, &(diag(&psi[1]).adjoint() * u[1].adjoint())) < 1e-15);
        let z = receive_cascade(&psi, &u).unwrap();
        assert!(rel(&upsilon_product(3, 1, &psi, &u).unwrap(), &z.adjoint()) < 1e-12);
        assert!(upsilon_product(4, 1, &psi, &u).is_err());
    }

    #[test]
    fn unit_modulus_single_layer_preserves_norm() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (w, phi) = random_stack(&mut rng, 1, 7, 3);
        let b = transmit_cascade(&phi, &w).unwrap();
        assert!((b.norm() - w[0].norm()).abs() < 1e-12 * w[0].norm());
    }

    #[test]
    fn cache_matches_direct_product() {
        let geom = crate::geometry::SimGeometry {
            atoms_per_tx_layer: 9,
            atoms_per_rx_layer: 4,
            tx_layers: 2,
            rx_layers: 3,
            ..crate::geometry::SimGeometry::reference()
        };
        let prop = crate::geometry::build_all_propagation(&geom).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let g = random_matrix(&mut rng, 4, 9);
        let point = DesignPoint::random(&mut rng, &prop, 2);
        point.check_dims(&prop).unwrap();
        let mut cache = CascadeCache::new(&point, &prop, &g).unwrap();
        assert!(rel(&cache.h, &(&cache.z * &g * &cache.b)) < 1e-10);
        cache.refresh(&point, &prop, &g).unwrap();
        assert_eq!(cache.version, 1);
        assert_eq!(cache.h.shape(), (2, 2));
    }
}
