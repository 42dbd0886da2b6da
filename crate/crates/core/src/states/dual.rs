//! Legendre-dual coordinates.
//!
//! For a faithful state `rho`, the dual matrix is the traceless part of
//! `log rho` times a sign `s`:
//!
//! ```text
//! rho_hat = s * (log rho - Tr(log rho)/d * I)
//! ```
//!
//! and the dual coordinates `xi_hat` are read off `rho_hat` with
//!
//! ```text
//! rho_hat[k][k]     = d*xi_hat[k] - S     (k < d-1),   S = sum_{k<d-1} xi_hat[k]
//! rho_hat[d-1][d-1] = -S
//! rho_hat[j][l]     = xi_hat[a] - i*xi_hat[a+1]   (same pair numbering as the primal chart)
//! ```
//!
//! With `s = +1` the dual coordinates equal the gradient of `phi = Tr(rho log rho)`
//! in the primal chart and the two coordinate systems are biorthogonal, so
//! `psi(rho_hat) = log Tr exp(rho_hat)` is the convex conjugate of `phi`. That
//! is the default; `s = -1` is kept for comparison.

use serde::{Deserialize, Serialize};

use super::coords::{check_len, coord_len, offdiag_index, offdiag_pairs};
use super::matrix::{eig_hermitian_unchecked, matrix_from_spectrum, matrix_log, ComplexMatrix, C64};
use super::DensityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCoords {
    pub dim: usize,
    pub xihat: Vec<f64>,
}

impl DualCoords {
    pub fn new(dim: usize, xihat: Vec<f64>) -> Result<Self> {
        check_len(dim, xihat.len())?;
        Ok(DualCoords { dim, xihat })
    }

    pub fn zeros(dim: usize) -> Self {
        DualCoords { dim, xihat: vec![0.0; coord_len(dim)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DualSign {
    #[default]
    Plus,
    Minus,
}

impl DualSign {
    pub fn factor(self) -> f64 {
        match self {
            DualSign::Plus => 1.0,
            DualSign::Minus => -1.0,
        }
    }
}

pub fn to_dual(rho: &DensityMatrix) -> Result<DualCoords> {
    to_dual_with(rho, DualSign::default())
}

pub fn to_dual_with(rho: &DensityMatrix, sign: DualSign) -> Result<DualCoords> {
    let min_eigenvalue = rho.min_eigenvalue();
    if min_eigenvalue <= crate::tol::EPS_RANK {
        return Err(Error::NotFaithful { min_eigenvalue });
    }
    let log = matrix_log(rho.matrix())?;
    let d = rho.dim();
    let shift = log.trace().re / d as f64;
    let hat = log.sub(&ComplexMatrix::identity(d).scale(shift)).scale(sign.factor());
    Ok(read_dual(&hat))
}

/// Dual coordinates of a Hermitian matrix (its trace part is ignored).
pub(crate) fn read_dual(hat: &ComplexMatrix) -> DualCoords {
    let d = hat.dim();
    let df = d as f64;
    let last = hat.get(d - 1, d - 1).re;
    let mut xihat = vec![0.0; coord_len(d)];
    for (k, x) in xihat.iter_mut().enumerate().take(d - 1) {
        *x = (hat.get(k, k).re - last) / df;
    }
    for (p, (j, l)) in offdiag_pairs(d).into_iter().enumerate() {
        let i = offdiag_index(d, p);
        let z = (hat.get(j, l) + hat.get(l, j).conj()) * 0.5;
        xihat[i] = z.re;
        xihat[i + 1] = -z.im;
    }
    DualCoords { dim: d, xihat }
}

/// Traceless Hermitian matrix `rho_hat(xi_hat)`.
pub fn dual_matrix(c: &DualCoords) -> Result<ComplexMatrix> {
    check_len(c.dim, c.xihat.len())?;
    let d = c.dim;
    let df = d as f64;
    let s: f64 = c.xihat[..d - 1].iter().sum();
    let mut m = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d - 1 {
        m[k * d + k] = C64::new(df * c.xihat[k] - s, 0.0);
    }
    m[d * d - 1] = C64::new(-s, 0.0);
    for (p, (j, l)) in offdiag_pairs(d).into_iter().enumerate() {
        let i = offdiag_index(d, p);
        let z = C64::new(c.xihat[i], -c.xihat[i + 1]);
        m[j * d + l] = z;
        m[l * d + j] = z.conj();
    }
    Ok(ComplexMatrix::from_fn(d, |r, col| m[r * d + col]))
}

pub fn from_dual(c: &DualCoords) -> Result<DensityMatrix> {
    from_dual_with(c, DualSign::default())
}

/// `rho = exp(s * rho_hat) / Tr exp(s * rho_hat)`.
pub fn from_dual_with(c: &DualCoords, sign: DualSign) -> Result<DensityMatrix> {
    let hat = dual_matrix(c)?.scale(sign.factor());
    let (rho, _) = gibbs(&hat);
    Ok(DensityMatrix::from_trusted(rho))
}

/// `(exp(h) / Tr exp(h), log Tr exp(h))`, evaluated with a max-shift so large
/// `h` does not overflow.
pub(crate) fn gibbs(h: &ComplexMatrix) -> (ComplexMatrix, f64) {
    let eig = eig_hermitian_unchecked(&h.hermitian_part());
    let top = eig.values[eig.values.len() - 1];
    let w: Vec<f64> = eig.values.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    (matrix_from_spectrum(&eig.vectors, &p), top + z.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random::random_faithful;
    use crate::states::{from_bloch, BlochVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maximally_mixed_has_zero_dual() {
        for d in 2..=4 {
            let c = to_dual(&DensityMatrix::maximally_mixed(d)).unwrap();
            assert!(c.xihat.iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn round_trip_both_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for sign in [DualSign::Plus, DualSign::Minus] {
            for d in [2, 3] {
                for _ in 0..50 {
                    let rho = random_faithful(d, &mut rng);
                    let back = from_dual_with(&to_dual_with(&rho, sign).unwrap(), sign).unwrap();
                    assert!(back.max_abs_diff(&rho) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn dual_matrix_is_traceless() {
        let c = DualCoords::new(3, vec![0.3, -0.2, 0.1, 0.4, -0.5, 0.2, 0.0, 0.7]).unwrap();
        let m = dual_matrix(&c).unwrap();
        assert!(m.trace().norm() < 1e-15);
        assert!(m.hermitian_deviation() < 1e-15);
    }

    #[test]
    fn qubit_dual_matches_closed_form() {
        // u = -(x / 2r) ln((1+r)/(1-r)) and likewise for y, z; the dual chart
        // for d = 2 is ordered (z, x, y) and the default sign yields -(u, v, w).
        let b = BlochVector::new(0.3, -0.4, 0.5);
        let r = b.radius();
        let k = -((1.0 + r) / (1.0 - r)).ln() / (2.0 * r);
        let (u, v, w) = (k * b.x, k * b.y, k * b.z);
        let rho = from_bloch(&b).unwrap();
        let plus = to_dual_with(&rho, DualSign::Plus).unwrap();
        let minus = to_dual_with(&rho, DualSign::Minus).unwrap();
        for (got, want) in plus.xihat.iter().zip([-w, -u, -v]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for (got, want) in minus.xihat.iter().zip([w, u, v]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn not_faithful_rejected() {
        let pure = from_bloch(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        assert!(matches!(to_dual(&pure), Err(Error::NotFaithful { .. })));
    }
}
