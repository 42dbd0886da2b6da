//! Convex potentials of the divergence geometry.
//!
//! `phi(xi) = Tr(rho log rho)` on the primal chart and its conjugate
//! `psi(xi_hat) = log Tr exp(rho_hat)` on the dual chart. The divergence is the
//! Bregman divergence of either one.

use crate::error::{Error, Result};
use crate::states::coords::{check_len, read_coords};
use crate::states::dual::{gibbs, read_dual};
use crate::states::{dual_matrix, from_coords, matrix_log, DualCoords, GeneralizedCoords};
use crate::states::matrix::eig_hermitian_unchecked;
use crate::tol;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn faithful_matrix(c: &GeneralizedCoords) -> Result<crate::states::ComplexMatrix> {
    let m = from_coords(c)?;
    let min_eigenvalue = eig_hermitian_unchecked(&m).min_value();
    if min_eigenvalue <= tol::EPS_RANK {
        return Err(Error::NotFaithful { min_eigenvalue });
    }
    Ok(m)
}

/// `Tr(rho log rho)` at a faithful point of the primal chart.
pub fn phi_potential(c: &GeneralizedCoords) -> Result<f64> {
    let m = faithful_matrix(c)?;
    Ok(eig_hermitian_unchecked(&m).values.iter().map(|l| l * l.ln()).sum())
}

/// Gradient of [`phi_potential`]; equals the dual coordinates of the state.
pub fn grad_phi(c: &GeneralizedCoords) -> Result<DualCoords> {
    let m = faithful_matrix(c)?;
    Ok(read_dual(&matrix_log(&m)?))
}

pub fn psi_potential(c: &DualCoords) -> Result<f64> {
    Ok(gibbs(&dual_matrix(c)?).1)
}

/// Gradient of [`psi_potential`]; equals the primal coordinates of the state.
pub fn grad_psi(c: &DualCoords) -> Result<GeneralizedCoords> {
    Ok(read_coords(&gibbs(&dual_matrix(c)?).0))
}

/// `D_hat(a || b) = psi(a) - psi(b) - <a - b, grad psi(b)>`.
pub fn dual_divergence(a: &DualCoords, b: &DualCoords) -> Result<f64> {
    check_len(a.dim, a.xihat.len())?;
    if a.dim != b.dim {
        return Err(Error::DimMismatch { expected: a.dim, found: b.dim });
    }
    let (_, psi_a) = gibbs(&dual_matrix(a)?);
    let (rho_b, psi_b) = gibbs(&dual_matrix(b)?);
    let eta = read_coords(&rho_b);
    let diff: Vec<f64> = a.xihat.iter().zip(&b.xihat).map(|(x, y)| x - y).collect();
    Ok(psi_a - psi_b - dot(&diff, &eta.xi))
}

/// `phi(xi) - phi(eta) - <xi - eta, grad phi(eta)>`; `eta` must be faithful.
pub fn bregman_divergence(xi: &GeneralizedCoords, eta: &GeneralizedCoords) -> Result<f64> {
    if xi.dim != eta.dim {
        return Err(Error::DimMismatch { expected: xi.dim, found: eta.dim });
    }
    let m = from_coords(xi)?;
    let phi_xi: f64 = eig_hermitian_unchecked(&m).values.iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum();
    let g = grad_phi(eta)?;
    let diff: Vec<f64> = xi.xi.iter().zip(&eta.xi).map(|(x, y)| x - y).collect();
    Ok(phi_xi - phi_potential(eta)? - dot(&diff, &g.xihat))
}
