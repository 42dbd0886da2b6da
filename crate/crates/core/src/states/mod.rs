//! Density matrices and their parameterizations.
//!
//! A state is a `d x d` Hermitian, unit-trace, positive semi-definite complex
//! matrix. Three coordinate systems are provided:
//!
//! * [`BlochVector`] for qubits, `rho = [[(1+z)/2, (x-iy)/2], [(x+iy)/2, (1-z)/2]]`;
//! * [`GeneralizedCoords`], the `d^2 - 1` real coordinates of a Hermitian
//!   unit-trace matrix (see [`coords`] for the index layout);
//! * [`DualCoords`], the Legendre-dual coordinates given by the gradient of
//!   `Tr(rho log rho)`.

pub mod bloch;
pub mod coords;
pub mod dual;
pub mod matrix;
pub mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub use bloch::{from_bloch, to_bloch, BlochVector};
pub use coords::{from_coords, to_coords, GeneralizedCoords};
pub use dual::{dual_matrix, from_dual, from_dual_with, to_dual, to_dual_with, DualCoords, DualSign};
pub use matrix::{
    eig_hermitian, matrix_exp, matrix_fn, matrix_log, matrix_sqrt, ComplexMatrix, HermitianEigen, MatrixJson, C64,
};

/// Rank class of a state under the eigenvalue threshold `eps_rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankClass {
    Pure,
    MixedNonFaithful,
    Faithful,
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(rho: DensityMatrix) -> Self {
        rho.mat
    }
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within `1e-10`)
    /// and stores the symmetrized matrix.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        m.check_hermitian(tol::HERMITIAN)?;
        let mat = m.hermitian_part();
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > tol::TRACE {
            return Err(Error::NotUnitTrace { trace });
        }
        let min = matrix::eig_hermitian_unchecked(&mat).min_value();
        if min < -tol::PSD {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(DensityMatrix { mat })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        DensityMatrix { mat: mat.hermitian_part() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { mat: ComplexMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    /// `|v><v| / <v|v>`.
    pub fn from_pure_vector(v: &[C64]) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v.is_empty() || norm2 < 1e-24 || !norm2.is_finite() {
            return Err(Error::Shape("zero or empty state vector".into()));
        }
        Ok(DensityMatrix { mat: ComplexMatrix::outer(v).scale(1.0 / norm2) })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn eigen(&self) -> HermitianEigen {
        matrix::eig_hermitian_unchecked(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min_value()
    }

    pub fn rank(&self, eps_rank: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > eps_rank).count()
    }

    pub fn rank_class(&self, eps_rank: f64) -> RankClass {
        rank_class(self, eps_rank)
    }

    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue() > tol::EPS_RANK
    }

    /// `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if other.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), found: other.dim() });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(DensityMatrix { mat: self.mat.scale(w).add(&other.mat.scale(1.0 - w)) })
    }

    /// `r * rho + (1 - r) * I/d`; for qubits this scales the Bloch vector by `r`.
    pub fn shrink(&self, r: f64) -> DensityMatrix {
        let d = self.dim();
        let id = ComplexMatrix::identity(d).scale((1.0 - r) / d as f64);
        DensityMatrix { mat: self.mat.scale(r).add(&id) }
    }

    /// Unit state vector of a pure state (phase fixed so the largest entry is real).
    pub fn pure_vector(&self) -> Result<Vec<C64>> {
        let e = self.eigen();
        let rank = e.values.iter().filter(|&&l| l > tol::PURE).count();
        if rank != 1 || (e.values[self.dim() - 1] - 1.0).abs() > tol::PURE {
            return Err(Error::NotPure { rank });
        }
        let mut v = e.vector(self.dim() - 1);
        let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
        Ok(v)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }
}

/// Counts eigenvalues above `eps_rank`.
pub fn rank_class(rho: &DensityMatrix, eps_rank: f64) -> RankClass {
    let rank = rho.rank(eps_rank);
    if rank <= 1 {
        RankClass::Pure
    } else if rank == rho.dim() {
        RankClass::Faithful
    } else {
        RankClass::MixedNonFaithful
    }
}
