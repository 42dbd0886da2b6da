//! Real coordinates of Hermitian unit-trace matrices.
//!
//! A `d x d` Hermitian matrix with trace one is written with `d^2 - 1` real
//! numbers `xi`. Indices below are zero-based (`xi[0]` is the first
//! coordinate):
//!
//! | coordinates                  | matrix entries                                       |
//! |------------------------------|------------------------------------------------------|
//! | `xi[k]`, `k < d-1`           | `m[k][k] = (xi[k] + 1) / d`                           |
//! | (derived)                    | `m[d-1][d-1] = (1 - sum_k xi[k]) / d`                 |
//! | `xi[d-1+2p]`, `xi[d+2p]`     | `m[j][l] = (xi[d-1+2p] - i xi[d+2p]) / 2` for the `p`-th upper pair |
//!
//! Upper-triangle pairs `(j, l)`, `j < l`, are numbered row-major:
//! `(0,1), (0,2), ..., (0,d-1), (1,2), ..., (d-2,d-1)`. For `d = 3`:
//!
//! | pair  | real part | imaginary part |
//! |-------|-----------|----------------|
//! | (0,1) | `xi[2]`   | `xi[3]`        |
//! | (0,2) | `xi[4]`   | `xi[5]`        |
//! | (1,2) | `xi[6]`   | `xi[7]`        |
//!
//! For `d = 2` the coordinates are `(z, x, y)` of the Bloch vector.
//! Coordinates alone do not guarantee positivity.

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCoords {
    pub dim: usize,
    pub xi: Vec<f64>,
}

impl GeneralizedCoords {
    pub fn new(dim: usize, xi: Vec<f64>) -> Result<Self> {
        check_len(dim, xi.len())?;
        Ok(GeneralizedCoords { dim, xi })
    }

    pub fn zeros(dim: usize) -> Self {
        GeneralizedCoords { dim, xi: vec![0.0; coord_len(dim)] }
    }
}

pub(crate) fn check_len(dim: usize, len: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::WrongLevel { expected: 2, found: dim });
    }
    if len != coord_len(dim) {
        return Err(Error::WrongLength { expected: coord_len(dim), found: len });
    }
    Ok(())
}

pub fn coord_len(dim: usize) -> usize {
    dim * dim - 1
}

/// Upper-triangle pairs in coordinate order.
pub fn offdiag_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|j| (j + 1..dim).map(move |l| (j, l))).collect()
}

/// Index of the real-part coordinate of pair `p`; the imaginary part follows it.
pub fn offdiag_index(dim: usize, p: usize) -> usize {
    dim - 1 + 2 * p
}

/// Hermitian unit-trace matrix with the given coordinates.
pub fn from_coords(c: &GeneralizedCoords) -> Result<ComplexMatrix> {
    check_len(c.dim, c.xi.len())?;
    let d = c.dim;
    let df = d as f64;
    let mut m = vec![C64::new(0.0, 0.0); d * d];
    let diag_sum: f64 = c.xi[..d - 1].iter().sum();
    for k in 0..d - 1 {
        m[k * d + k] = C64::new((c.xi[k] + 1.0) / df, 0.0);
    }
    m[d * d - 1] = C64::new((1.0 - diag_sum) / df, 0.0);
    for (p, (j, l)) in offdiag_pairs(d).into_iter().enumerate() {
        let i = offdiag_index(d, p);
        let z = C64::new(c.xi[i] / 2.0, -c.xi[i + 1] / 2.0);
        m[j * d + l] = z;
        m[l * d + j] = z.conj();
    }
    Ok(ComplexMatrix::from_fn(d, |r, col| m[r * d + col]))
}

/// Inverse of [`from_coords`]; `m` must be Hermitian with unit trace.
pub fn to_coords(m: &ComplexMatrix) -> Result<GeneralizedCoords> {
    m.check_hermitian(tol::HERMITIAN)?;
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol::TRACE {
        return Err(Error::NotUnitTrace { trace });
    }
    Ok(read_coords(m))
}

pub(crate) fn read_coords(m: &ComplexMatrix) -> GeneralizedCoords {
    let d = m.dim();
    let df = d as f64;
    let mut xi = vec![0.0; coord_len(d)];
    for (k, x) in xi.iter_mut().enumerate().take(d - 1) {
        *x = df * m.get(k, k).re - 1.0;
    }
    for (p, (j, l)) in offdiag_pairs(d).into_iter().enumerate() {
        let i = offdiag_index(d, p);
        let z = (m.get(j, l) + m.get(l, j).conj()) * 0.5;
        xi[i] = 2.0 * z.re;
        xi[i + 1] = -2.0 * z.im;
    }
    GeneralizedCoords { dim: d, xi }
}
