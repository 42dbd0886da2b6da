//! Square complex matrices, Hermitian eigendecomposition and spectral
//! matrix functions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Dense `d x d` complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix(DMatrix<C64>);

/// Wire form `{"dim": d, "re": [[..]], "im": [[..]]}` with row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let d = j.dim;
        if d == 0 || j.re.len() != d || j.im.len() != d {
            return Err(Error::Shape(format!("expected {d} rows in re and im")));
        }
        if j.re.iter().chain(j.im.iter()).any(|row| row.len() != d) {
            return Err(Error::Shape(format!("expected {d} columns in every row")));
        }
        let m = ComplexMatrix::from_fn(d, |r, c| C64::new(j.re[r][c], j.im[r][c]));
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let d = m.dim();
        MatrixJson {
            dim: d,
            re: (0..d).map(|r| (0..d).map(|c| m.0[(r, c)].re).collect()).collect(),
            im: (0..d).map(|r| (0..d).map(|c| m.0[(r, c)].im).collect()).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from row-major `(re, im)` pairs.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("{d} rows of unequal length")));
        }
        Ok(Self::from_fn(d, |r, c| C64::new(rows[r][c].0, rows[r][c].1)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, |r, c| if r == c { C64::new(diag[r], 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{}", m.nrows(), m.ncols())));
        }
        Ok(ComplexMatrix(m))
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    /// `|v><v|` for a column vector `v` (not normalized here).
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 * &other.0)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.0[(r, c)] * other.0[(c, r)];
            }
        }
        acc
    }

    /// Max-norm distance `max |a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |m_ij - conj(m_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > tol {
            Err(Error::NotHermitian { deviation })
        } else {
            Ok(())
        }
    }
}

/// Spectral decomposition `m = U diag(values) U^dag` with ascending values.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        matrix_from_spectrum(&self.vectors, &self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// Eigenvalue `k` paired with its eigenvector as a column slice.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim()).map(|r| self.vectors.get(r, k)).collect()
    }
}

/// Eigendecomposition of a Hermitian matrix (symmetrized before solving).
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.check_hermitian(tol::HERMITIAN_INPUT)?;
    Ok(eig_hermitian_unchecked(&m.hermitian_part()))
}

pub(crate) fn eig_hermitian_unchecked(m: &ComplexMatrix) -> HermitianEigen {
    let d = m.dim();
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(d, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// `U diag(values) U^dag`, the result symmetrized.
pub fn matrix_from_spectrum(vectors: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let d = vectors.dim();
    let u = &vectors.0;
    let out = ComplexMatrix::from_fn(d, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d {
            acc += u[(r, k)] * values[k] * u[(c, k)].conj();
        }
        acc
    });
    out.hermitian_part()
}

/// `f(m) = U diag(f(lambda)) U^dag` for Hermitian `m`.
pub fn matrix_fn(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    let fv: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    Ok(matrix_from_spectrum(&eig.vectors, &fv))
}

/// Natural logarithm; every eigenvalue must exceed the rank threshold.
pub fn matrix_log(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    if eig.min_value() <= tol::EPS_RANK {
        return Err(Error::Domain(format!(
            "log of a matrix with eigenvalue {:e}",
            eig.min_value()
        )));
    }
    let fv: Vec<f64> = eig.values.iter().map(|l| l.ln()).collect();
    Ok(matrix_from_spectrum(&eig.vectors, &fv))
}

/// Positive square root; eigenvalues in `[-1e-10, 0)` are clamped to zero.
pub fn matrix_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    if eig.min_value() < -tol::PSD {
        return Err(Error::Domain(format!(
            "sqrt of a matrix with eigenvalue {:e}",
            eig.min_value()
        )));
    }
    let fv: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(matrix_from_spectrum(&eig.vectors, &fv))
}

pub fn matrix_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_fn(m, f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        a.hermitian_part()
    }

    #[test]
    fn identity_spectrum() {
        let e = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let uu = e.vectors.adjoint().mul(&e.vectors);
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let e = eig_hermitian(&ComplexMatrix::from_real_diagonal(&[0.8, 0.2])).unwrap();
        assert!((e.values[0] - 0.2).abs() < 1e-15);
        assert!((e.values[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_of_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=4 {
            for _ in 0..50 {
                let m = random_hermitian(d, &mut rng);
                let e = eig_hermitian(&m).unwrap();
                assert!(e.reconstruct().max_abs_diff(&m) <= 1e-9);
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[&[(1.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn log_of_maximally_mixed_qubit() {
        let l = matrix_log(&ComplexMatrix::identity(2).scale(0.5)).unwrap();
        let want = ComplexMatrix::identity(2).scale(-(2f64.ln()));
        assert!(l.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = matrix_sqrt(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let singular = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(matrix_log(&singular), Err(Error::Domain(_))));
        let negative = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(matrix_sqrt(&negative), Err(Error::Domain(_))));
        let tiny = ComplexMatrix::from_real_diagonal(&[1.0, -1e-12]);
        assert!(matrix_sqrt(&tiny).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let m = ComplexMatrix::from_rows(&[&[(0.5, 0.0), (0.1, -0.2)], &[(0.1, 0.2), (0.5, 0.0)]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"dim\":2,\"re\":[[0.5,0.1],[0.1,0.5]]"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"dim":2,"re":[[1]],"im":[[0]]}"#).is_err());
    }
}
