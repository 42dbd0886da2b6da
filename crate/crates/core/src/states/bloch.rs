use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::tol;

/// Qubit state in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn radius(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scaled(&self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// `[[(1+z)/2, (x-iy)/2], [(x+iy)/2, (1-z)/2]]`.
pub fn from_bloch(b: &BlochVector) -> Result<DensityMatrix> {
    let radius = b.radius();
    if !radius.is_finite() || radius > 1.0 + tol::BLOCH_RADIUS {
        return Err(Error::OutOfBall { radius });
    }
    let m = ComplexMatrix::from_fn(2, |r, c| match (r, c) {
        (0, 0) => C64::new((1.0 + b.z) / 2.0, 0.0),
        (0, 1) => C64::new(b.x / 2.0, -b.y / 2.0),
        (1, 0) => C64::new(b.x / 2.0, b.y / 2.0),
        _ => C64::new((1.0 - b.z) / 2.0, 0.0),
    });
    Ok(DensityMatrix::from_trusted(m))
}

pub fn to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::WrongLevel { expected: 2, found: rho.dim() });
    }
    let m = rho.matrix();
    let off = m.get(1, 0);
    Ok(BlochVector::new(2.0 * off.re, 2.0 * off.im, m.get(0, 0).re - m.get(1, 1).re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random::random_bloch_in_ball;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_is_maximally_mixed() {
        let rho = from_bloch(&BlochVector::ORIGIN).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-15);
    }

    #[test]
    fn north_pole_is_ket_zero() {
        let rho = from_bloch(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        let want = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(rho, want);
    }

    #[test]
    fn random_ball_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let b = random_bloch_in_ball(&mut rng);
            let rho = from_bloch(&b).unwrap();
            let r = b.radius();
            let ev = rho.eigenvalues();
            assert!((ev[0] - (1.0 - r) / 2.0).abs() < 1e-12);
            assert!((ev[1] - (1.0 + r) / 2.0).abs() < 1e-12);
            let back = to_bloch(&rho).unwrap();
            assert!((back.x - b.x).abs() < 1e-12 && (back.y - b.y).abs() < 1e-12 && (back.z - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(from_bloch(&BlochVector::new(1.0, 0.1, 0.0)), Err(Error::OutOfBall { .. })));
        assert!(matches!(to_bloch(&DensityMatrix::maximally_mixed(3)), Err(Error::WrongLevel { .. })));
    }
}
