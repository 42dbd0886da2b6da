//! Random states for tests, reports and the CLI. All generators take an
//! explicit RNG so runs are reproducible from a seed.

use rand::Rng;
use rand_distr::StandardNormal;

use super::bloch::BlochVector;
use super::matrix::{ComplexMatrix, C64};
use super::DensityMatrix;

fn gaussian_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Unit vector distributed uniformly on the complex sphere.
pub fn random_state_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Haar-random pure state.
pub fn random_pure(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    DensityMatrix::from_pure_vector(&random_state_vector(dim, rng)).expect("non-zero vector")
}

/// `W W^dag / Tr(W W^dag)` for a complex Ginibre `W`; resampled until the
/// smallest eigenvalue exceeds `1e-6`.
pub fn random_faithful(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    loop {
        let w = ComplexMatrix::from_fn(dim, |_, _| gaussian_c64(rng));
        let g = w.mul(&w.adjoint());
        let t = g.trace().re;
        let rho = DensityMatrix::from_trusted(g.scale(1.0 / t));
        if rho.min_eigenvalue() > 1e-6 {
            return rho;
        }
    }
}

pub fn random_bloch_on_sphere(rng: &mut impl Rng) -> BlochVector {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return BlochVector::new(v[0] / n, v[1] / n, v[2] / n);
        }
    }
}

/// Uniform in the open unit ball.
pub fn random_bloch_in_ball(rng: &mut impl Rng) -> BlochVector {
    loop {
        let b = BlochVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if b.radius() < 1.0 {
            return b;
        }
    }
}
