//! Euclidean points with an exact circumsphere boundary solver.

use nalgebra::{DMatrix, DVector};

use super::{Geometry, SebStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EuclidBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub support: Vec<usize>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest sphere through every point of `r`: its center lies in their
/// affine hull, so it solves the Gram system `2 G lambda = |q_j|^2` with
/// `q_j = p_j - p_0`.
pub fn boundary_ball_euclid(r: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
    let p0 = *r.first().ok_or(Error::EmptyInput)?;
    let n = p0.len();
    if r.iter().any(|p| p.len() != n) {
        return Err(Error::DimMismatch { expected: n, found: r.iter().map(|p| p.len()).find(|&l| l != n).unwrap_or(n) });
    }
    let m = r.len() - 1;
    if m == 0 {
        return Ok((p0.to_vec(), 0.0));
    }
    if m > n {
        return Err(Error::Degenerate);
    }
    let q: Vec<DVector<f64>> = r[1..].iter().map(|p| DVector::from_iterator(n, p.iter().zip(p0).map(|(a, b)| a - b))).collect();
    let g = DMatrix::from_fn(m, m, |i, j| 2.0 * q[i].dot(&q[j]));
    let rhs = DVector::from_iterator(m, q.iter().map(|v| v.dot(v)));
    let scale = g.amax();
    let lambda = g.clone().lu().solve(&rhs).ok_or(Error::Degenerate)?;
    // reject nearly dependent sets: the solve must reproduce the system
    if (&g * &lambda - &rhs).amax() > 1e-9 * scale.max(1e-300) || !lambda.iter().all(|v| v.is_finite()) {
        return Err(Error::Degenerate);
    }
    let mut center = p0.to_vec();
    for (l, qv) in lambda.iter().zip(&q) {
        for (c, v) in center.iter_mut().zip(qv.iter()) {
            *c += l * v;
        }
    }
    let radius = r.iter().map(|p| dist(p, &center)).fold(0.0, f64::max);
    Ok((center, radius))
}

pub struct EuclidGeometry {
    points: Vec<Vec<f64>>,
}

impl EuclidGeometry {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyInput)?.len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimMismatch { expected: n, found: p.len() });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(EuclidGeometry { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

impl Geometry for EuclidGeometry {
    type Ball = EuclidBall;

    fn len(&self) -> usize {
        self.points.len()
    }

    fn max_boundary(&self) -> usize {
        self.points[0].len() + 1
    }

    fn solve(&mut self, boundary: &[usize], stats: &mut SebStats) -> Result<EuclidBall> {
        stats.subsolver_calls += 1;
        let pts: Vec<&[f64]> = boundary.iter().map(|&i| self.points[i].as_slice()).collect();
        let (center, radius) = boundary_ball_euclid(&pts)?;
        Ok(EuclidBall { center, radius, support: boundary.to_vec() })
    }

    fn dist(&self, ball: &EuclidBall, i: usize) -> f64 {
        dist(&self.points[i], &ball.center)
    }

    fn radius(&self, ball: &EuclidBall) -> f64 {
        ball.radius
    }
}
