//! Enclosing balls of states under `D(point || center)`.
//!
//! The center `rho` is parameterized by its dual coordinates `h`, so that
//! `rho = exp(H(h)) / Tr exp(H(h))` is faithful for every `h`. In this chart
//!
//! ```text
//! D(s || rho(h)) = Tr(s log s) - <xi(s), h> + psi(h),   psi(h) = log Tr exp(H(h))
//! ```
//!
//! is convex in `h` with gradient `xi(rho) - xi(s)`, and the differences
//! `D(s_k || rho) - D(s_l || rho)` are affine in `h`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::optimize::bfgs;
use super::{Geometry, SebConfig, SebStats, Subsolver};
use crate::error::{Error, Result};
use crate::metrics::neg_entropy;
use crate::states::coords::read_coords;
use crate::states::dual::gibbs;
use crate::states::{dual_matrix, to_dual, DensityMatrix, DualCoords};

/// Centers whose smallest eigenvalue falls below this are mixed with `I/d`.
const FAITHFUL_FLOOR: f64 = 1e-9;
/// Mixing weight used for that projection.
const EPS_MIX: f64 = 1e-9;
/// Largest spread of boundary divergences accepted from the subsolver.
pub const TOL_EQ: f64 = 1e-6;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceBall {
    pub center: DensityMatrix,
    #[serde(rename = "radius_nats")]
    pub radius: f64,
    pub support: Vec<usize>,
    /// Dual coordinates of the center.
    #[serde(skip)]
    pub center_dual: Vec<f64>,
    #[serde(skip)]
    psi: f64,
    #[serde(skip)]
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct Prepared {
    xi: Vec<f64>,
    neg_s: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct DivergenceGeometry {
    dim: usize,
    pts: Vec<Prepared>,
    cfg: SebConfig,
    cache: HashMap<Vec<usize>, DivergenceBall>,
}

/// Value of `psi` and the primal coordinates at dual point `h`.
fn eval(dim: usize, h: &[f64]) -> Option<(f64, Vec<f64>)> {
    let hm = dual_matrix(&DualCoords { dim, xihat: h.to_vec() }).ok()?;
    let (rho, psi) = gibbs(&hm);
    psi.is_finite().then(|| (psi, read_coords(&rho).xi))
}

impl DivergenceGeometry {
    pub fn new(points: &[DensityMatrix], cfg: &SebConfig) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyInput)?.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: p.dim() });
        }
        let pts = points.iter().map(|p| Prepared { xi: read_coords(p.matrix()).xi, neg_s: neg_entropy(p) }).collect();
        Ok(DivergenceGeometry { dim, pts, cfg: *cfg, cache: HashMap::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D(point_i || center)`.
    pub fn divergence_to(&self, ball: &DivergenceBall, i: usize) -> f64 {
        let p = &self.pts[i];
        p.neg_s - dot(&p.xi, &ball.center_dual) + ball.psi
    }

    fn finish(&self, boundary: &[usize], h: Vec<f64>, converged: bool) -> Result<DivergenceBall> {
        let hm = dual_matrix(&DualCoords { dim: self.dim, xihat: h.clone() })?;
        let (rho, _) = gibbs(&hm);
        let mut center = DensityMatrix::from_trusted(rho);
        let mut h = h;
        if center.min_eigenvalue() < FAITHFUL_FLOOR {
            center = center.shrink(1.0 - EPS_MIX);
            h = to_dual(&center)?.xihat;
        }
        let psi = eval(self.dim, &h).ok_or(Error::NonFinite)?.0;
        let mut ball = DivergenceBall { center, radius: 0.0, support: boundary.to_vec(), center_dual: h, psi, converged };
        let ds: Vec<f64> = boundary.iter().map(|&i| self.divergence_to(&ball, i)).collect();
        let hi = ds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ds.iter().cloned().fold(f64::INFINITY, f64::min);
        if !hi.is_finite() {
            return Err(Error::SubsolverFailed("non-finite divergence at the center".into()));
        }
        if hi - lo > TOL_EQ {
            ball.converged = false;
        }
        ball.radius = hi.max(0.0);
        Ok(ball)
    }

    fn single(&self, i: usize) -> Result<DivergenceBall> {
        let p = &self.pts[i];
        let m = crate::states::from_coords(&crate::states::GeneralizedCoords { dim: self.dim, xi: p.xi.clone() })?;
        let mut s = DensityMatrix::from_trusted(m);
        if s.min_eigenvalue() < FAITHFUL_FLOOR {
            s = s.shrink(1.0 - EPS_MIX);
        }
        self.finish(&[i], to_dual(&s)?.xihat, true)
    }

    /// Equality constraints `<xi_k - xi_1, h> = negS_k - negS_1`.
    fn constraints(&self, r: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.pts[r[0]].xi.len();
        let first = &self.pts[r[0]];
        let a = DMatrix::from_fn(r.len() - 1, n, |k, j| self.pts[r[k + 1]].xi[j] - first.xi[j]);
        let b = DVector::from_iterator(r.len() - 1, r[1..].iter().map(|&k| self.pts[k].neg_s - first.neg_s));
        (a, b)
    }

    fn solve_reduced(&self, r: &[usize]) -> Result<(Vec<f64>, bool)> {
        let (a, b) = self.constraints(r);
        let n = a.ncols();
        let eig = SymmetricEigen::new(a.transpose() * &a);
        let top = eig.eigenvalues.amax();
        let thr = 1e-12 * top.max(1e-300);
        let atb = a.transpose() * &b;
        let mut h0 = DVector::zeros(n);
        let mut null = Vec::new();
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            if l > thr {
                h0 += v * (v.dot(&atb) / l);
            } else {
                null.push(v.into_owned());
            }
        }
        let resid = (&a * &h0 - &b).amax();
        if resid > 1e-8 * (1.0 + b.amax()) {
            return Err(Error::Degenerate);
        }
        if null.is_empty() {
            return Ok((h0.as_slice().to_vec(), true));
        }
        let basis = DMatrix::from_columns(&null);
        let xi1 = DVector::from_column_slice(&self.pts[r[0]].xi);
        let dim = self.dim;
        let to_h = |z: &[f64]| -> DVector<f64> {
            if z.is_empty() {
                h0.clone()
            } else {
                &h0 + &basis * DVector::from_column_slice(z)
            }
        };
        let fg = |z: &[f64]| {
            let h = to_h(z);
            let (psi, eta) = eval(dim, h.as_slice())?;
            let grad_h = DVector::from_vec(eta) - &xi1;
            let g = if z.is_empty() { Vec::new() } else { (basis.transpose() * grad_h).as_slice().to_vec() };
            Some((psi - xi1.dot(&h), g))
        };
        let m = bfgs(fg, &vec![0.0; null.len()], self.cfg.inner_tol, MAX_ITER)
            .ok_or_else(|| Error::SubsolverFailed("objective undefined at the start point".into()))?;
        Ok((to_h(&m.x).as_slice().to_vec(), m.converged))
    }

    fn solve_penalty(&self, r: &[usize]) -> Result<(Vec<f64>, bool)> {
        let xi1 = DVector::from_column_slice(&self.pts[r[0]].xi);
        let dim = self.dim;
        // consecutive differences D_k - D_{k+1} as rows of the affine map c(h) = e - C h
        let m = r.len() - 1;
        let n = xi1.len();
        let c_rows = DMatrix::from_fn(m, n, |k, j| self.pts[r[k]].xi[j] - self.pts[r[k + 1]].xi[j]);
        let e = DVector::from_iterator(m, (0..m).map(|k| self.pts[r[k]].neg_s - self.pts[r[k + 1]].neg_s));
        // start from the dual coordinates of the boundary average
        let mut mean = vec![0.0; n];
        for &k in r {
            for (acc, v) in mean.iter_mut().zip(&self.pts[k].xi) {
                *acc += v / r.len() as f64;
            }
        }
        let avg = DensityMatrix::from_trusted(crate::states::from_coords(&crate::states::GeneralizedCoords { dim, xi: mean })?);
        let mut h = to_dual(&avg.shrink(1.0 - 1e-6))?.xihat;
        let mut lambda = DVector::zeros(m);
        let mut penalty = self.cfg.penalty_start;
        let mut converged;
        let run = |h: &[f64], a_pen: f64, lambda: &DVector<f64>| {
            let fg = |x: &[f64]| {
                let hv = DVector::from_column_slice(x);
                let (psi, eta) = eval(dim, x)?;
                let c = &e - &c_rows * &hv;
                let f = psi - xi1.dot(&hv) + lambda.dot(&c) + a_pen * c.dot(&c);
                let w = lambda + &c * (2.0 * a_pen);
                let g = DVector::from_vec(eta) - &xi1 - c_rows.transpose() * w;
                Some((f, g.as_slice().to_vec()))
            };
            bfgs(fg, h, self.cfg.inner_tol, MAX_ITER)
        };
        loop {
            let res = run(&h, penalty, &lambda).ok_or_else(|| Error::SubsolverFailed("penalty objective undefined".into()))?;
            h = res.x;
            converged = res.converged;
            if penalty >= self.cfg.penalty_max {
                break;
            }
            penalty = (penalty * self.cfg.penalty_growth).min(self.cfg.penalty_max);
        }
        // multiplier updates tighten the constraints beyond what A alone reaches
        for _ in 0..50 {
            let c = &e - &c_rows * DVector::from_column_slice(&h);
            if c.amax() <= 1e-10 {
                break;
            }
            lambda += &c * (2.0 * penalty);
            let res = run(&h, penalty, &lambda).ok_or_else(|| Error::SubsolverFailed("penalty objective undefined".into()))?;
            h = res.x;
            converged = res.converged;
        }
        Ok((h, converged))
    }

    pub fn solve_boundary(&self, r: &[usize]) -> Result<DivergenceBall> {
        match r.len() {
            0 => Err(Error::EmptyInput),
            1 => self.single(r[0]),
            _ => {
                let (h, converged) = match self.cfg.subsolver {
                    Subsolver::Reduced => self.solve_reduced(r)?,
                    Subsolver::Penalty => self.solve_penalty(r)?,
                };
                self.finish(r, h, converged)
            }
        }
    }
}

impl Geometry for DivergenceGeometry {
    type Ball = DivergenceBall;

    fn len(&self) -> usize {
        self.pts.len()
    }

    fn max_boundary(&self) -> usize {
        self.dim * self.dim - 1
    }

    fn solve(&mut self, boundary: &[usize], stats: &mut SebStats) -> Result<DivergenceBall> {
        let mut key = boundary.to_vec();
        key.sort_unstable();
        if let Some(b) = self.cache.get(&key) {
            let mut b = b.clone();
            b.support = boundary.to_vec();
            return Ok(b);
        }
        stats.subsolver_calls += 1;
        let ball = self.solve_boundary(boundary)?;
        if !ball.converged {
            stats.subsolver_failures += 1;
        }
        self.cache.insert(key, ball.clone());
        Ok(ball)
    }

    fn dist(&self, ball: &DivergenceBall, i: usize) -> f64 {
        self.divergence_to(ball, i)
    }

    fn radius(&self, ball: &DivergenceBall) -> f64 {
        ball.radius
    }
}

/// Smallest divergence ball with every state of `r` on its boundary.
pub fn boundary_ball_divergence(r: &[DensityMatrix], cfg: &SebConfig) -> Result<DivergenceBall> {
    let geo = DivergenceGeometry::new(r, cfg)?;
    let idx: Vec<usize> = (0..r.len()).collect();
    if r.len() > geo.max_boundary() {
        return Err(Error::TooManyBoundary { max_boundary: geo.max_boundary(), excess: f64::INFINITY });
    }
    geo.solve_boundary(&idx)
}
