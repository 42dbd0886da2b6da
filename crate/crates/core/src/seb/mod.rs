//! Smallest enclosing balls by Welzl's move-to-front recursion.
//!
//! The driver is generic over a [`Geometry`], which solves the boundary
//! problem "smallest ball with every point of `R` on its boundary" and tests
//! membership. Two geometries are provided: Euclidean points with an exact
//! circumsphere ([`euclid`]) and quantum states under the divergence
//! `D(point || center)` ([`divergence`]).

pub mod divergence;
pub mod euclid;
mod optimize;
pub mod oracle;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ArgOrder, MetricKind};
use crate::mesh::PointSet;
use crate::states::{from_coords, to_coords, DensityMatrix, MatrixJson};

pub use divergence::{boundary_ball_divergence, DivergenceBall, DivergenceGeometry};
pub use euclid::{boundary_ball_euclid, EuclidBall, EuclidGeometry};
pub use oracle::{lp_type_check, seb_bruteforce, LpTypeReport};

/// How the divergence boundary problem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsolver {
    /// Equal-divergence constraints are affine in the dual chart of the
    /// center; they are eliminated and the remaining convex problem is
    /// minimized on their null space.
    #[default]
    Reduced,
    /// Graduated quadratic penalty `D(s_1||rho) + A sum_k (D(s_k||rho) - D(s_{k+1}||rho))^2`
    /// with warm starts over the `A` schedule, finished by multiplier updates.
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SebConfig {
    pub penalty_start: f64,
    pub penalty_growth: f64,
    pub penalty_max: f64,
    /// Gradient tolerance of the inner minimizer.
    pub inner_tol: f64,
    pub membership_rel: f64,
    pub membership_abs: f64,
    pub shuffle_seed: u64,
    /// Largest boundary set the recursion may request; `None` means `d^2 - 1`
    /// for divergence balls and `n + 1` for Euclidean points in `R^n`.
    pub max_boundary: Option<usize>,
    pub subsolver: Subsolver,
    /// Extra shuffles tried when the first result does not enclose every point.
    pub max_retries: usize,
}

impl Default for SebConfig {
    fn default() -> Self {
        SebConfig {
            penalty_start: 10.0,
            penalty_growth: 10.0,
            penalty_max: 1e6,
            inner_tol: 1e-9,
            membership_rel: 1e-9,
            membership_abs: 1e-12,
            shuffle_seed: 0,
            max_boundary: None,
            subsolver: Subsolver::Reduced,
            max_retries: 3,
        }
    }
}

impl SebConfig {
    pub fn with_seed(self, shuffle_seed: u64) -> Self {
        SebConfig { shuffle_seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.penalty_start,
            self.penalty_growth,
            self.penalty_max,
            self.inner_tol,
            self.membership_rel,
            self.membership_abs,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_boundary == Some(0) {
            return Err(Error::Domain("solver settings must be positive".into()));
        }
        Ok(())
    }

    fn allowed(&self, radius: f64) -> f64 {
        radius * (1.0 + self.membership_rel) + self.membership_abs
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SebStats {
    pub subsolver_calls: usize,
    /// Boundary problems whose inner minimization stopped before the
    /// gradient tolerance; their (larger than optimal) ball was still used.
    pub subsolver_failures: usize,
    /// Times the recursion reached `max_boundary` with points left to test.
    pub cap_hits: usize,
    /// Shuffles run, including the first.
    pub attempts: usize,
}

/// Boundary solver and membership test used by the Welzl driver.
pub trait Geometry {
    type Ball: Clone;

    fn len(&self) -> usize;

    fn max_boundary(&self) -> usize;

    /// Smallest ball with every point of `boundary` on its boundary.
    fn solve(&mut self, boundary: &[usize], stats: &mut SebStats) -> Result<Self::Ball>;

    /// Distance of point `i` from the ball's center.
    fn dist(&self, ball: &Self::Ball, i: usize) -> f64;

    fn radius(&self, ball: &Self::Ball) -> f64;
}

struct Driver<'a, G: Geometry> {
    geo: &'a mut G,
    cfg: SebConfig,
    cap: usize,
    order: Vec<usize>,
    stats: SebStats,
}

impl<G: Geometry> Driver<'_, G> {
    fn inside(&self, ball: &G::Ball, i: usize) -> bool {
        self.geo.dist(ball, i) <= self.cfg.allowed(self.geo.radius(ball))
    }

    fn mtf(&mut self, end: usize, r: &mut Vec<usize>) -> Result<Option<G::Ball>> {
        let mut ball = if r.is_empty() { None } else { Some(self.geo.solve(r, &mut self.stats)?) };
        if r.len() >= self.cap {
            if end > 0 {
                self.stats.cap_hits += 1;
            }
            return Ok(ball);
        }
        for i in 0..end {
            let p = self.order[i];
            let outside = match &ball {
                None => true,
                Some(b) => !self.inside(b, p),
            };
            if outside {
                r.push(p);
                ball = self.mtf(i, r)?;
                r.pop();
                self.order[..=i].rotate_right(1);
            }
        }
        Ok(ball)
    }
}

/// Runs Welzl's algorithm; returns the ball and the support indices.
pub fn welzl_generic<G: Geometry>(geo: &mut G, cfg: &SebConfig) -> Result<(G::Ball, SebStats)> {
    cfg.validate()?;
    let n = geo.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let cap = cfg.max_boundary.unwrap_or_else(|| geo.max_boundary());
    let mut stats = SebStats::default();
    let mut last_excess = 0.0;
    for attempt in 0..=cfg.max_retries {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed.wrapping_add(attempt as u64));
        order.shuffle(&mut rng);
        let mut driver = Driver { geo: &mut *geo, cfg: *cfg, cap, order, stats: std::mem::take(&mut stats) };
        driver.stats.attempts += 1;
        let ball = driver.mtf(n, &mut Vec::new())?.expect("non-empty input gives a ball");
        let allowed = cfg.allowed(driver.geo.radius(&ball));
        let excess = (0..n).map(|i| driver.geo.dist(&ball, i) - allowed).fold(0.0, f64::max);
        stats = driver.stats;
        if excess <= 0.0 {
            return Ok((ball, stats));
        }
        last_excess = excess;
    }
    Err(Error::TooManyBoundary { max_boundary: cap, excess: last_excess })
}

/// A ball around a state, in the units of its metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: DensityMatrix,
    #[serde(rename = "radius_nats")]
    pub radius: f64,
    pub support: Vec<usize>,
}

impl Ball {
    pub fn center_json(&self) -> MatrixJson {
        self.center.matrix().clone().into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SebResult {
    pub ball: Ball,
    pub stats: SebStats,
}

/// Smallest enclosing ball of `points` under `metric`.
///
/// Supported metrics: the divergence with the center as second argument
/// (`D(point || center)`) and the Euclidean distance of generalized coordinates.
pub fn welzl(points: &PointSet, metric: MetricKind, cfg: &SebConfig) -> Result<SebResult> {
    welzl_states(points.points(), metric, cfg)
}

pub fn welzl_states(points: &[DensityMatrix], metric: MetricKind, cfg: &SebConfig) -> Result<SebResult> {
    match metric {
        MetricKind::Divergence(ArgOrder::SampleFirst) => {
            let mut geo = DivergenceGeometry::new(points, cfg)?;
            let (ball, stats) = welzl_generic(&mut geo, cfg)?;
            Ok(SebResult { ball: Ball { center: ball.center, radius: ball.radius, support: ball.support }, stats })
        }
        MetricKind::EuclideanParam => {
            let dim = points.first().ok_or(Error::EmptyInput)?.dim();
            let coords = points.iter().map(|p| Ok(to_coords(p.matrix())?.xi)).collect::<Result<Vec<_>>>()?;
            let mut geo = EuclidGeometry::new(coords)?;
            let (ball, stats) = welzl_generic(&mut geo, cfg)?;
            let c = crate::states::GeneralizedCoords::new(dim, ball.center)?;
            let center = DensityMatrix::new(from_coords(&c)?)?;
            Ok(SebResult { ball: Ball { center, radius: ball.radius, support: ball.support }, stats })
        }
        other => Err(Error::MetricNotApplicable {
            metric: other.to_string(),
            reason: "enclosing balls are implemented for the divergence D(point || center) and the Euclidean distance".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::divergence;
    use crate::states::random::{random_bloch_in_ball, random_faithful};
    use crate::states::{from_bloch, BlochVector};

    #[test]
    fn euclid_equilateral() {
        let h = 3f64.sqrt() / 2.0;
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let mut geo = EuclidGeometry::new(pts).unwrap();
        let (ball, _) = welzl_generic(&mut geo, &SebConfig::default()).unwrap();
        assert!((ball.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let s = random_faithful(3, &mut rng);
        let r = welzl_states(std::slice::from_ref(&s), MetricKind::Divergence(ArgOrder::SampleFirst), &SebConfig::default()).unwrap();
        assert!(r.ball.radius.abs() < 1e-12);
        assert!(r.ball.center.max_abs_diff(&s) < 1e-12);
        let pure = from_bloch(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        let r = welzl_states(&[pure], MetricKind::Divergence(ArgOrder::SampleFirst), &SebConfig::default()).unwrap();
        assert!(r.ball.radius < 1e-8);
        assert!(r.ball.center.is_faithful());
    }

    #[test]
    fn divergence_ball_encloses_and_is_seed_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let pts: Vec<DensityMatrix> = (0..25).map(|_| from_bloch(&random_bloch_in_ball(&mut rng)).unwrap()).collect();
        let cfg = SebConfig { max_boundary: Some(4), ..SebConfig::default() };
        let metric = MetricKind::Divergence(ArgOrder::SampleFirst);
        let a = welzl_states(&pts, metric, &cfg).unwrap();
        for p in &pts {
            assert!(divergence(p, &a.ball.center).unwrap() <= a.ball.radius * (1.0 + 1e-9) + 1e-12);
        }
        for seed in 1..4 {
            let b = welzl_states(&pts, metric, &cfg.with_seed(seed)).unwrap();
            assert!((a.ball.radius - b.ball.radius).abs() < 1e-7);
        }
    }

    #[test]
    fn unsupported_metric() {
        let s = DensityMatrix::maximally_mixed(2);
        assert!(matches!(welzl_states(&[s], MetricKind::Bures, &SebConfig::default()), Err(Error::MetricNotApplicable { .. })));
        assert!(matches!(welzl_states(&[], MetricKind::EuclideanParam, &SebConfig::default()), Err(Error::EmptyInput)));
    }

    #[test]
    fn ball_json_field_names() {
        let b = Ball { center: DensityMatrix::maximally_mixed(2), radius: 0.5, support: vec![1, 3] };
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        assert_eq!(v["radius_nats"], 0.5);
        assert_eq!(v["support"], serde_json::json!([1, 3]));
        assert_eq!(v["center"]["dim"], 2);
    }
}
