//! Distances, pseudo-distances and potentials on the state space.
//!
//! All logarithms are natural; values are in nats.

mod potential;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use potential::{bregman_divergence, dual_divergence, grad_phi, grad_psi, phi_potential, psi_potential};

use crate::error::{Error, Result};
use crate::states::{from_bloch, matrix_log, matrix_sqrt, to_bloch, to_coords, to_dual, BlochVector, DensityMatrix, GeneralizedCoords};
use crate::tol;

/// Which argument of the divergence the sample point occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArgOrder {
    /// `D(x || site)`: the site is the (faithful) second argument.
    SampleFirst,
    /// `D(site || x)`: the sample is the (faithful) second argument.
    SiteFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    Divergence(ArgOrder),
    /// `D_hat(x_hat || site_hat)`, equal to `D(site || x)` through the dual chart.
    DivergenceDual,
    /// `-Tr(x site)`: differences of this give the pure-state limit of the
    /// divergence bisector.
    DivergencePureLimit,
    Bures,
    FubiniStudy,
    EuclideanParam,
    GeodesicSphere,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::EuclideanParam,
        MetricKind::Bures,
        MetricKind::FubiniStudy,
        MetricKind::GeodesicSphere,
        MetricKind::Divergence(ArgOrder::SampleFirst),
        MetricKind::Divergence(ArgOrder::SiteFirst),
        MetricKind::DivergenceDual,
        MetricKind::DivergencePureLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Divergence(ArgOrder::SampleFirst) => "divergence-sample-first",
            MetricKind::Divergence(ArgOrder::SiteFirst) => "divergence-site-first",
            MetricKind::DivergenceDual => "divergence-dual",
            MetricKind::DivergencePureLimit => "divergence-limit",
            MetricKind::Bures => "bures",
            MetricKind::FubiniStudy => "fs",
            MetricKind::EuclideanParam => "euclid",
            MetricKind::GeodesicSphere => "geodesic",
        }
    }

    /// Defined only on pure states.
    pub fn pure_only(self) -> bool {
        matches!(self, MetricKind::FubiniStudy | MetricKind::GeodesicSphere | MetricKind::DivergencePureLimit)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .or(match s {
                "fubini-study" => Some(MetricKind::FubiniStudy),
                "euclidean" => Some(MetricKind::EuclideanParam),
                _ => None,
            })
            .ok_or_else(|| Error::MetricNotApplicable { metric: s.to_string(), reason: "unknown metric name".into() })
    }
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// `Tr(rho log rho)` with `0 log 0 = 0`.
pub fn neg_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues().iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum()
}

/// Von Neumann entropy `-Tr(rho log rho)`.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    (-neg_entropy(rho)).max(0.0)
}

/// Quantum divergence `D(sigma || rho) = Tr sigma (log sigma - log rho)`.
pub fn divergence(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    check_dims(sigma, rho)?;
    let min_eigenvalue = rho.min_eigenvalue();
    if min_eigenvalue <= tol::EPS_RANK {
        return Err(Error::SecondArgNotFaithful { min_eigenvalue });
    }
    let log_rho = matrix_log(rho.matrix())?;
    Ok(neg_entropy(sigma) - sigma.matrix().trace_product(&log_rho).re)
}

/// Closed form of `D(rho || sigma)` for qubits in Bloch coordinates; `sigma`
/// must be mixed.
pub fn divergence_qubit_closed(rho: &BlochVector, sigma: &BlochVector) -> Result<f64> {
    let r = rho.radius();
    if r > 1.0 + tol::BLOCH_RADIUS {
        return Err(Error::OutOfBall { radius: r });
    }
    let rt = sigma.radius();
    if rt >= 1.0 - tol::EPS_RANK {
        return Err(Error::SiteIsPure { radius: rt });
    }
    let own = if r < 1.0 - tol::EPS_RANK {
        0.5 * ((1.0 - r * r) / 4.0).ln() + r / 2.0 * ((1.0 + r) / (1.0 - r)).ln()
    } else {
        // pure limit of the same expression: (1+r)/2 ln((1+r)/2) + (1-r)/2 ln((1-r)/2)
        let r = r.min(1.0);
        let a = (1.0 + r) / 2.0;
        let b = (1.0 - r) / 2.0;
        a * a.ln() + if b > 0.0 { b * b.ln() } else { 0.0 }
    };
    let cross = if rt == 0.0 {
        -0.5 * (0.25f64).ln()
    } else {
        -0.5 * ((1.0 - rt * rt) / 4.0).ln() - (rt.ln_1p() - (-rt).ln_1p()) / (2.0 * rt) * rho.dot(sigma)
    };
    Ok(own + cross)
}

/// Bures distance `sqrt(1 - Tr sqrt(sqrt(sigma) rho sqrt(sigma)))`.
pub fn bures(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    Ok((1.0 - root_fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// `Tr sqrt(sqrt(sigma) rho sqrt(sigma))`, clamped to `[0, 1]`.
pub fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let s = matrix_sqrt(sigma.matrix())?;
    let inner = s.mul(rho.matrix()).mul(&s).hermitian_part();
    let f: f64 = crate::states::matrix::eig_hermitian_unchecked(&inner)
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

fn require_pure(rho: &DensityMatrix) -> Result<()> {
    let rank = rho.rank(tol::PURE);
    if rank != 1 {
        return Err(Error::NotPure { rank });
    }
    Ok(())
}

/// Fubini-Study distance `arccos sqrt(Tr rho sigma)` between pure states.
pub fn fubini_study(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    require_pure(rho)?;
    require_pure(sigma)?;
    let overlap = rho.matrix().trace_product(sigma.matrix()).re.clamp(0.0, 1.0);
    Ok(overlap.sqrt().acos())
}

/// Euclidean distance between coordinate vectors.
pub fn euclidean_param(a: &GeneralizedCoords, b: &GeneralizedCoords) -> Result<f64> {
    if a.dim != b.dim || a.xi.len() != b.xi.len() {
        return Err(Error::DimMismatch { expected: a.dim, found: b.dim });
    }
    Ok(a.xi.iter().zip(&b.xi).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Great-circle distance between two points of the unit sphere.
pub fn geodesic_sphere(a: &BlochVector, b: &BlochVector) -> Result<f64> {
    for v in [a, b] {
        let radius = v.radius();
        if (radius - 1.0).abs() > tol::PURE {
            return Err(Error::NotOnSphere { radius });
        }
    }
    let cos = a.dot(b) / (a.radius() * b.radius());
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Distance from the sample `x` to `site` under `kind`.
pub fn distance(kind: MetricKind, site: &DensityMatrix, x: &DensityMatrix) -> Result<f64> {
    check_dims(site, x)?;
    match kind {
        MetricKind::Divergence(ArgOrder::SampleFirst) => divergence(x, site),
        MetricKind::Divergence(ArgOrder::SiteFirst) => divergence(site, x),
        MetricKind::DivergenceDual => dual_divergence(&to_dual(x)?, &to_dual(site)?),
        MetricKind::DivergencePureLimit => {
            require_pure(site)?;
            require_pure(x)?;
            Ok(-x.matrix().trace_product(site.matrix()).re)
        }
        MetricKind::Bures => bures(x, site),
        MetricKind::FubiniStudy => fubini_study(x, site),
        MetricKind::EuclideanParam => euclidean_param(&to_coords(x.matrix())?, &to_coords(site.matrix())?),
        MetricKind::GeodesicSphere => {
            if x.dim() != 2 {
                return Err(Error::WrongLevel { expected: 2, found: x.dim() });
            }
            geodesic_sphere(&to_bloch(x)?, &to_bloch(site)?)
        }
    }
}

/// `dist(x, site1) - dist(x, site2)`; negative means `x` is closer to `site1`.
pub fn bisector_gap(kind: MetricKind, site1: &DensityMatrix, site2: &DensityMatrix, x: &DensityMatrix) -> Result<f64> {
    Ok(distance(kind, site1, x)? - distance(kind, site2, x)?)
}

/// Bloch-vector convenience for qubit states.
pub fn qubit(b: BlochVector) -> Result<DensityMatrix> {
    from_bloch(&b)
}
