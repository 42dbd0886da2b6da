//! Bisector evaluation and sign-agreement audits between metrics.
//!
//! Two families of checks live here. The first compares bisectors of arbitrary
//! metrics on explicit states (qubit coincidence, pure-limit bisectors). The
//! second works on the three-parameter section of a d-level state space in
//! which only `xi_1`, `xi_d`, `xi_{d+1}` vary; its pure states form an
//! ellipsoid and the divergence and Euclidean bisectors are both affine there.
//!
//! All gaps follow the distance convention `dist(site1, x) - dist(site2, x)`:
//! negative means `x` lies on the side of `site1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bisector_gap, distance, ArgOrder, MetricKind};
use crate::states::{ComplexMatrix, DensityMatrix, C64};
use crate::tol;

/// Radial shrink applied to non-faithful states before a divergence is taken.
pub const LIMIT_SHRINK: f64 = 1.0 - 1e-6;

/// A point `(xi_1, xi_d, xi_{d+1})` of the section, with `xi_2 = d - 2 - xi_1`,
/// `xi_3 = ... = xi_{d-1} = -1` and every other coordinate zero. The state is
/// supported on the first two basis vectors. For `d = 2` the section is the
/// whole Bloch ball (`xi_1 = z`), which the bisector fields use; the section
/// gap functions themselves need `d >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub dim: usize,
    pub xi1: f64,
    pub xid: f64,
    pub xid1: f64,
}

impl SectionPoint {
    pub fn new(dim: usize, xi1: f64, xid: f64, xid1: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimTooSmall(dim));
        }
        if ![xi1, xid, xid1].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, xi1, xid, xid1 })
    }

    fn center(dim: usize) -> f64 {
        (dim as f64 - 2.0) / 2.0
    }

    /// Maps a Bloch-like vector `(x, y, z)` to the section: `xi_d = x`,
    /// `xi_{d+1} = y`, `xi_1 = (d-2)/2 + z d/2`. Unit vectors land on the
    /// pure ellipsoid.
    pub fn from_sphere(dim: usize, v: [f64; 3]) -> Result<Self> {
        Self::new(dim, Self::center(dim) + v[2] * dim as f64 / 2.0, v[0], v[1])
    }

    pub fn to_sphere(&self) -> [f64; 3] {
        [self.xid, self.xid1, (self.xi1 - Self::center(self.dim)) * 2.0 / self.dim as f64]
    }

    /// Left side of the pure-ellipsoid equation; equals 1 on pure states.
    pub fn ellipsoid_value(&self) -> f64 {
        let d = self.dim as f64;
        (d - 2.0 - 2.0 * self.xi1).powi(2) / (d * d) + self.xid * self.xid + self.xid1 * self.xid1
    }

    pub fn is_pure(&self) -> bool {
        (self.ellipsoid_value() - 1.0).abs() <= 1e-9
    }

    /// The embedded `d x d` density matrix.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let d = self.dim;
        let a = (self.xi1 + 1.0) / d as f64;
        let w = C64::new(self.xid, -self.xid1) * 0.5;
        let m = ComplexMatrix::from_fn(d, |r, c| match (r, c) {
            (0, 0) => C64::new(a, 0.0),
            (1, 1) => C64::new(1.0 - a, 0.0),
            (0, 1) => w,
            (1, 0) => w.conj(),
            _ => C64::new(0.0, 0.0),
        });
        DensityMatrix::new(m)
    }

    /// Inverse of [`to_density`](Self::to_density); fails if the state leaves the section.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let d = rho.dim();
        let m = rho.matrix();
        for r in 0..d {
            for c in 0..d {
                if r < 2 && c < 2 {
                    continue;
                }
                if m.get(r, c).norm() > 1e-9 {
                    return Err(Error::Domain(format!("state has weight at ({r}, {c}) outside the section")));
                }
            }
        }
        let w = m.get(0, 1);
        Self::new(d, d as f64 * m.get(0, 0).re - 1.0, 2.0 * w.re, -2.0 * w.im)
    }

    /// Same point pulled toward the ellipsoid centre by `r`.
    pub fn shrink(&self, r: f64) -> Self {
        let c = Self::center(self.dim);
        Self { dim: self.dim, xi1: c + r * (self.xi1 - c), xid: r * self.xid, xid1: r * self.xid1 }
    }
}

fn section_check(d: usize, pts: &[&SectionPoint]) -> Result<()> {
    if d < 3 {
        return Err(Error::DimTooSmall(d));
    }
    for p in pts {
        if p.dim != d {
            return Err(Error::DimMismatch { expected: d, found: p.dim });
        }
    }
    Ok(())
}

fn require_pure_site(s: &SectionPoint) -> Result<()> {
    if s.is_pure() {
        Ok(())
    } else {
        Err(Error::OffEllipsoid { value: s.ellipsoid_value() })
    }
}

/// Divergence-side score of `site` at `x`; differences of scores give the
/// limit bisector. Built from `-Tr(site log x)` up to a positive factor.
fn section_div_score(site: &SectionPoint, x: &SectionPoint) -> f64 {
    let d = site.dim as f64;
    let c = SectionPoint::center(site.dim);
    -(site.xid * x.xid + site.xid1 * x.xid1 + 4.0 * (site.xi1 - c) * (x.xi1 - c) / (d * d))
}

fn section_euclid_sq(site: &SectionPoint, x: &SectionPoint, scale: f64) -> f64 {
    2.0 * (site.xi1 - x.xi1).powi(2) / (scale * scale) + (site.xid - x.xid).powi(2) + (site.xid1 - x.xid1).powi(2)
}

/// Limit divergence gap on the section for pure sites `eta`, `eta_t`:
/// minus `(eta_d - eta_t_d) xi_d + (eta_{d+1} - eta_t_{d+1}) xi_{d+1} + 4 (eta_1 - eta_t_1)(xi_1 - (d-2)/2) / d^2`.
/// The sign flip puts it in the distance convention.
pub fn section_gap_divergence(d: usize, eta: &SectionPoint, eta_t: &SectionPoint, x: &SectionPoint) -> Result<f64> {
    section_check(d, &[eta, eta_t, x])?;
    require_pure_site(eta)?;
    require_pure_site(eta_t)?;
    Ok(section_div_score(eta, x) - section_div_score(eta_t, x))
}

/// Difference of squared Euclidean distances on the section, with the
/// diagonal coordinate divided by `scale`. At `scale = d / sqrt(2)` this is
/// exactly twice [`section_gap_divergence`].
pub fn section_gap_euclidean(d: usize, eta: &SectionPoint, eta_t: &SectionPoint, x: &SectionPoint, scale: f64) -> Result<f64> {
    section_check(d, &[eta, eta_t, x])?;
    require_pure_site(eta)?;
    require_pure_site(eta_t)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    Ok(section_euclid_sq(eta, x, scale) - section_euclid_sq(eta_t, x, scale))
}

/// The rescaling under which divergence and Euclidean section bisectors agree.
pub fn coinciding_scale(d: usize) -> f64 {
    d as f64 / std::f64::consts::SQRT_2
}

/// The eight-site configuration on the section: four sites above the
/// equator at `z = 1/sqrt 3` and four below at `z = -1/sqrt 3`.
pub fn example3_sites(d: usize) -> Result<Vec<SectionPoint>> {
    if d < 3 {
        return Err(Error::DimTooSmall(d));
    }
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    let mut v = Vec::with_capacity(8);
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            v.push([sx * a, sy * a, a]);
        }
    }
    for s in [1.0, -1.0] {
        v.push([s * b, 0.0, -a]);
    }
    for s in [1.0, -1.0] {
        v.push([0.0, s * b, -a]);
    }
    v.into_iter().map(|p| SectionPoint::from_sphere(d, p)).collect()
}

/// `|<x|psi_2>|^2 - |<x|psi_1>|^2` for pure `s1`, `s2`, `x`; the zero set is
/// the bisector of the divergence in the pure limit.
pub fn pure_limit_divergence_gap(s1: &DensityMatrix, s2: &DensityMatrix, x: &DensityMatrix) -> Result<f64> {
    if s1.dim() != x.dim() || s2.dim() != x.dim() {
        return Err(Error::DimMismatch { expected: x.dim(), found: if s1.dim() != x.dim() { s1.dim() } else { s2.dim() } });
    }
    let (v1, v2, vx) = (s1.pure_vector()?, s2.pure_vector()?, x.pure_vector()?);
    let overlap = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(p, q)| p.conj() * q).sum::<C64>().norm_sqr();
    Ok(overlap(&vx, &v2) - overlap(&vx, &v1))
}

fn limit_state(rho: &DensityMatrix) -> DensityMatrix {
    if rho.is_faithful() {
        rho.clone()
    } else {
        rho.shrink(LIMIT_SHRINK)
    }
}

/// Distance with the pure-state policy: divergences see non-faithful states
/// through the radial limit `r = 1 - 1e-6`, the pure-limit divergence is
/// `-Tr(x site)`, and every other metric is evaluated directly.
pub fn policy_distance(kind: MetricKind, site: &DensityMatrix, x: &DensityMatrix) -> Result<f64> {
    match kind {
        MetricKind::Divergence(_) | MetricKind::DivergenceDual => distance(kind, &limit_state(site), &limit_state(x)),
        _ => distance(kind, site, x),
    }
}

pub fn policy_gap(kind: MetricKind, s1: &DensityMatrix, s2: &DensityMatrix, x: &DensityMatrix) -> Result<f64> {
    match kind {
        MetricKind::DivergencePureLimit => pure_limit_divergence_gap(s1, s2, x),
        MetricKind::Divergence(_) | MetricKind::DivergenceDual => {
            bisector_gap(kind, &limit_state(s1), &limit_state(s2), &limit_state(x))
        }
        _ => bisector_gap(kind, s1, s2, x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub site_a: usize,
    pub site_b: usize,
    pub sample: usize,
    pub metric_a: String,
    pub metric_b: String,
    pub gap_a: f64,
    pub gap_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    pub metrics: Vec<String>,
    pub site_pairs: usize,
    pub samples: usize,
    /// Sign comparisons made (both gaps above the floor).
    pub comparisons: usize,
    pub disagreements: usize,
    /// Largest `max(|gap_a|, |gap_b|)` over disagreements.
    pub max_abs_gap: f64,
    pub floor: f64,
    pub witnesses: Vec<Witness>,
}

impl CoincidenceReport {
    pub fn coincide(&self) -> bool {
        self.disagreements == 0
    }

    pub fn witnesses_csv(&self) -> String {
        let mut s = String::from("site_a,site_b,sample,metric_a,metric_b,gap_a,gap_b\n");
        for w in &self.witnesses {
            s.push_str(&format!("{},{},{},{},{},{},{}\n", w.site_a, w.site_b, w.sample, w.metric_a, w.metric_b, w.gap_a, w.gap_b));
        }
        s
    }
}

/// Shared audit loop: `gaps(a, b, k)` returns one gap per metric for site
/// pair `(a, b)` at sample `k`.
fn audit(
    metrics: Vec<String>,
    n_sites: usize,
    n_samples: usize,
    floor: f64,
    mut gaps: impl FnMut(usize, usize, usize) -> Result<Vec<f64>>,
) -> Result<CoincidenceReport> {
    let mut rep = CoincidenceReport {
        site_pairs: n_sites * n_sites.saturating_sub(1) / 2,
        samples: n_samples,
        comparisons: 0,
        disagreements: 0,
        max_abs_gap: 0.0,
        floor,
        witnesses: Vec::new(),
        metrics,
    };
    for a in 0..n_sites {
        for b in a + 1..n_sites {
            for k in 0..n_samples {
                let g = gaps(a, b, k)?;
                for i in 0..g.len() {
                    for j in i + 1..g.len() {
                        if g[i].abs() <= floor || g[j].abs() <= floor {
                            continue;
                        }
                        rep.comparisons += 1;
                        if g[i].signum() != g[j].signum() {
                            rep.disagreements += 1;
                            rep.max_abs_gap = rep.max_abs_gap.max(g[i].abs().max(g[j].abs()));
                            rep.witnesses.push(Witness {
                                site_a: a,
                                site_b: b,
                                sample: k,
                                metric_a: rep.metrics[i].clone(),
                                metric_b: rep.metrics[j].clone(),
                                gap_a: g[i],
                                gap_b: g[j],
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Audits bisector signs of `metrics` over every pair of `sites` and every sample.
pub fn coincidence_report(
    metrics: &[MetricKind],
    sites: &[DensityMatrix],
    samples: &[DensityMatrix],
    floor: f64,
) -> Result<CoincidenceReport> {
    let names = metrics.iter().map(|m| m.name().to_string()).collect();
    audit(names, sites.len(), samples.len(), floor, |a, b, k| {
        metrics.iter().map(|&m| policy_gap(m, &sites[a], &sites[b], &samples[k])).collect()
    })
}

/// Section audit between the divergence gap and the Euclidean gap at `scale`.
pub fn section_coincidence_report(
    d: usize,
    sites: &[SectionPoint],
    samples: &[SectionPoint],
    scale: f64,
    floor: f64,
) -> Result<CoincidenceReport> {
    let names = vec![FieldMetric::SectionDivergence.name(), FieldMetric::SectionEuclid { scale }.name()];
    audit(names, sites.len(), samples.len(), floor, |a, b, k| {
        Ok(vec![
            section_gap_divergence(d, &sites[a], &sites[b], &samples[k])?,
            section_gap_euclidean(d, &sites[a], &sites[b], &samples[k], scale)?,
        ])
    })
}

/// Metric selectable for a bisector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldMetric {
    State(MetricKind),
    SectionDivergence,
    SectionEuclid { scale: f64 },
}

impl FieldMetric {
    pub fn name(&self) -> String {
        match self {
            FieldMetric::State(k) => k.name().to_string(),
            FieldMetric::SectionDivergence => "divergence-section".into(),
            FieldMetric::SectionEuclid { scale } if *scale == 1.0 => "euclid-section".into(),
            FieldMetric::SectionEuclid { .. } => "euclid-section-scaled".into(),
        }
    }

    /// Distance from `site` to `x` under this metric.
    pub fn distance(&self, site: &SectionPoint, x: &SectionPoint) -> Result<f64> {
        match self {
            FieldMetric::State(k) => policy_distance(*k, &site.to_density()?, &x.to_density()?),
            FieldMetric::SectionDivergence => {
                section_check(site.dim, &[site, x])?;
                require_pure_site(site)?;
                Ok(section_div_score(site, x))
            }
            FieldMetric::SectionEuclid { scale } => {
                section_check(site.dim, &[site, x])?;
                require_pure_site(site)?;
                Ok(section_euclid_sq(site, x, *scale))
            }
        }
    }
}

impl fmt::Display for FieldMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FieldMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "divergence-section" => Ok(FieldMetric::SectionDivergence),
            "euclid-section" => Ok(FieldMetric::SectionEuclid { scale: 1.0 }),
            // the bare name means the primal divergence seen from the sample
            "divergence" => Ok(FieldMetric::State(MetricKind::Divergence(ArgOrder::SampleFirst))),
            other => other.parse().map(FieldMetric::State),
        }
    }
}

/// Cell-centred `resolution x resolution` grid over the `(xi_d, xi_{d+1})`
/// disk, lifted to both sheets of the (optionally shrunk) pure ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub dim: usize,
    pub resolution: usize,
    /// 1 for the pure ellipsoid, below 1 for a shrunk copy.
    pub shrink: f64,
}

impl FieldGrid {
    pub fn new(dim: usize, resolution: usize) -> Self {
        Self { dim, resolution, shrink: 1.0 }
    }

    fn cell(&self, i: usize) -> f64 {
        -1.0 + (2 * i + 1) as f64 / self.resolution as f64
    }

    /// Grid points in a fixed order: upper sheet first, then lower, row-major.
    pub fn points(&self) -> Result<Vec<SectionPoint>> {
        if self.dim < 2 {
            return Err(Error::DimTooSmall(self.dim));
        }
        if self.resolution == 0 || !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(Error::Domain(format!("invalid grid: resolution {}, shrink {}", self.resolution, self.shrink)));
        }
        let mut out = Vec::new();
        for sheet in [1.0, -1.0] {
            for j in 0..self.resolution {
                for i in 0..self.resolution {
                    let (u, v) = (self.cell(i), self.cell(j));
                    let rr = u * u + v * v;
                    if rr > 1.0 {
                        continue;
                    }
                    let z = sheet * (1.0 - rr).sqrt();
                    out.push(SectionPoint::from_sphere(self.dim, [u, v, z])?.shrink(self.shrink));
                }
            }
        }
        Ok(out)
    }

    /// Grid cell and sheet (`true` = upper) of a point produced by [`points`](Self::points).
    pub fn locate(&self, p: &SectionPoint) -> (usize, usize, bool) {
        let [x, y, z] = p.shrink(1.0 / self.shrink).to_sphere();
        let idx = |t: f64| (((t + 1.0) / 2.0 * self.resolution as f64).floor().max(0.0) as usize).min(self.resolution - 1);
        (idx(x), idx(y), z >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub point: SectionPoint,
    /// `dist(site0) - dist(site1)` per metric.
    pub gaps: Vec<f64>,
    /// Index of the nearest site per metric.
    pub nearest: Vec<usize>,
    /// Second-smallest minus smallest distance per metric; small values mark
    /// points on a cell boundary where the label is a tie.
    pub margins: Vec<f64>,
}

impl FieldRow {
    /// Whether metrics `a` and `b` assign different nearest sites with both
    /// labels clear of a tie by more than `floor`.
    pub fn labels_differ(&self, a: usize, b: usize, floor: f64) -> bool {
        self.nearest[a] != self.nearest[b] && self.margins[a] > floor && self.margins[b] > floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectorField {
    pub grid: FieldGrid,
    pub metrics: Vec<String>,
    pub sites: usize,
    pub rows: Vec<FieldRow>,
}

/// Evaluates every metric at every grid point. Gaps compare the first two
/// sites; the nearest-site labels use all of them.
pub fn bisector_field(metrics: &[FieldMetric], sites: &[SectionPoint], grid: &FieldGrid) -> Result<BisectorField> {
    if sites.len() < 2 {
        return Err(Error::Domain("a bisector field needs at least two sites".into()));
    }
    if metrics.is_empty() {
        return Err(Error::EmptyInput);
    }
    for s in sites {
        if s.dim != grid.dim {
            return Err(Error::DimMismatch { expected: grid.dim, found: s.dim });
        }
    }
    let mut rows = Vec::new();
    for p in grid.points()? {
        let mut gaps = Vec::with_capacity(metrics.len());
        let mut nearest = Vec::with_capacity(metrics.len());
        let mut margins = Vec::with_capacity(metrics.len());
        for m in metrics {
            let dists: Vec<f64> = sites.iter().map(|s| m.distance(s, &p)).collect::<Result<_>>()?;
            gaps.push(dists[0] - dists[1]);
            let best = dists.iter().enumerate().fold(0, |b, (i, v)| if *v < dists[b] { i } else { b });
            nearest.push(best);
            let second = dists.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
            margins.push(second - dists[best]);
        }
        rows.push(FieldRow { point: p, gaps, nearest, margins });
    }
    Ok(BisectorField { grid: *grid, metrics: metrics.iter().map(FieldMetric::name).collect(), sites: sites.len(), rows })
}

/// Single-metric field between two sites as `(sample, gap)` pairs.
pub fn bisector_field_sample(
    kind: FieldMetric,
    s1: &SectionPoint,
    s2: &SectionPoint,
    grid: &FieldGrid,
) -> Result<Vec<(SectionPoint, f64)>> {
    let f = bisector_field(&[kind], &[*s1, *s2], grid)?;
    Ok(f.rows.into_iter().map(|r| (r.point, r.gaps[0])).collect())
}

impl BisectorField {
    /// CSV with header `x1,xd,xd1,gap_<metric>...` and, for more than two
    /// sites, `nearest_<metric>...` and `margin_<metric>...` columns.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,xd,xd1");
        for m in &self.metrics {
            s.push_str(&format!(",gap_{m}"));
        }
        if self.sites > 2 {
            for m in &self.metrics {
                s.push_str(&format!(",nearest_{m}"));
            }
            for m in &self.metrics {
                s.push_str(&format!(",margin_{m}"));
            }
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{}", r.point.xi1, r.point.xid, r.point.xid1));
            for g in &r.gaps {
                s.push_str(&format!(",{g}"));
            }
            if self.sites > 2 {
                for n in &r.nearest {
                    s.push_str(&format!(",{n}"));
                }
                for g in &r.margins {
                    s.push_str(&format!(",{g}"));
                }
            }
            s.push('\n');
        }
        s
    }

    /// Reads the gap, nearest-site and margin columns back from [`to_csv`](Self::to_csv) output.
    pub fn rows_from_csv(dim: usize, csv: &str) -> Result<(Vec<String>, Vec<FieldRow>)> {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().ok_or(Error::EmptyInput)?.split(',').collect();
        if header.len() < 4 || header[..3] != ["x1", "xd", "xd1"] {
            return Err(Error::Domain("unexpected CSV header".into()));
        }
        let metrics: Vec<String> = header[3..].iter().filter_map(|h| h.strip_prefix("gap_")).map(String::from).collect();
        let k = metrics.len();
        let has_nearest = header.len() == 3 + 3 * k;
        if !has_nearest && header.len() != 3 + k {
            return Err(Error::Domain("unexpected CSV header".into()));
        }
        let bad = |e: std::num::ParseFloatError| Error::Domain(format!("bad CSV number: {e}"));
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(Error::Domain(format!("CSV row has {} fields, expected {}", f.len(), header.len())));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(bad);
            let point = SectionPoint::new(dim, num(0)?, num(1)?, num(2)?)?;
            let gaps = (0..k).map(|i| num(3 + i)).collect::<Result<Vec<_>>>()?;
            let (nearest, margins) = if has_nearest {
                let nearest = (0..k)
                    .map(|i| f[3 + k + i].parse::<usize>().map_err(|e| Error::Domain(format!("bad CSV label: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                (nearest, (0..k).map(|i| num(3 + 2 * k + i)).collect::<Result<Vec<_>>>()?)
            } else {
                (gaps.iter().map(|g| usize::from(*g > 0.0)).collect(), gaps.iter().map(|g| g.abs()).collect())
            };
            rows.push(FieldRow { point, gaps, nearest, margins });
        }
        Ok((metrics, rows))
    }

    /// Sign map (two sites) or nearest-site map (more sites), one panel per
    /// metric with the upper sheet above the lower one.
    pub fn to_svg(&self) -> String {
        const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];
        let n = self.grid.resolution;
        let cell = (400 / n.max(1)).max(1);
        let side = cell * n;
        let gap = 20;
        let width = self.metrics.len() * (side + gap) + gap;
        let height = 2 * (side + gap) + 2 * gap;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        for (m, name) in self.metrics.iter().enumerate() {
            let ox = gap + m * (side + gap);
            s.push_str(&format!("<text x=\"{ox}\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n"));
            for r in &self.rows {
                let (i, j, upper) = self.grid.locate(&r.point);
                let oy = 2 * gap + if upper { 0 } else { side + gap };
                let color = if self.sites > 2 {
                    PALETTE[r.nearest[m] % PALETTE.len()]
                } else if r.gaps[m].abs() <= tol::GAP_FLOOR {
                    "#bbbbbb"
                } else if r.gaps[m] < 0.0 {
                    PALETTE[0]
                } else {
                    PALETTE[1]
                };
                s.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{color}\"/>\n",
                    ox + i * cell,
                    oy + (n - 1 - j) * cell
                ));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::divergence;
    use crate::states::random::{random_bloch_on_sphere, random_faithful, random_pure};
    use crate::states::to_coords;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_section_site(d: usize, rng: &mut ChaCha8Rng) -> SectionPoint {
        SectionPoint::from_sphere(d, random_bloch_on_sphere(rng).to_array()).unwrap()
    }

    #[test]
    fn section_embedding_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 3..=5 {
            let p = random_section_site(d, &mut rng);
            assert!(p.is_pure());
            let rho = p.to_density().unwrap();
            assert_eq!(rho.rank(1e-9), 1);
            let c = to_coords(rho.matrix()).unwrap().xi;
            assert!((c[0] - p.xi1).abs() < 1e-12);
            assert!((c[1] - (d as f64 - 2.0 - p.xi1)).abs() < 1e-12);
            assert!(c[2..d - 1].iter().all(|v| (v + 1.0).abs() < 1e-12));
            assert!((c[d - 1] - p.xid).abs() < 1e-12 && (c[d] - p.xid1).abs() < 1e-12);
            assert!(c[d + 1..].iter().all(|v| v.abs() < 1e-12));
            let back = SectionPoint::from_density(&rho).unwrap();
            assert!((back.xi1 - p.xi1).abs() < 1e-12 && (back.xid - p.xid).abs() < 1e-12 && (back.xid1 - p.xid1).abs() < 1e-12);
        }
    }

    #[test]
    fn section_divergence_gap_matches_shrunk_divergence() {
        // oracle: D(site || x_r) differences on the 2x2 block with x shrunk inside the ellipsoid
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = |p: &SectionPoint| {
            let m = p.to_density().unwrap();
            let sub = ComplexMatrix::from_fn(2, |r, c| m.matrix().get(r, c));
            DensityMatrix::new(sub).unwrap()
        };
        let mut checked = 0;
        for _ in 0..300 {
            let d = rng.gen_range(3..=5);
            let (a, b) = (random_section_site(d, &mut rng), random_section_site(d, &mut rng));
            let x = random_section_site(d, &mut rng).shrink(0.9);
            let g = section_gap_divergence(d, &a, &b, &x).unwrap();
            let oracle = divergence(&block(&a), &block(&x)).unwrap() - divergence(&block(&b), &block(&x)).unwrap();
            if g.abs() > 1e-6 {
                assert_eq!(g.signum(), oracle.signum());
                checked += 1;
            }
        }
        assert!(checked > 250);
    }

    #[test]
    fn example_bisectors() {
        for d in 3..=6 {
            let c = (d as f64 - 2.0) / 2.0;
            let a = SectionPoint::new(d, d as f64 - 1.0, 0.0, 0.0).unwrap();
            let b = SectionPoint::new(d, -1.0, 0.0, 0.0).unwrap();
            let on = SectionPoint::new(d, c, 0.3, -0.7).unwrap();
            assert!(section_gap_divergence(d, &a, &b, &on).unwrap().abs() < 1e-12);
            assert!(section_gap_euclidean(d, &a, &b, &on, 1.0).unwrap().abs() < 1e-12);
            let off = SectionPoint::new(d, c + 0.1, 0.3, -0.7).unwrap();
            assert!(section_gap_divergence(d, &a, &b, &off).unwrap() < 0.0);
            assert!(section_gap_euclidean(d, &a, &b, &off, 1.0).unwrap() < 0.0);

            let p = SectionPoint::new(d, c, 1.0, 0.0).unwrap();
            let q = SectionPoint::new(d, c, -1.0, 0.0).unwrap();
            let mirror_a = SectionPoint::from_sphere(d, [0.6, 0.0, 0.8]).unwrap();
            let mirror_b = SectionPoint::from_sphere(d, [-0.6, 0.0, 0.8]).unwrap();
            for x in [SectionPoint::new(d, c + 0.4, 0.0, 0.2).unwrap(), SectionPoint::new(d, c - 1.0, 0.0, -0.5).unwrap()] {
                assert!(section_gap_divergence(d, &p, &q, &x).unwrap().abs() < 1e-12);
                assert!(section_gap_euclidean(d, &p, &q, &x, 1.0).unwrap().abs() < 1e-12);
                assert!(section_gap_divergence(d, &mirror_a, &mirror_b, &x).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn section_gaps_need_three_levels() {
        let p = SectionPoint::from_sphere(2, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(section_gap_divergence(2, &p, &p, &p), Err(Error::DimTooSmall(2)));
        assert_eq!(section_gap_euclidean(2, &p, &p, &p, 1.0), Err(Error::DimTooSmall(2)));
    }

    #[test]
    fn scaled_euclid_is_twice_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ratios = Vec::new();
        for _ in 0..500 {
            let d = rng.gen_range(3..=6);
            let (a, b) = (random_section_site(d, &mut rng), random_section_site(d, &mut rng));
            let x = SectionPoint::new(d, rng.gen_range(-1.0..d as f64), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).unwrap();
            let gd = section_gap_divergence(d, &a, &b, &x).unwrap();
            let ge = section_gap_euclidean(d, &a, &b, &x, coinciding_scale(d)).unwrap();
            assert!((ge - 2.0 * gd).abs() < 1e-12);
            if gd.abs() > 1e-10 && ge.abs() > 1e-10 {
                ratios.push(ge / gd);
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        assert!(var <= 1e-8 && mean > 0.0);
    }

    #[test]
    fn antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = (random_section_site(4, &mut rng), random_section_site(4, &mut rng));
        let x = random_section_site(4, &mut rng);
        for scale in [1.0, coinciding_scale(4)] {
            let g = section_gap_euclidean(4, &a, &b, &x, scale).unwrap();
            assert!((g + section_gap_euclidean(4, &b, &a, &x, scale).unwrap()).abs() < 1e-12);
        }
        assert!((section_gap_divergence(4, &a, &b, &x).unwrap() + section_gap_divergence(4, &b, &a, &x).unwrap()).abs() < 1e-12);
        let (s1, s2, y) = (random_pure(3, &mut rng), random_pure(3, &mut rng), random_faithful(3, &mut rng));
        for kind in [MetricKind::Bures, MetricKind::EuclideanParam, MetricKind::Divergence(ArgOrder::SampleFirst), MetricKind::Divergence(ArgOrder::SiteFirst)] {
            let g = policy_gap(kind, &s1, &s2, &y).unwrap();
            assert!((g + policy_gap(kind, &s2, &s1, &y).unwrap()).abs() < 1e-9, "{kind}");
        }
    }

    #[test]
    fn pure_limit_gap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s1 = random_pure(3, &mut rng);
        let s2 = random_pure(3, &mut rng);
        assert!(pure_limit_divergence_gap(&s1, &s2, &s1).unwrap() < 0.0);
        // |x> = (|1> + |2>)/sqrt 2 with orthogonal |1>, |2> is equidistant
        let e = |k: usize| {
            let mut v = vec![C64::new(0.0, 0.0); 3];
            v[k] = C64::new(1.0, 0.0);
            DensityMatrix::from_pure_vector(&v).unwrap()
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = DensityMatrix::from_pure_vector(&[C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, 0.0)]).unwrap();
        assert!(pure_limit_divergence_gap(&e(0), &e(1), &x).unwrap().abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!(matches!(pure_limit_divergence_gap(&s1, &s2, &mixed), Err(Error::NotPure { .. })));
    }

    #[test]
    fn pure_limit_sign_matches_bures() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [2, 3, 4] {
            for _ in 0..300 {
                let (a, b, x) = (random_pure(d, &mut rng), random_pure(d, &mut rng), random_pure(d, &mut rng));
                let g = pure_limit_divergence_gap(&a, &b, &x).unwrap();
                let gb = bisector_gap(MetricKind::Bures, &a, &b, &x).unwrap();
                if g.abs() > tol::GAP_FLOOR && gb.abs() > tol::GAP_FLOOR {
                    assert_eq!(g.signum(), gb.signum());
                }
            }
        }
    }

    #[test]
    fn primal_divergence_gap_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kind = MetricKind::Divergence(ArgOrder::SampleFirst);
        for d in [2, 3] {
            for _ in 0..20 {
                let (s1, s2) = (random_faithful(d, &mut rng), random_faithful(d, &mut rng));
                let (p, q) = (random_faithful(d, &mut rng), random_faithful(d, &mut rng));
                let t: f64 = rng.gen_range(0.1..0.9);
                let mid = p.mix(&q, t).unwrap();
                let g = |x: &DensityMatrix| policy_gap(kind, &s1, &s2, x).unwrap();
                assert!((g(&mid) - (t * g(&p) + (1.0 - t) * g(&q))).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn qubit_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sites: Vec<_> = (0..6).map(|_| random_pure(2, &mut rng)).collect();
        let pure: Vec<_> = (0..60).map(|_| random_pure(2, &mut rng)).collect();
        let faithful: Vec<_> = (0..60).map(|_| random_faithful(2, &mut rng)).collect();
        let on_pure = [
            MetricKind::EuclideanParam,
            MetricKind::Bures,
            MetricKind::FubiniStudy,
            MetricKind::GeodesicSphere,
            MetricKind::DivergencePureLimit,
            MetricKind::Divergence(ArgOrder::SampleFirst),
        ];
        let r = coincidence_report(&on_pure, &sites, &pure, tol::GAP_FLOOR).unwrap();
        assert_eq!(r.disagreements, 0);
        assert_eq!(r.site_pairs, 15);
        assert!(r.comparisons > 0);
        let on_faithful = [
            MetricKind::EuclideanParam,
            MetricKind::Bures,
            MetricKind::Divergence(ArgOrder::SampleFirst),
            MetricKind::Divergence(ArgOrder::SiteFirst),
        ];
        let r = coincidence_report(&on_faithful, &sites, &faithful, tol::GAP_FLOOR).unwrap();
        assert!(r.coincide());
    }

    #[test]
    fn example3_disagrees_until_rescaled() {
        let d = 5;
        let sites = example3_sites(d).unwrap();
        assert_eq!(sites.len(), 8);
        assert!(sites.iter().all(SectionPoint::is_pure));
        let grid = FieldGrid::new(d, 40).points().unwrap();
        let plain = section_coincidence_report(d, &sites, &grid, 1.0, tol::GAP_FLOOR).unwrap();
        assert!(plain.disagreements > 0);
        assert_eq!(plain.witnesses.len(), plain.disagreements);
        let scaled = section_coincidence_report(d, &sites, &grid, coinciding_scale(d), tol::GAP_FLOOR).unwrap();
        assert_eq!(scaled.disagreements, 0);
    }

    #[test]
    fn fields() {
        let grid = FieldGrid::new(2, 12);
        let n = FieldGrid::new(2, 12).points().unwrap().len();
        let a = SectionPoint::from_sphere(2, [0.0, 0.0, 1.0]).unwrap();
        let b = SectionPoint::from_sphere(2, [0.0, 0.0, -1.0]).unwrap();
        let same = bisector_field_sample(FieldMetric::State(MetricKind::Bures), &a, &a, &grid).unwrap();
        assert_eq!(same.len(), n);
        assert!(same.iter().all(|(_, g)| *g == 0.0));
        // antipodal poles: the boundary is the equator, upper sheet belongs to the north site
        let eu = bisector_field_sample(FieldMetric::State(MetricKind::EuclideanParam), &a, &b, &grid).unwrap();
        for (p, g) in &eu {
            assert_eq!(g.signum(), -p.to_sphere()[2].signum());
        }
        let div = bisector_field_sample(FieldMetric::State(MetricKind::Divergence(ArgOrder::SampleFirst)), &a, &b, &grid).unwrap();
        for ((_, ge), (_, gd)) in eu.iter().zip(&div) {
            assert_eq!(ge.signum(), gd.signum());
        }
    }

    #[test]
    fn field_csv_round_trip_and_svg() {
        let d = 5;
        let sites = example3_sites(d).unwrap();
        let metrics = [FieldMetric::SectionDivergence, FieldMetric::SectionEuclid { scale: 1.0 }];
        let f = bisector_field(&metrics, &sites, &FieldGrid::new(d, 60)).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("x1,xd,xd1,gap_divergence-section,gap_euclid-section,nearest_divergence-section"));
        let (names, rows) = BisectorField::rows_from_csv(d, &csv).unwrap();
        assert_eq!(names, f.metrics);
        assert_eq!(rows, f.rows);
        // the two eight-site diagrams differ in thin slivers near the cell boundaries
        assert!(f.rows.iter().any(|r| r.labels_differ(0, 1, tol::GAP_FLOOR)));
        let scaled = [FieldMetric::SectionDivergence, FieldMetric::SectionEuclid { scale: coinciding_scale(d) }];
        let g = bisector_field(&scaled, &sites, &FieldGrid::new(d, 60)).unwrap();
        assert!(!g.rows.iter().any(|r| r.labels_differ(0, 1, tol::GAP_FLOOR)));
        let svg = f.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1 + 2 * f.rows.len());
    }

    #[test]
    fn field_metric_names_parse() {
        for s in ["divergence-section", "euclid-section", "bures", "euclid", "divergence-site-first"] {
            assert_eq!(s.parse::<FieldMetric>().unwrap().name(), s);
        }
        assert!("nope".parse::<FieldMetric>().is_err());
    }
}
