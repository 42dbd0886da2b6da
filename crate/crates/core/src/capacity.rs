//! Holevo capacity as the divergence radius of a channel's image.
//!
//! Pure inputs are placed on a mesh, sent through the channel, and the
//! smallest ball enclosing the images under `D(image || center)` is found.
//! Its radius estimates the capacity from below (up to solver error): a
//! finite subset of inputs can only shrink the min-max.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::mesh::{dist_points, MeshSpec, PointSet};
use crate::metrics::{divergence, entropy, ArgOrder, MetricKind};
use crate::seb::{welzl_states, SebConfig, SebStats};
use crate::states::{to_coords, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportState {
    pub weight: f64,
    pub input: DensityMatrix,
    pub image: DensityMatrix,
    /// `D(image || center)`.
    pub divergence_nats: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityStats {
    pub mesh_points: usize,
    pub distinct_images: usize,
    #[serde(flatten)]
    pub seb: SebStats,
    /// Frobenius norm of `center - sum w_i image_i`.
    pub weight_residual: f64,
    /// `S(sum w_i image_i) - sum w_i S(image_i)` for the support ensemble.
    pub holevo_quantity_nats: f64,
    /// Largest `|D(image_i || center) - radius|` over the support.
    pub support_spread: f64,
    /// Kept out of the JSON so results are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_nats: f64,
    pub capacity_bits: f64,
    pub center: DensityMatrix,
    pub support: Vec<SupportState>,
    pub mesh: Option<MeshSpec>,
    pub stats: CapacityStats,
}

/// Wall-clock stopwatch; reads zero where the platform has no clock (wasm32).
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

/// Applies `ch` to every point, preserving order; work is split across
/// `threads` scoped threads.
pub fn apply_all(ch: &KrausChannel, points: &[DensityMatrix], threads: usize) -> Result<Vec<DensityMatrix>> {
    let threads = threads.max(1).min(points.len().max(1));
    if threads == 1 {
        return points.iter().map(|p| ch.apply(p)).collect();
    }
    let chunk = points.len().div_ceil(threads);
    let parts: Vec<Result<Vec<DensityMatrix>>> = std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|p| ch.apply(p)).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("channel worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(points.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Indices of the first occurrence of each image, treating images that agree
/// within `1e-12` entrywise as equal.
pub fn dedup_images(images: &[DensityMatrix]) -> Vec<usize> {
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut keep = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let m = img.matrix();
        let d = m.dim();
        let key: Vec<i64> = (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .flat_map(|(r, c)| {
                let z = m.get(r, c);
                [(z.re * 1e10).round() as i64, (z.im * 1e10).round() as i64]
            })
            .collect();
        let bucket = buckets.entry(key).or_default();
        if !bucket.iter().any(|&j| images[j].max_abs_diff(img) <= 1e-12) {
            bucket.push(i);
            keep.push(i);
        }
    }
    keep
}

/// Non-negative weights summing to one that best reproduce `center` as a
/// mixture of `images`, with the Frobenius residual. Every subset is tried as
/// the active set of the simplex-constrained least-squares problem.
pub fn weights_for_center(center: &DensityMatrix, images: &[DensityMatrix]) -> Result<(Vec<f64>, f64)> {
    let n = images.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > 16 {
        return Err(Error::Domain(format!("{n} support states exceed the subset search limit")));
    }
    let c = DVector::from_vec(to_coords(center.matrix())?.xi);
    let xs: Vec<DVector<f64>> = images.iter().map(|p| Ok(DVector::from_vec(to_coords(p.matrix())?.xi))).collect::<Result<_>>()?;
    // subsets are fitted in coordinates and ranked by the residual on matrices
    let resid = |w: &[f64]| {
        let mix = images.iter().zip(w).fold(crate::states::ComplexMatrix::zeros(center.dim()), |acc, (p, &wi)| acc.add(&p.matrix().scale(wi)));
        let diff = mix.sub(center.matrix());
        diff.trace_product(&diff.adjoint()).re.max(0.0).sqrt()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 1u32..(1u32 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let k = idx.len();
        // KKT system of min |X w - c|^2 subject to sum w = 1
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = 2.0 * xs[i].dot(&xs[j]);
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = 2.0 * xs[i].dot(&c);
        }
        rhs[k] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if sol.iter().take(k).any(|v| !v.is_finite() || *v < -1e-12) {
            continue;
        }
        let mut w = vec![0.0; n];
        for (a, &i) in idx.iter().enumerate() {
            w[i] = sol[a].max(0.0);
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        let r = resid(&w);
        if best.as_ref().is_none_or(|(_, br)| r < *br - 1e-15) {
            best = Some((w, r));
        }
    }
    // a single image is always a feasible fallback
    Ok(best.unwrap_or_else(|| {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        let r = resid(&w);
        (w, r)
    }))
}

/// `S(sum w_i s_i) - sum w_i S(s_i)`.
pub fn holevo_quantity(weights: &[f64], states: &[DensityMatrix]) -> Result<f64> {
    let first = states.first().ok_or(Error::EmptyInput)?;
    let mut avg = crate::states::ComplexMatrix::zeros(first.dim());
    for (s, &w) in states.iter().zip(weights) {
        avg = avg.add(&s.matrix().scale(w));
    }
    let avg = DensityMatrix::new(avg)?;
    Ok(entropy(&avg) - states.iter().zip(weights).map(|(s, w)| w * entropy(s)).sum::<f64>())
}

/// Capacity estimate from explicit pure inputs.
pub fn capacity_of_points(ch: &KrausChannel, inputs: &PointSet, cfg: &SebConfig, threads: usize) -> Result<CapacityResult> {
    let start = Stopwatch::start();
    if inputs.dim() != ch.dim() {
        return Err(Error::DimMismatch { expected: ch.dim(), found: inputs.dim() });
    }
    let images = apply_all(ch, inputs.points(), threads)?;
    let keep = dedup_images(&images);
    let distinct: Vec<DensityMatrix> = keep.iter().map(|&i| images[i].clone()).collect();
    if let [only] = distinct.as_slice() {
        // a constant channel: the ball collapses onto its one image, which may be pure
        let stats = CapacityStats { mesh_points: inputs.len(), distinct_images: 1, wall_time_s: start.seconds(), ..Default::default() };
        return Ok(CapacityResult {
            capacity_nats: 0.0,
            capacity_bits: 0.0,
            center: only.clone(),
            support: vec![SupportState { weight: 1.0, input: inputs.points()[keep[0]].clone(), image: only.clone(), divergence_nats: 0.0 }],
            mesh: None,
            stats,
        });
    }
    let seb = welzl_states(&distinct, MetricKind::Divergence(ArgOrder::SampleFirst), cfg)?;
    let center = seb.ball.center;
    let radius = seb.ball.radius;

    let mut support_idx = seb.ball.support.clone();
    support_idx.sort_unstable();
    let support_images: Vec<DensityMatrix> = support_idx.iter().map(|&i| distinct[i].clone()).collect();
    let (weights, weight_residual) = weights_for_center(&center, &support_images)?;
    let mut support = Vec::with_capacity(support_idx.len());
    let mut spread: f64 = 0.0;
    for ((&i, img), &w) in support_idx.iter().zip(&support_images).zip(&weights) {
        let dv = divergence(img, &center)?;
        spread = spread.max((dv - radius).abs());
        support.push(SupportState { weight: w, input: inputs.points()[keep[i]].clone(), image: img.clone(), divergence_nats: dv });
    }
    let holevo_quantity_nats = holevo_quantity(&weights, &support_images)?;
    let stats = CapacityStats {
        mesh_points: inputs.len(),
        distinct_images: distinct.len(),
        seb: seb.stats,
        weight_residual,
        holevo_quantity_nats,
        support_spread: spread,
        wall_time_s: start.seconds(),
    };
    Ok(CapacityResult {
        capacity_nats: radius,
        capacity_bits: radius / std::f64::consts::LN_2,
        center,
        support,
        mesh: None,
        stats,
    })
}

/// Capacity estimate on the mesh `spec`.
pub fn holevo_capacity(ch: &KrausChannel, spec: &MeshSpec, cfg: &SebConfig) -> Result<CapacityResult> {
    holevo_capacity_threads(ch, spec, cfg, 1)
}

pub fn holevo_capacity_threads(ch: &KrausChannel, spec: &MeshSpec, cfg: &SebConfig, threads: usize) -> Result<CapacityResult> {
    let start = Stopwatch::start();
    if spec.dim != ch.dim() {
        return Err(Error::DimMismatch { expected: ch.dim(), found: spec.dim });
    }
    let points = dist_points(spec)?;
    let mut res = capacity_of_points(ch, &points, cfg, threads)?;
    res.mesh = Some(*spec);
    res.stats.wall_time_s = start.seconds();
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub points: usize,
    pub capacity_nats: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// One capacity estimate per mesh spacing; `deltas` must be descending.
pub fn capacity_vs_delta(
    ch: &KrausChannel,
    deltas: &[f64],
    rule: crate::mesh::MeshRule,
    cfg: &SebConfig,
) -> Result<Vec<DeltaRow>> {
    if deltas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Domain("deltas must be sorted in descending order".into()));
    }
    deltas
        .iter()
        .map(|&delta| {
            let spec = MeshSpec::new(ch.dim(), delta, rule)?;
            let r = holevo_capacity(ch, &spec, cfg)?;
            Ok(DeltaRow { delta, points: r.stats.mesh_points, capacity_nats: r.capacity_nats, wall_time_s: r.stats.wall_time_s })
        })
        .collect()
}
