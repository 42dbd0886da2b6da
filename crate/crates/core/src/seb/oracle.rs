//! Independent checks for the Welzl solvers: brute-force enclosing balls and
//! the LP-type axioms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::euclid::{boundary_ball_euclid, EuclidBall};
use super::{welzl_states, Ball, SebConfig};
use crate::error::{Error, Result};
use crate::metrics::{divergence, divergence_qubit_closed, ArgOrder, MetricKind};
use crate::states::{from_bloch, from_coords, to_bloch, to_coords, BlochVector, DensityMatrix, GeneralizedCoords};

/// Smallest enclosing Euclidean ball by trying every subset of at most
/// `n + 1` points as the boundary.
pub fn seb_bruteforce_euclid(points: &[Vec<f64>]) -> Result<EuclidBall> {
    let n = points.first().ok_or(Error::EmptyInput)?.len();
    let m = points.len();
    let mut best: Option<EuclidBall> = None;
    let mut subset = Vec::new();
    for mask in 1u64..(1u64 << m) {
        if mask.count_ones() as usize > n + 1 {
            continue;
        }
        subset.clear();
        subset.extend((0..m).filter(|i| mask >> i & 1 == 1));
        let refs: Vec<&[f64]> = subset.iter().map(|&i| points[i].as_slice()).collect();
        let Ok((center, radius)) = boundary_ball_euclid(&refs) else { continue };
        if best.as_ref().is_some_and(|b| b.radius <= radius) {
            continue;
        }
        let encloses = points.iter().all(|p| {
            let d = p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d <= radius * (1.0 + 1e-12) + 1e-12
        });
        if encloses {
            best = Some(EuclidBall { center, radius, support: subset.clone() });
        }
    }
    best.ok_or(Error::Degenerate)
}

fn max_divergence(points: &[DensityMatrix], center: &DensityMatrix) -> f64 {
    points.iter().map(|p| divergence(p, center).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

fn mixture(points: &[DensityMatrix], w: &[f64]) -> DensityMatrix {
    let d = points[0].dim();
    let mut xi = vec![0.0; d * d - 1];
    for (p, &wi) in points.iter().zip(w) {
        for (acc, v) in xi.iter_mut().zip(to_coords(p.matrix()).expect("valid state").xi) {
            *acc += wi * v;
        }
    }
    DensityMatrix::new(from_coords(&GeneralizedCoords { dim: d, xi }).expect("coordinate length")).expect("mixtures are states")
}

/// Every composition of `total` into `parts` non-negative integers.
fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for k in 0..=total {
        cur.push(k);
        compositions(total - k, parts - 1, out, cur);
        cur.pop();
    }
}

/// `min over w of max_i D(p_i || sum_j w_j p_j)` on a simplex grid, then
/// refined by a shrinking pattern search over pairwise weight transfers.
fn mixture_search(points: &[DensityMatrix], resolution: usize) -> (Vec<f64>, f64) {
    let n = points.len();
    let mut grid = Vec::new();
    compositions(resolution, n, &mut grid, &mut Vec::new());
    let eval = |w: &[f64]| {
        // keep the candidate faithful so every divergence is finite
        let c = mixture(points, w).shrink(1.0 - 1e-12);
        max_divergence(points, &c)
    };
    let mut best_w = vec![1.0 / n as f64; n];
    let mut best = eval(&best_w);
    for g in &grid {
        let w: Vec<f64> = g.iter().map(|&k| k as f64 / resolution as f64).collect();
        let v = eval(&w);
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let mut step = 1.0 / resolution as f64;
    while step > 1e-6 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || best_w[j] < step {
                    continue;
                }
                let mut w = best_w.clone();
                w[i] += step;
                w[j] -= step;
                let v = eval(&w);
                if v < best {
                    best = v;
                    best_w = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    // The max function has kinks where pattern search stalls; Blahut-Arimoto
    // iterates w_i <- w_i exp(D(p_i || mix(w))) supply further mixture candidates.
    let mut w: Vec<f64> = best_w.iter().map(|v| 0.999 * v + 0.001 / n as f64).collect();
    for _ in 0..20_000 {
        let c = mixture(points, &w).shrink(1.0 - 1e-12);
        let ds: Vec<f64> = points.iter().map(|p| divergence(p, &c).unwrap_or(f64::INFINITY)).collect();
        let upper = ds.iter().cloned().fold(0.0, f64::max);
        let lower: f64 = ds.iter().zip(&w).map(|(d, wi)| d * wi).sum();
        if upper < best {
            best = upper;
            best_w = w.clone();
        }
        if upper - lower < 1e-10 {
            break;
        }
        let z: f64 = w.iter().zip(&ds).map(|(wi, d)| wi * (d - upper).exp()).sum();
        w = w.iter().zip(&ds).map(|(wi, d)| wi * (d - upper).exp() / z).collect();
    }
    (best_w, best)
}

/// `min over c in the Bloch ball of max_i D(p_i || c)` on a cubic lattice,
/// refined by coordinate pattern search, using the closed-form divergence.
fn bloch_search(points: &[BlochVector], resolution: usize) -> (BlochVector, f64) {
    let eval = |c: &BlochVector| {
        if c.radius() >= 1.0 - 1e-12 {
            return f64::INFINITY;
        }
        points.iter().map(|p| divergence_qubit_closed(p, c).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    };
    let res = resolution.max(1) as i64;
    let mut best_c = BlochVector::ORIGIN;
    let mut best = eval(&best_c);
    for i in -res..=res {
        for j in -res..=res {
            for k in -res..=res {
                let c = BlochVector::new(i as f64 / res as f64, j as f64 / res as f64, k as f64 / res as f64);
                let v = eval(&c);
                if v < best {
                    best = v;
                    best_c = c;
                }
            }
        }
    }
    let mut step = 1.0 / res as f64;
    while step > 1e-10 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut a = best_c.to_array();
                a[axis] += sign * step;
                let c = BlochVector::new(a[0], a[1], a[2]);
                let v = eval(&c);
                if v < best {
                    best = v;
                    best_c = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (best_c, best)
}

/// Grid-search oracle for small instances (at most 12 points, `d <= 3`).
///
/// For the divergence the candidate centers are mixtures of the points on a
/// simplex grid with `grid_resolution` steps per unit weight; for qubits a
/// Bloch-ball lattice with `grid_resolution` steps per half-axis is searched
/// as well and the better result is kept. The Euclidean case is exact.
pub fn seb_bruteforce(points: &[DensityMatrix], metric: MetricKind, grid_resolution: usize) -> Result<Ball> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let d = first.dim();
    if points.len() > 12 || d > 3 {
        return Err(Error::Domain("brute-force oracle is limited to 12 points and d <= 3".into()));
    }
    match metric {
        MetricKind::EuclideanParam => {
            let coords = points.iter().map(|p| Ok(to_coords(p.matrix())?.xi)).collect::<Result<Vec<_>>>()?;
            let b = seb_bruteforce_euclid(&coords)?;
            let center = DensityMatrix::new(from_coords(&GeneralizedCoords::new(d, b.center)?)?)?;
            Ok(Ball { center, radius: b.radius, support: b.support })
        }
        MetricKind::Divergence(ArgOrder::SampleFirst) => {
            let (w, mut radius) = mixture_search(points, grid_resolution.max(1));
            let mut center = mixture(points, &w).shrink(1.0 - 1e-12);
            if d == 2 {
                let bl = points.iter().map(to_bloch).collect::<Result<Vec<_>>>()?;
                let (c, r) = bloch_search(&bl, grid_resolution.max(1));
                if r < radius {
                    radius = r;
                    center = from_bloch(&c)?;
                }
            }
            let support = (0..points.len())
                .filter(|&i| divergence(&points[i], &center).map(|v| v >= radius - 1e-4).unwrap_or(false))
                .collect();
            Ok(Ball { center, radius, support })
        }
        other => Err(Error::MetricNotApplicable { metric: other.to_string(), reason: "no brute-force oracle".into() }),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpTypeReport {
    pub monotonicity_checks: usize,
    pub monotonicity_violations: usize,
    pub locality_checks: usize,
    pub locality_violations: usize,
    /// Largest `radius(F) - radius(G)` seen over nested pairs `F` in `G`.
    pub max_monotonicity_excess: f64,
    pub tolerance: f64,
    pub violations: Vec<String>,
}

/// Samples nested subsets and checks the monotonicity and locality axioms
/// for the radius function `w`. `w` returns the radius and support indices
/// (relative to the subset passed in).
pub fn lp_type_check_with(
    n: usize,
    trials: usize,
    seed: u64,
    tolerance: f64,
    mut w: impl FnMut(&[usize]) -> Result<(f64, Vec<usize>)>,
) -> Result<LpTypeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LpTypeReport { tolerance, ..LpTypeReport::default() };
    if n < 2 {
        return Ok(report);
    }
    for trial in 0..trials {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let g_len = rng.gen_range(1..n);
        let g: Vec<usize> = all[..g_len].to_vec();
        let h = all[g_len];
        let (wg, support) = w(&g)?;

        // monotonicity on a random F in G, plus the trivial F = G case
        let f_len = rng.gen_range(1..=g_len);
        for f in [g[..f_len].to_vec(), g.clone()] {
            let (wf, _) = w(&f)?;
            report.monotonicity_checks += 1;
            report.max_monotonicity_excess = report.max_monotonicity_excess.max(wf - wg);
            if wf > wg + tolerance {
                report.monotonicity_violations += 1;
                report.violations.push(format!("trial {trial}: monotonicity w(F)={wf} > w(G)={wg}"));
            }
        }

        // locality with F = basis of G plus a few random members, so w(F) = w(G)
        let mut f: Vec<usize> = support.iter().map(|&k| g[k]).collect();
        for &x in &g {
            if !f.contains(&x) && rng.gen_bool(0.5) {
                f.push(x);
            }
        }
        let (wf, _) = w(&f)?;
        if (wf - wg).abs() > tolerance {
            continue;
        }
        let mut gh = g.clone();
        gh.push(h);
        let mut fh = f.clone();
        fh.push(h);
        let (wgh, _) = w(&gh)?;
        let (wfh, _) = w(&fh)?;
        report.locality_checks += 1;
        if wgh > wg + 10.0 * tolerance && wfh <= wf + tolerance {
            report.locality_violations += 1;
            report.violations.push(format!("trial {trial}: locality w(G+h)={wgh} > w(G)={wg} but w(F+h)={wfh}"));
        }
    }
    Ok(report)
}

/// LP-type axiom check for enclosing balls of states under `metric`.
pub fn lp_type_check(points: &[DensityMatrix], metric: MetricKind, trials: usize, cfg: &SebConfig) -> Result<LpTypeReport> {
    let tolerance = match metric {
        MetricKind::EuclideanParam => 1e-8,
        _ => super::divergence::TOL_EQ,
    };
    lp_type_check_with(points.len(), trials, cfg.shuffle_seed, tolerance, |idx| {
        let sub: Vec<DensityMatrix> = idx.iter().map(|&i| points[i].clone()).collect();
        let r = welzl_states(&sub, metric, cfg)?;
        Ok((r.ball.radius, r.ball.support))
    })
}
