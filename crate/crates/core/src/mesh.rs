//! Deterministic pure-state meshes.
//!
//! A mesh point is a vector `Phi = (phi_1 + i phi_2, ..., phi_{2d-3} + i phi_{2d-2}, psi)`
//! built from a grid tuple `phi`, normalized and turned into `|Phi><Phi|`. The
//! last entry is real, which loses nothing since a global phase does not
//! change the state.
//!
//! Two enumeration rules are available:
//!
//! * [`MeshRule::Linear`] runs the carry counter over `phi_i in {0, D, 2D, ...}`.
//!   Position `i` overflows when `phi_i > 1 - (phi_1 + ... + phi_{i-1})`; since
//!   every lower position has just been reset to zero when `i` is incremented,
//!   the reachable set is the cube `{0, D, ..., floor(1/D) D}^{2(d-1)}`. Here
//!   `psi = 1 - sum phi`.
//! * [`MeshRule::Quadratic`] runs over all integer tuples `n` (of either sign)
//!   with `sum (n_j D)^2 <= 1`, with `phi = n D` and `psi = sqrt(1 - sum phi^2)`,
//!   so `Phi` is already a unit vector.
//!
//! Grid values are always `n * D` from integer counters, never accumulated sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{DensityMatrix, C64};

/// Slack for the feasibility comparisons.
const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshRule {
    #[default]
    Linear,
    Quadratic,
}

impl fmt::Display for MeshRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshRule::Linear => "linear",
            MeshRule::Quadratic => "quadratic",
        })
    }
}

impl FromStr for MeshRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(MeshRule::Linear),
            "quadratic" => Ok(MeshRule::Quadratic),
            _ => Err(Error::InvalidMesh(format!("unknown rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub dim: usize,
    pub delta: f64,
    #[serde(default)]
    pub rule: MeshRule,
}

/// The `mesh` field of the point-set file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshTag {
    pub delta: f64,
    pub rule: MeshRule,
}

impl MeshSpec {
    pub fn new(dim: usize, delta: f64, rule: MeshRule) -> Result<Self> {
        let spec = MeshSpec { dim, delta, rule };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::DimTooSmall(self.dim));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidMesh(format!("delta {} outside (0, 1]", self.delta)));
        }
        Ok(())
    }

    /// Length `2(d-1)` of the grid tuple.
    pub fn tuple_len(&self) -> usize {
        2 * (self.dim - 1)
    }

    /// Largest counter value per position, `floor(1/D)` up to the grid tolerance.
    pub fn max_steps(&self) -> i64 {
        ((1.0 + GRID_TOL) / self.delta).floor() as i64
    }

    fn tag(&self) -> MeshTag {
        MeshTag { delta: self.delta, rule: self.rule }
    }
}

/// One literal step of the carry counter on real values, with 0-based `i`.
/// Returns `None` once the carry runs past the last position.
pub fn next_state(phi: &[f64], i: usize, delta: f64) -> Option<Vec<f64>> {
    let mut phi = phi.to_vec();
    let mut i = i;
    loop {
        if i >= phi.len() {
            return None;
        }
        phi[i] += delta;
        let budget = 1.0 - phi[..i].iter().sum::<f64>();
        if phi[i] > budget + GRID_TOL {
            phi[i] = 0.0;
            i += 1;
        } else {
            return Some(phi);
        }
    }
}

/// Integer form of [`next_state`] used by the generator; `n` holds grid counters.
fn next_counts(n: &mut [i64], spec: &MeshSpec) -> bool {
    let delta = spec.delta;
    match spec.rule {
        MeshRule::Linear => {
            for i in 0..n.len() {
                n[i] += 1;
                let lower: i64 = n[..i].iter().sum();
                if n[i] as f64 * delta > 1.0 - lower as f64 * delta + GRID_TOL {
                    n[i] = 0;
                } else {
                    return true;
                }
            }
            false
        }
        MeshRule::Quadratic => {
            let top = spec.max_steps();
            for i in 0..n.len() {
                // lower positions restart after the carry, so only higher ones constrain i
                let upper: i64 = n[i + 1..].iter().map(|v| v * v).sum();
                let mut v = n[i] + 1;
                while v <= top && !quad_feasible(upper + v * v, delta) {
                    v += 1;
                }
                if v <= top {
                    n[i] = v;
                    fill_lowest(n, i, top, delta);
                    return true;
                }
            }
            false
        }
    }
}

/// Sets positions `< end` to their smallest feasible values, top down.
fn fill_lowest(n: &mut [i64], end: usize, top: i64, delta: f64) {
    for j in (0..end).rev() {
        let upper: i64 = n[j + 1..].iter().map(|v| v * v).sum();
        n[j] = lowest_feasible(upper, top, delta);
    }
}

fn quad_feasible(sum_sq: i64, delta: f64) -> bool {
    sum_sq as f64 * delta * delta <= 1.0 + GRID_TOL
}

fn lowest_feasible(rest: i64, top: i64, delta: f64) -> i64 {
    (-top..=top).find(|v| quad_feasible(rest + v * v, delta)).unwrap_or(0)
}

fn first_counts(spec: &MeshSpec) -> Vec<i64> {
    let k = spec.tuple_len();
    match spec.rule {
        MeshRule::Linear => vec![0; k],
        MeshRule::Quadratic => {
            let mut n = vec![0i64; k];
            fill_lowest(&mut n, k, spec.max_steps(), spec.delta);
            n
        }
    }
}

/// Unit vector for grid counters `n`.
pub fn mesh_vector(n: &[i64], spec: &MeshSpec) -> Option<Vec<C64>> {
    let phi: Vec<f64> = n.iter().map(|&v| v as f64 * spec.delta).collect();
    let psi = match spec.rule {
        MeshRule::Linear => 1.0 - phi.iter().sum::<f64>(),
        MeshRule::Quadratic => (1.0 - phi.iter().map(|p| p * p).sum::<f64>()).max(0.0).sqrt(),
    };
    let mut v: Vec<C64> = phi.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    v.push(C64::new(psi, 0.0));
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    Some(v.into_iter().map(|z| z / norm).collect())
}

/// All grid counter tuples in generation order.
pub fn mesh_counts(spec: &MeshSpec) -> Result<Vec<Vec<i64>>> {
    spec.validate()?;
    let mut n = first_counts(spec);
    let mut out = vec![n.clone()];
    while next_counts(&mut n, spec) {
        out.push(n.clone());
    }
    Ok(out)
}

/// Number of mesh points without building the states.
pub fn mesh_size(spec: &MeshSpec) -> Result<usize> {
    Ok(mesh_counts(spec)?.iter().filter(|n| mesh_vector(n, spec).is_some()).count())
}

/// Pure states on the mesh, in generation order.
pub fn dist_points(spec: &MeshSpec) -> Result<PointSet> {
    let points = mesh_counts(spec)?
        .iter()
        .filter_map(|n| mesh_vector(n, spec))
        .map(|v| DensityMatrix::from_pure_vector(&v))
        .collect::<Result<Vec<_>>>()?;
    PointSet::new(spec.dim, points, Some(spec.tag()))
}

/// A non-empty list of states of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetJson", into = "PointSetJson")]
pub struct PointSet {
    dim: usize,
    points: Vec<DensityMatrix>,
    mesh: Option<MeshTag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSetJson {
    pub dim: usize,
    pub points: Vec<DensityMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshTag>,
}

impl TryFrom<PointSetJson> for PointSet {
    type Error = Error;

    fn try_from(j: PointSetJson) -> Result<Self> {
        PointSet::new(j.dim, j.points, j.mesh)
    }
}

impl From<PointSet> for PointSetJson {
    fn from(p: PointSet) -> Self {
        PointSetJson { dim: p.dim, points: p.points, mesh: p.mesh }
    }
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<DensityMatrix>, mesh: Option<MeshTag>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: p.dim() });
        }
        Ok(PointSet { dim, points, mesh })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DensityMatrix] {
        &self.points
    }

    pub fn into_points(self) -> Vec<DensityMatrix> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh(&self) -> Option<MeshTag> {
        self.mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::RankClass;
    use crate::tol;

    fn spec(dim: usize, delta: f64, rule: MeshRule) -> MeshSpec {
        MeshSpec::new(dim, delta, rule).unwrap()
    }

    #[test]
    fn next_state_examples() {
        assert_eq!(next_state(&[0.0, 0.0], 0, 1.0), Some(vec![1.0, 0.0]));
        assert_eq!(next_state(&[1.0, 0.0], 0, 1.0), Some(vec![0.0, 1.0]));
        assert_eq!(next_state(&[1.0, 1.0], 0, 1.0), None);
    }

    /// Walk the real-valued counter from the origin and collect every state.
    fn walk_real(d: usize, delta: f64) -> Vec<Vec<f64>> {
        let mut phi = vec![0.0; 2 * (d - 1)];
        let mut out = vec![phi.clone()];
        while let Some(next) = next_state(&phi, 0, delta) {
            out.push(next.clone());
            phi = next;
        }
        out
    }

    #[test]
    fn linear_counts_match_nested_loops() {
        for (d, delta) in [(2, 1.0), (2, 0.6), (2, 0.25), (3, 0.5), (3, 0.3)] {
            let s = spec(d, delta, MeshRule::Linear);
            let got = mesh_counts(&s).unwrap();
            // nested loops over the cube reached by the carry counter, position 0 fastest
            let m = (1.0 / delta + 1e-9).floor() as i64;
            let k = 2 * (d - 1);
            let mut want = Vec::new();
            for idx in 0..(m + 1).pow(k as u32) {
                let mut rem = idx;
                let mut t = Vec::with_capacity(k);
                for _ in 0..k {
                    t.push(rem % (m + 1));
                    rem /= m + 1;
                }
                want.push(t);
            }
            assert_eq!(got, want, "d={d} delta={delta}");
            // and the real-valued walk visits the same grid
            let real = walk_real(d, delta);
            assert_eq!(real.len(), got.len());
            for (r, n) in real.iter().zip(&got) {
                for (a, b) in r.iter().zip(n) {
                    assert!((a - *b as f64 * delta).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn quadratic_counts_match_brute_force() {
        for (d, delta) in [(2, 1.0), (2, 0.5), (2, 0.3), (3, 0.5), (3, 0.34)] {
            let s = spec(d, delta, MeshRule::Quadratic);
            let got = mesh_counts(&s).unwrap();
            let m = (1.0 / delta) as i64 + 1;
            let k = 2 * (d - 1);
            let width = 2 * m + 1;
            let mut want = std::collections::BTreeSet::new();
            for idx in 0..width.pow(k as u32) {
                let mut rem = idx;
                let mut t = Vec::with_capacity(k);
                for _ in 0..k {
                    t.push(rem % width - m);
                    rem /= width;
                }
                let r2: f64 = t.iter().map(|&v| (v as f64 * delta).powi(2)).sum();
                if r2 <= 1.0 + 1e-9 {
                    want.insert(t);
                }
            }
            let set: std::collections::BTreeSet<_> = got.iter().cloned().collect();
            assert_eq!(set.len(), got.len(), "no repeats");
            assert_eq!(set, want, "d={d} delta={delta}");
        }
    }

    #[test]
    fn known_counts() {
        assert_eq!(mesh_size(&spec(2, 1.0, MeshRule::Linear)).unwrap(), 4);
        assert_eq!(mesh_size(&spec(2, 1.0, MeshRule::Quadratic)).unwrap(), 5);
        assert_eq!(mesh_size(&spec(2, 0.5, MeshRule::Linear)).unwrap(), 9);
        // lattice points of the disk of radius 2
        assert_eq!(mesh_size(&spec(2, 0.5, MeshRule::Quadratic)).unwrap(), 13);
    }

    #[test]
    fn points_are_pure_and_deterministic() {
        for rule in [MeshRule::Linear, MeshRule::Quadratic] {
            for (d, delta) in [(2, 0.25), (3, 0.5)] {
                let s = spec(d, delta, rule);
                let a = dist_points(&s).unwrap();
                let b = dist_points(&s).unwrap();
                assert_eq!(a, b);
                for p in a.points() {
                    assert_eq!(p.rank_class(tol::PURE), RankClass::Pure);
                    assert!((p.matrix().trace().re - 1.0).abs() < 1e-10);
                    assert!(p.min_eigenvalue() >= -1e-10);
                }
            }
        }
    }

    #[test]
    fn count_non_increasing_in_delta() {
        for rule in [MeshRule::Linear, MeshRule::Quadratic] {
            let mut last = usize::MAX;
            for delta in [0.2, 0.25, 0.3, 0.4, 0.5, 0.7, 1.0] {
                let n = mesh_size(&spec(2, delta, rule)).unwrap();
                assert!(n <= last);
                last = n;
            }
        }
    }

    #[test]
    fn qutrit_counts_at_fine_spacing() {
        assert_eq!(mesh_size(&spec(3, 0.1, MeshRule::Linear)).unwrap(), 14641);
        assert_eq!(mesh_size(&spec(3, 0.1, MeshRule::Quadratic)).unwrap(), 49689);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(MeshSpec::new(1, 0.5, MeshRule::Linear), Err(Error::DimTooSmall(1))));
        assert!(MeshSpec::new(2, 0.0, MeshRule::Linear).is_err());
        assert!(MeshSpec::new(2, 1.5, MeshRule::Linear).is_err());
        assert!(MeshSpec::new(2, f64::NAN, MeshRule::Linear).is_err());
        assert!(matches!(PointSet::new(2, vec![], None), Err(Error::EmptyMesh)));
    }

    #[test]
    fn json_round_trip() {
        let p = dist_points(&spec(2, 0.5, MeshRule::Quadratic)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains(r#""rule":"quadratic""#));
        let back: PointSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), p.len());
        assert_eq!(back.mesh(), p.mesh());
    }
}
