//! Quantum channels in Kraus form, `Gamma(rho) = sum_i V_i rho V_i^dag`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::matrix::eig_hermitian_unchecked;
use crate::states::{matrix_sqrt, ComplexMatrix, DensityMatrix, C64};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Wire form. With `complete_last` the final Kraus operator is omitted from
/// `kraus` and filled in by [`kraus_complete`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    pub kraus: Vec<ComplexMatrix>,
    #[serde(default)]
    pub complete_last: bool,
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        if let Some(m) = j.kraus.iter().find(|m| m.dim() != j.dim) {
            return Err(Error::DimMismatch { expected: j.dim, found: m.dim() });
        }
        let ch = if j.complete_last {
            kraus_complete(j.dim, j.kraus)?
        } else {
            KrausChannel::new(j.kraus)?
        };
        ch.validate(tol::TPCP)?;
        Ok(ch)
    }
}

impl From<KrausChannel> for ChannelJson {
    fn from(ch: KrausChannel) -> Self {
        ChannelJson { dim: ch.dim, kraus: ch.kraus, complete_last: false }
    }
}

impl KrausChannel {
    /// Builds a channel without checking trace preservation; see [`KrausChannel::validate`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = kraus.first().ok_or(Error::EmptyInput)?.dim();
        if let Some(m) = kraus.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: m.dim() });
        }
        if kraus.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(KrausChannel { dim, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `max |sum V^dag V - I|`.
    pub fn tp_deviation(&self) -> f64 {
        gram_sum(self.dim, &self.kraus).max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let deviation = self.tp_deviation();
        if !(deviation <= tol) {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(())
    }

    /// Raw Kraus sum on any matrix of the right size.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: m.dim() });
        }
        let mut out = ComplexMatrix::zeros(self.dim);
        for v in &self.kraus {
            out = out.add(&v.mul(m).mul(&v.adjoint()));
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?.hermitian_part();
        // renormalize the last ulp of trace drift; validated channels keep it within 1e-9
        let t = out.trace().re;
        Ok(DensityMatrix::from_trusted(out.scale(1.0 / t)))
    }
}

fn gram_sum(dim: usize, kraus: &[ComplexMatrix]) -> ComplexMatrix {
    kraus.iter().fold(ComplexMatrix::zeros(dim), |acc, v| acc.add(&v.adjoint().mul(v)))
}

/// Appends `sqrt(I - sum V^dag V)` to `partial`.
pub fn kraus_complete(dim: usize, partial: Vec<ComplexMatrix>) -> Result<KrausChannel> {
    if let Some(m) = partial.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimMismatch { expected: dim, found: m.dim() });
    }
    let rest = ComplexMatrix::identity(dim).sub(&gram_sum(dim, &partial)).hermitian_part();
    let min_eigenvalue = eig_hermitian_unchecked(&rest).min_value();
    if min_eigenvalue < -tol::PSD {
        return Err(Error::NotCompletable { min_eigenvalue });
    }
    let mut kraus = partial;
    kraus.push(matrix_sqrt(&rest)?);
    let ch = KrausChannel::new(kraus)?;
    ch.validate(tol::TPCP)?;
    Ok(ch)
}

pub fn identity(dim: usize) -> KrausChannel {
    KrausChannel { dim, kraus: vec![ComplexMatrix::identity(dim)] }
}

/// Fully depolarizing channel with Kraus operators `|i><j| / sqrt(d)`; every
/// input maps to `I/d`.
pub fn depolarizing(dim: usize) -> KrausChannel {
    let s = 1.0 / (dim as f64).sqrt();
    let kraus = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| ComplexMatrix::from_fn(dim, |r, c| if r == i && c == j { C64::new(s, 0.0) } else { C64::new(0.0, 0.0) }))
        .collect();
    KrausChannel { dim, kraus }
}

/// Single-unitary channel; `u` must be unitary within the TPCP tolerance.
pub fn unitary(u: ComplexMatrix) -> Result<KrausChannel> {
    let ch = KrausChannel::new(vec![u])?;
    ch.validate(tol::TPCP)?;
    Ok(ch)
}

/// Qubit amplitude damping with decay probability `gamma`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("damping probability {gamma} outside [0, 1]")));
    }
    let k0 = ComplexMatrix::from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), ((1.0 - gamma).sqrt(), 0.0)]])?;
    let k1 = ComplexMatrix::from_rows(&[&[(0.0, 0.0), (gamma.sqrt(), 0.0)], &[(0.0, 0.0), (0.0, 0.0)]])?;
    KrausChannel::new(vec![k0, k1])
}

pub fn gamma5_partial() -> [ComplexMatrix; 2] {
    let v1 = ComplexMatrix::from_rows(&[
        &[(0.2, 0.0), (0.3, 0.0), (0.4, 0.0)],
        &[(0.0, 0.0), (0.0, 0.5), (0.0, 0.0)],
        &[(0.0, 0.1), (0.0, 0.4), (0.0, 0.5)],
    ])
    .expect("3x3 literal");
    let v2 = ComplexMatrix::from_rows(&[
        &[(0.1, -0.3), (0.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (0.0, -0.3), (0.1, -0.2)],
        &[(0.3, -0.3), (0.2, 0.1), (0.0, 0.0)],
    ])
    .expect("3x3 literal");
    [v1, v2]
}

/// The three-level test channel with two given Kraus operators and the third
/// obtained by completion.
pub fn gamma5() -> KrausChannel {
    kraus_complete(3, gamma5_partial().to_vec()).expect("gamma5 is completable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random::{random_faithful, random_pure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validate_examples() {
        identity(2).validate(1e-8).unwrap();
        let twice = KrausChannel::new(vec![ComplexMatrix::identity(2).scale(2.0)]).unwrap();
        match twice.validate(1e-8) {
            Err(Error::NotTracePreserving { deviation }) => assert!((deviation - 3.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        gamma5().validate(1e-8).unwrap();
        depolarizing(3).validate(1e-12).unwrap();
    }

    #[test]
    fn identity_and_depolarizing_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for d in [2, 3] {
            let rho = random_faithful(d, &mut rng);
            assert!(identity(d).apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
            let out = depolarizing(d).apply(&rho).unwrap();
            assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(d)) < 1e-14);
        }
    }

    #[test]
    fn gamma5_on_ket_zero_matches_triple_products() {
        let e0 = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0])).unwrap();
        let ch = gamma5();
        let out = ch.apply(&e0).unwrap();
        // V rho V^dag with rho = |0><0| is the outer product of V's first column
        let mut want = [[C64::new(0.0, 0.0); 3]; 3];
        for v in ch.kraus() {
            for r in 0..3 {
                for c in 0..3 {
                    want[r][c] += v.get(r, 0) * v.get(c, 0).conj();
                }
            }
        }
        for r in 0..3 {
            for c in 0..3 {
                assert!((out.matrix().get(r, c) - want[r][c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma5_layout() {
        let ch = gamma5();
        assert_eq!(ch.dim(), 3);
        assert_eq!(ch.kraus().len(), 3);
        assert_eq!(ch.kraus()[0].get(0, 1), C64::new(0.3, 0.0));
        assert_eq!(ch.kraus()[1].get(2, 1), C64::new(0.2, 0.1));
        let out = ch.apply(&DensityMatrix::maximally_mixed(3)).unwrap();
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        let v3 = &ch.kraus()[2];
        assert!(v3.hermitian_deviation() < 1e-14);
        assert!(eig_hermitian_unchecked(v3).min_value() >= -1e-12);
    }

    #[test]
    fn gamma5_v3_snapshot() {
        let ch = gamma5();
        let v3 = &ch.kraus()[2];
        let want: [[(f64, f64); 3]; 3] = V3_SNAPSHOT;
        for r in 0..3 {
            for c in 0..3 {
                let got = v3.get(r, c);
                assert!((got.re - want[r][c].0).abs() < 1e-12 && (got.im - want[r][c].1).abs() < 1e-12, "V3[{r}][{c}] = {got}");
            }
        }
    }

    const V3_SNAPSHOT: [[(f64, f64); 3]; 3] = [
        [(0.788409263471, 0.0), (-0.152117542386, -0.080221828979), (-0.134929688290, -0.025090315750)],
        [(-0.152117542386, 0.080221828979), (0.418686923833, 0.0), (-0.393219423149, -0.022460109597)],
        [(-0.134929688290, 0.025090315750), (-0.393219423149, 0.022460109597), (0.605011143706, 0.0)],
    ];

    #[test]
    fn completion_examples() {
        let c = kraus_complete(2, vec![]).unwrap();
        assert!(c.kraus()[0].max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let h = ComplexMatrix::identity(2).scale(std::f64::consts::FRAC_1_SQRT_2);
        let c = kraus_complete(2, vec![h.clone()]).unwrap();
        assert!(c.kraus()[1].max_abs_diff(&h) < 1e-15);
        let big = ComplexMatrix::identity(2).scale(1.1);
        assert!(matches!(kraus_complete(2, vec![big]), Err(Error::NotCompletable { .. })));
    }

    #[test]
    fn channel_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ch = gamma5();
        for _ in 0..50 {
            let a = random_pure(3, &mut rng);
            let b = random_faithful(3, &mut rng);
            let w: f64 = rng.gen_range(0.0..1.0);
            let mixed = ch.apply(&a.mix(&b, w).unwrap()).unwrap();
            let lin = ch.apply(&a).unwrap().mix(&ch.apply(&b).unwrap(), w).unwrap();
            assert!(mixed.max_abs_diff(&lin) <= 1e-10);
            let raw = ch.apply_matrix(a.matrix()).unwrap();
            assert!((raw.trace().re - 1.0).abs() <= 1e-9);
            assert!(eig_hermitian_unchecked(&raw.hermitian_part()).min_value() >= -1e-9);
        }
    }

    #[test]
    fn amplitude_damping_is_tp() {
        amplitude_damping(0.3).unwrap().validate(1e-14).unwrap();
        assert!(amplitude_damping(1.5).is_err());
    }

    #[test]
    fn json_round_trip_and_completion() {
        let ch = gamma5();
        let s = serde_json::to_string(&ch).unwrap();
        let back: KrausChannel = serde_json::from_str(&s).unwrap();
        assert!(back.kraus().iter().zip(ch.kraus()).all(|(a, b)| a.max_abs_diff(b) < 1e-15));
        let partial = ChannelJson { dim: 3, kraus: gamma5_partial().to_vec(), complete_last: true };
        let s = serde_json::to_string(&partial).unwrap();
        let back: KrausChannel = serde_json::from_str(&s).unwrap();
        assert!(back.kraus()[2].max_abs_diff(&ch.kraus()[2]) < 1e-15);
        let bad = r#"{"dim":2,"kraus":[{"dim":2,"re":[[2,0],[0,2]],"im":[[0,0],[0,0]]}]}"#;
        assert!(serde_json::from_str::<KrausChannel>(bad).is_err());
    }
}
