//! Domain types shared by all modules: the delay system, delay and phase
//! vectors, certificates, and characteristic roots. All types are immutable
//! value objects and safe to share across threads.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{frobenius_norm, CMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("system must contain at least two matrices (A0 and one delayed term)")]
    TooFewMatrices,
    #[error("matrix {index} has shape {rows}x{cols}, expected {n}x{n}")]
    DimensionMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("matrix {index} contains a non-finite entry")]
    NonFiniteEntry { index: usize },
    #[error("state dimension must be at least 1")]
    EmptyState,
    #[error("delay vector has length {got}, system expects {expected}")]
    DelayCountMismatch { got: usize, expected: usize },
    #[error("delay {index} is negative or non-finite: {value}")]
    InvalidDelay { index: usize, value: f64 },
    #[error("phase vector has length {got}, system expects {expected}")]
    PhaseCountMismatch { got: usize, expected: usize },
    #[error("system JSON declares n={n_decl}, m={m_decl} but carries {mats} matrices")]
    MatrixCountMismatch {
        n_decl: usize,
        m_decl: usize,
        mats: usize,
    },
    #[error("invalid system JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A linear DDE with discrete delays: dx/dt = A0 x(t) + sum_k Ak x(t - tau_k).
/// Delays are not part of the system; they are inputs to the operations that
/// need them, so one system can be certified once and validated at many
/// delay vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeSystem {
    n: usize,
    matrices: Vec<CMatrix>,
}

impl DdeSystem {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self, ModelError> {
        if matrices.len() < 2 {
            return Err(ModelError::TooFewMatrices);
        }
        let n = matrices[0].nrows();
        if n == 0 {
            return Err(ModelError::EmptyState);
        }
        for (index, m) in matrices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(ModelError::DimensionMismatch {
                    index,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    n,
                });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ModelError::NonFiniteEntry { index });
            }
        }
        Ok(DdeSystem { n, matrices })
    }

    /// Scalar system from complex coefficients (a0, a1, ..., am).
    pub fn scalar(coeffs: &[Complex64]) -> Result<Self, ModelError> {
        let mats = coeffs
            .iter()
            .map(|&a| CMatrix::from_row_slice(1, 1, &[a]))
            .collect();
        Self::new(mats)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of delayed terms m.
    pub fn delay_count(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn a0(&self) -> &CMatrix {
        &self.matrices[0]
    }

    /// Delayed coefficient A_k, 1-based (k in 1..=m).
    pub fn delayed(&self, k: usize) -> &CMatrix {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// S(Phi) = A0 + sum_k Ak e^{i phi_k}.
    pub fn s_of_phi(&self, phi: &PhaseVector) -> CMatrix {
        assert_eq!(phi.len(), self.delay_count(), "phase vector length mismatch");
        let mut s = self.matrices[0].clone();
        for (k, &p) in phi.phases().iter().enumerate() {
            let rot = Complex64::from_polar(1.0, p);
            s += &self.matrices[k + 1] * rot;
        }
        s
    }

    /// 1 + ||A0||_F + sum ||Ak||_F; the residual scale used throughout.
    pub fn norm_scale(&self) -> f64 {
        1.0 + self.matrices.iter().map(frobenius_norm).sum::<f64>()
    }

    /// Conservative frequency bound: sum of Frobenius norms plus slack.
    /// Beyond this bound no eigenvalue of S(Phi) or characteristic root with
    /// non-negative real part can have a larger |Im|.
    pub fn frequency_bound(&self, slack: f64) -> f64 {
        self.matrices.iter().map(frobenius_norm).sum::<f64>() + slack
    }

    /// True when all coefficient matrices have zero imaginary parts.
    pub fn is_real(&self) -> bool {
        self.matrices.iter().all(|m| m.iter().all(|z| z.im == 0.0))
    }

    pub fn check_delays(&self, taus: &DelayVector) -> Result<(), ModelError> {
        if taus.len() != self.delay_count() {
            return Err(ModelError::DelayCountMismatch {
                got: taus.len(),
                expected: self.delay_count(),
            });
        }
        Ok(())
    }

    /// Parse the JSON system schema:
    /// `{"n": int, "m": int, "A": [matrix, ...]}` with `A[0] = A0` and each
    /// entry either `[re, im]` or a bare real number. Extra matrices beyond
    /// m+1 are rejected.
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let raw: RawSystem = serde_json::from_str(text)?;
        if raw.a.len() != raw.m + 1 {
            return Err(ModelError::MatrixCountMismatch {
                n_decl: raw.n,
                m_decl: raw.m,
                mats: raw.a.len(),
            });
        }
        let mut mats = Vec::with_capacity(raw.a.len());
        for (index, rows) in raw.a.iter().enumerate() {
            let nr = rows.len();
            let nc = rows.first().map_or(0, |r| r.len());
            if nr != raw.n || nc != raw.n || rows.iter().any(|r| r.len() != nc) {
                return Err(ModelError::DimensionMismatch {
                    index,
                    rows: nr,
                    cols: nc,
                    n: raw.n,
                });
            }
            let flat: Vec<Complex64> = rows
                .iter()
                .flat_map(|r| r.iter().map(RawEntry::to_complex))
                .collect();
            mats.push(CMatrix::from_row_slice(nr, nc, &flat));
        }
        Self::new(mats)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let a: Vec<Vec<Vec<[f64; 2]>>> = self
            .matrices
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        serde_json::json!({ "n": self.n, "m": self.delay_count(), "A": a })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<RawEntry>>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl RawEntry {
    fn to_complex(&self) -> Complex64 {
        match *self {
            RawEntry::Real(re) => Complex64::new(re, 0.0),
            RawEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Non-negative delays (tau_1, ..., tau_m).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayVector {
    taus: Vec<f64>,
}

impl DelayVector {
    pub fn new(taus: Vec<f64>) -> Result<Self, ModelError> {
        for (index, &t) in taus.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(ModelError::InvalidDelay { index, value: t });
            }
        }
        Ok(DelayVector { taus })
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.taus
    }

    pub fn max(&self) -> f64 {
        self.taus.iter().cloned().fold(0.0, f64::max)
    }
}

/// Feedback phases (phi_1, ..., phi_m), canonicalized to [0, 2pi).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseVector {
    phis: Vec<f64>,
}

impl PhaseVector {
    pub fn new(phis: Vec<f64>) -> Self {
        let phis = phis.into_iter().map(canonical_phase).collect();
        PhaseVector { phis }
    }

    pub fn zeros(m: usize) -> Self {
        PhaseVector { phis: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phis
    }
}

/// True mathematical modulo into [0, 2pi).
pub fn canonical_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    CertifiedStable,
    CertifiedNot,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    #[serde(rename = "A1.1")]
    A11,
    #[serde(rename = "A1.2")]
    A12,
    #[serde(rename = "A1.3")]
    A13,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub omega: f64,
    pub phi: PhaseVector,
    pub condition: ConditionId,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionRecord {
    pub condition: ConditionId,
    pub passed: bool,
    pub margin: f64,
}

/// Tri-state certificate: the conditions are open/closed conditions on
/// continuous spectra, so floating point cannot decide exact boundary cases;
/// those land in Inconclusive.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub margin: f64,
    pub witness: Option<Witness>,
    pub condition_trace: Vec<ConditionRecord>,
}

impl Certificate {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::CertifiedStable
    }
}

/// A characteristic root with its quasipolynomial residual after Newton
/// refinement.
#[derive(Debug, Clone, Serialize)]
pub struct CharRoot {
    pub lambda: Complex64,
    pub residual: f64,
    pub multiplicity_hint: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn minimal_well_formed() {
        let sys = DdeSystem::scalar(&[c(-1.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.delay_count(), 1);
    }

    #[test]
    fn shape_violation_rejected() {
        let a0 = CMatrix::identity(2, 2) * c(-1.0, 0.0);
        let bad = CMatrix::from_row_slice(1, 3, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert!(matches!(
            DdeSystem::new(vec![a0, bad]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_delay_scalar_system() {
        let sys = DdeSystem::scalar(&[c(-1.0, 1.0), c(0.5, 0.0), c(0.3, 0.0)]).unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.delay_count(), 2);
    }

    #[test]
    fn s_of_phi_examples() {
        // all phases zero: A0 + sum Ak
        let sys = DdeSystem::scalar(&[c(-1.0, 1.0), c(0.5, 0.0), c(0.3, 0.0)]).unwrap();
        let s = sys.s_of_phi(&PhaseVector::zeros(2));
        assert!((s[(0, 0)] - c(-0.2, 1.0)).norm() < 1e-15);
        // phi = pi flips the sign
        let sys = DdeSystem::scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]).unwrap();
        let s = sys.s_of_phi(&PhaseVector::new(vec![PI]));
        assert!((s[(0, 0)] - c(-1.5, 1.0)).norm() < 1e-12);
        let sys = DdeSystem::scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]).unwrap();
        let s = sys.s_of_phi(&PhaseVector::new(vec![PI]));
        assert!((s[(0, 0)] - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_canonicalization() {
        assert!((canonical_phase(-PI) - PI).abs() < 1e-15);
        assert_eq!(canonical_phase(0.0), 0.0);
        assert!(canonical_phase(2.0 * PI) < 1e-15);
        assert!((canonical_phase(5.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn json_schema_round_trip_and_rejections() {
        let text = r#"{"n": 1, "m": 2, "A": [[[[-1.0, 1.0]]], [[[0.5, 0.0]]], [[[0.3, 0.0]]]]}"#;
        let sys = DdeSystem::from_json_str(text).unwrap();
        assert_eq!(sys.delay_count(), 2);
        // extra matrix beyond m+1 rejected
        let extra = r#"{"n": 1, "m": 1, "A": [[[[-1.0, 0.0]]], [[[0.5, 0.0]]], [[[0.1, 0.0]]]]}"#;
        assert!(matches!(
            DdeSystem::from_json_str(extra),
            Err(ModelError::MatrixCountMismatch { .. })
        ));
        // bare reals accepted
        let bare = r#"{"n": 1, "m": 1, "A": [[[-1.0]], [[0.5]]]}"#;
        let sys = DdeSystem::from_json_str(bare).unwrap();
        assert_eq!(sys.a0()[(0, 0)], c(-1.0, 0.0));
    }

    #[test]
    fn delay_vector_validation() {
        assert!(DelayVector::new(vec![0.0, 1.5]).is_ok());
        assert!(DelayVector::new(vec![-0.1]).is_err());
        assert!(DelayVector::new(vec![f64::NAN]).is_err());
    }
}
