//! Resonant delay constructions: given a resonance witness
//! (omega0 != 0, Phi) with i*omega0 in sigma(S(Phi)), every delay vector
//! tau_k = (2 pi n_k - phi_k) / omega0, n_k integer, makes i*omega0 a
//! characteristic root, so the instability reappears along a countable family
//! of delays — including hierarchically spaced ones tau_k = nu_k eps^{-k}.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::charroots::quasipolynomial;
use crate::criteria::{scan_for_resonance, CriteriaError, TorusSweepConfig};
use crate::model::{canonical_phase, DdeSystem, DelayVector, PhaseVector};

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("resonant delays require omega0 != 0")]
    ZeroFrequency,
    #[error("epsilon target must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("epsilon condition violated: 2*pi*eps/|omega0| = {0} must be < 1")]
    EpsilonTooLarge(f64),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// One resonant delay vector with its integer indices and, when a system is
/// available, the verified residual |Q(i omega0)|.
#[derive(Debug, Clone, Serialize)]
pub struct DelaySet {
    pub indices: Vec<i64>,
    pub taus: DelayVector,
    pub residual: Option<f64>,
}

/// Hierarchically spaced resonant delays tau_k = nu_k eps^{-k} with
/// nu_k in [1, 1 + eps^{k-1}).
#[derive(Debug, Clone, Serialize)]
pub struct HierarchicalDelays {
    pub epsilon: f64,
    pub nus: Vec<f64>,
    pub nks: Vec<i64>,
    pub taus: DelayVector,
    pub residual: Option<f64>,
}

/// A resonance witness together with delay families on which it reappears.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceFamily {
    pub omega0: f64,
    pub phi: PhaseVector,
    pub delay_sets: Vec<DelaySet>,
    pub hierarchical: Option<HierarchicalDelays>,
}

/// Reduce to positive frequency: resonance at (omega0, phi) is the same
/// delay condition as (|omega0|, -phi) when omega0 < 0.
fn positive_form(omega0: f64, phi: &PhaseVector) -> (f64, Vec<f64>) {
    if omega0 >= 0.0 {
        (omega0, phi.phases().to_vec())
    } else {
        (
            -omega0,
            phi.phases().iter().map(|&p| canonical_phase(-p)).collect(),
        )
    }
}

/// All delay vectors tau_k = (2 pi n_k - phi_k) / omega0 over the given
/// integer index ranges (inclusive), filtered to tau_k >= 0.
pub fn resonant_delays(
    omega0: f64,
    phi: &PhaseVector,
    index_ranges: &[(i64, i64)],
) -> Result<Vec<DelaySet>, ResonanceError> {
    if omega0 == 0.0 {
        return Err(ResonanceError::ZeroFrequency);
    }
    assert_eq!(
        index_ranges.len(),
        phi.len(),
        "one index range per delay required"
    );
    let (w, psis) = positive_form(omega0, phi);
    let mut combos: Vec<Vec<i64>> = vec![Vec::new()];
    for &(lo, hi) in index_ranges {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (lo..=hi).map(move |n| {
                    let mut c2 = c.clone();
                    c2.push(n);
                    c2
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for indices in combos {
        let taus: Vec<f64> = indices
            .iter()
            .zip(psis.iter())
            .map(|(&n, &psi)| (TAU * n as f64 - psi) / w)
            .collect();
        if taus.iter().all(|&t| t >= 0.0) {
            out.push(DelaySet {
                indices,
                taus: DelayVector::new(taus)?,
                residual: None,
            });
        }
    }
    Ok(out)
}

/// Hierarchically spaced resonant delays: eps = omega0/(2 pi n1 - phi_1) for
/// the smallest n1 giving eps <= epsilon_target, then per level k >= 2 the
/// smallest integer n_k = phi_k/(2 pi) + omega0 nu_k / (2 pi eps^k) with
/// nu_k >= 1; the construction guarantees nu_k < 1 + eps^{k-1} whenever
/// 2 pi eps / |omega0| < 1.
pub fn hierarchical_delays(
    omega0: f64,
    phi: &PhaseVector,
    epsilon_target: f64,
) -> Result<HierarchicalDelays, ResonanceError> {
    if omega0 == 0.0 {
        return Err(ResonanceError::ZeroFrequency);
    }
    if epsilon_target <= 0.0 {
        return Err(ResonanceError::NonPositiveEpsilon(epsilon_target));
    }
    let (w, psis) = positive_form(omega0, phi);
    let m = psis.len();

    // level 1: eps = w / (2 pi n1 - psi_1), smallest n1 with eps <= target
    let n1 = ((w / epsilon_target + psis[0]) / TAU).ceil().max(1.0) as i64;
    let eps = w / (TAU * n1 as f64 - psis[0]);
    let ratio = TAU * eps / w;
    if ratio >= 1.0 {
        return Err(ResonanceError::EpsilonTooLarge(ratio));
    }
    let mut nks = vec![n1];
    let mut nus = vec![1.0];
    let mut taus = vec![1.0 / eps];

    for k in 2..=m {
        let epsk = eps.powi(k as i32);
        let psi = psis[k - 1];
        // smallest integer n_k with nu_k = (2 pi n_k - psi) eps^k / w >= 1
        let nk = ((w / epsk + psi) / TAU).ceil() as i64;
        let nu = (TAU * nk as f64 - psi) * epsk / w;
        debug_assert!(
            nu >= 1.0 - 1e-9 && nu < 1.0 + eps.powi(k as i32 - 1) + 1e-9,
            "nu_{k} = {nu} outside [1, 1 + eps^{}]",
            k - 1
        );
        nks.push(nk);
        nus.push(nu);
        taus.push(nu / epsk);
    }
    Ok(HierarchicalDelays {
        epsilon: eps,
        nus,
        nks,
        taus: DelayVector::new(taus)?,
        residual: None,
    })
}

/// Run the torus sweep and return a confirmed nonzero-frequency resonance
/// witness (omega0, Phi), if any.
pub fn find_resonance_witness(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<Option<(f64, PhaseVector)>, ResonanceError> {
    let scan = scan_for_resonance(sys, cfg)?;
    Ok(scan
        .witness
        .map(|w| (w.omega, PhaseVector::new(w.phis))))
}

/// Expand a witness into a verified ResonanceFamily: finitely many resonant
/// delay vectors over the index ranges plus one hierarchical set, each with
/// its quasipolynomial residual at i*omega0.
pub fn build_family(
    sys: &DdeSystem,
    omega0: f64,
    phi: &PhaseVector,
    index_ranges: &[(i64, i64)],
    epsilon_target: Option<f64>,
) -> Result<ResonanceFamily, ResonanceError> {
    let lam = Complex64::new(0.0, omega0);
    let mut delay_sets = resonant_delays(omega0, phi, index_ranges)?;
    for ds in &mut delay_sets {
        ds.residual = Some(quasipolynomial(sys, &ds.taus, lam).norm());
    }
    let hierarchical = match epsilon_target {
        Some(target) => {
            let mut h = hierarchical_delays(omega0, phi, target)?;
            h.residual = Some(quasipolynomial(sys, &h.taus, lam).norm());
            Some(h)
        }
        None => None,
    };
    Ok(ResonanceFamily {
        omega0,
        phi: phi.clone(),
        delay_sets,
        hierarchical,
    })
}
