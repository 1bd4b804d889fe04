//! Absolute-stability and absolute-hyperbolicity certificates.
//!
//! The default certificate checks nonsingularity of S(0) and maximizes the
//! spectral abscissa of S(Phi) over the phase torus (a coarse grid scan
//! followed by derivative-free local refinement), classifying the critical
//! eigenvalue by its imaginary part. Resonance witnesses (purely imaginary
//! eigenvalues at nonzero frequency) are polished by a two-variable Newton
//! iteration on det(i*omega*I - S(Phi)) = 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::atomic::{AtomicBool, Ordering};
use thiserror::Error;

use crate::linalg::{
    determinant, eigenvalues, solve_matrix, spectral_radius, CMatrix, LinalgError,
};
use crate::model::{
    Certificate, ConditionId, ConditionRecord, DdeSystem, PhaseVector, Verdict, Witness,
};

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("operation requires a scalar system (n = 1), got n = {0}")]
    NotScalar(usize),
    #[error("operation requires a single delay (m = 1), got m = {0}")]
    NotOneDelay(usize),
    #[error("A0 must be Hurwitz for the one-delay spectral-radius path")]
    A0NotHurwitz,
    #[error("i*omega is an eigenvalue of A0: resolvent is singular at omega = {0}")]
    SingularResolvent(f64),
}

/// Discretization of the compact torus condition: coarse grid resolution and
/// local-refinement budgets.
#[derive(Debug, Clone, Serialize)]
pub struct TorusSweepConfig {
    pub coarse_points_per_dim: usize,
    pub refine_iterations: usize,
    pub refine_restarts: usize,
    pub margin_tolerance: f64,
    pub zero_frequency_tolerance: f64,
    /// Random multistart budget used instead of the full grid when m > 3.
    pub multistart_budget: usize,
}

impl Default for TorusSweepConfig {
    fn default() -> Self {
        TorusSweepConfig {
            coarse_points_per_dim: 64,
            refine_iterations: 200,
            refine_restarts: 8,
            margin_tolerance: 1e-9,
            zero_frequency_tolerance: 1e-8,
            multistart_budget: 4096,
        }
    }
}

/// Discretization of the one-delay frequency condition (C).
#[derive(Debug, Clone, Serialize)]
pub struct OmegaSweepConfig {
    pub omega_bound_slack: f64,
    pub samples: usize,
    pub refine: bool,
}

impl Default for OmegaSweepConfig {
    fn default() -> Self {
        OmegaSweepConfig {
            omega_bound_slack: 1.0,
            samples: 4096,
            refine: true,
        }
    }
}

/// (A1.1): A0 is Hurwitz. Margin is -spectral_abscissa(A0).
pub fn check_instantaneous_stability(
    sys: &DdeSystem,
    tol: f64,
) -> Result<ConditionRecord, CriteriaError> {
    let alpha = crate::linalg::spectral_abscissa(sys.a0())?;
    Ok(ConditionRecord {
        condition: ConditionId::A11,
        passed: alpha < -tol,
        margin: -alpha,
    })
}

/// (A1.2): S(0) is nonsingular. Margin is the smallest |eigenvalue| of S(0).
pub fn check_s0_nonsingular(sys: &DdeSystem, tol: f64) -> Result<ConditionRecord, CriteriaError> {
    let s0 = sys.s_of_phi(&PhaseVector::zeros(sys.delay_count()));
    let eigs = eigenvalues(&s0)?;
    let min_abs = eigs.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let det = determinant(&s0).norm();
    Ok(ConditionRecord {
        condition: ConditionId::A12,
        passed: min_abs > tol && det > tol,
        margin: min_abs,
    })
}

/// Result of maximizing the spectral abscissa of S(Phi) over the torus.
#[derive(Debug, Clone, Serialize)]
pub struct TorusSweep {
    pub value: f64,
    pub argmax: PhaseVector,
    pub critical_eigenvalue: Complex64,
    pub grid_spacing: f64,
    pub converged: bool,
}

/// Spectral abscissa of S(Phi) and the eigenvalue achieving it.
fn abscissa_at(sys: &DdeSystem, phis: &[f64]) -> Result<(f64, Complex64), LinalgError> {
    if sys.dim() == 1 {
        let mut s = sys.a0()[(0, 0)];
        for (k, &p) in phis.iter().enumerate() {
            s += sys.delayed(k + 1)[(0, 0)] * Complex64::from_polar(1.0, p);
        }
        return Ok((s.re, s));
    }
    let s = sys.s_of_phi(&PhaseVector::new(phis.to_vec()));
    let eigs = eigenvalues(&s)?;
    let mut best = eigs.values[0];
    for &v in &eigs.values[1..] {
        if v.re > best.re {
            best = v;
        }
    }
    Ok((best.re, best))
}

/// All eigenvalues of S(Phi).
fn spectrum_at(sys: &DdeSystem, phis: &[f64]) -> Result<Vec<Complex64>, LinalgError> {
    if sys.dim() == 1 {
        let mut s = sys.a0()[(0, 0)];
        for (k, &p) in phis.iter().enumerate() {
            s += sys.delayed(k + 1)[(0, 0)] * Complex64::from_polar(1.0, p);
        }
        return Ok(vec![s]);
    }
    let s = sys.s_of_phi(&PhaseVector::new(phis.to_vec()));
    Ok(eigenvalues(&s)?.values)
}

/// Coarse sample points on the torus: full grid for m <= 3, deterministic
/// random multistart otherwise.
fn torus_samples(cfg: &TorusSweepConfig, m: usize) -> (Vec<Vec<f64>>, f64) {
    if m <= 3 {
        let g = cfg.coarse_points_per_dim.max(2);
        let total = g.pow(m as u32);
        let step = TAU / g as f64;
        let pts = (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; m];
                for slot in p.iter_mut() {
                    *slot = (idx % g) as f64 * step;
                    idx /= g;
                }
                p
            })
            .collect();
        (pts, step)
    } else {
        // fixed-seed LCG so certificates are reproducible
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pts = (0..cfg.multistart_budget.max(16))
            .map(|_| (0..m).map(|_| next() * TAU).collect())
            .collect();
        (pts, TAU / (cfg.multistart_budget as f64).powf(1.0 / m as f64))
    }
}

/// Derivative-free compass search maximizing `f` on the torus (wraparound is
/// automatic: S(Phi) is 2pi-periodic per coordinate).
fn compass_maximize<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step0: f64,
    iterations: usize,
) -> (Vec<f64>, f64, bool) {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut step = step0;
    for _ in 0..iterations {
        if step < 1e-13 {
            break;
        }
        let mut best_move: Option<(usize, f64, f64)> = None;
        for d in 0..x.len() {
            for s in [step, -step] {
                let mut y = x.clone();
                y[d] += s;
                let fy = f(&y);
                if fy > fx && best_move.map_or(true, |(_, _, fb)| fy > fb) {
                    best_move = Some((d, s, fy));
                }
            }
        }
        match best_move {
            Some((d, s, fy)) => {
                x[d] += s;
                fx = fy;
            }
            None => step *= 0.5,
        }
    }
    (x, fx, step < 1e-9)
}

/// Approximate max over the torus of the spectral abscissa of S(Phi):
/// coarse scan plus compass refinement from the best cells.
pub fn max_abscissa_over_torus(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<TorusSweep, CriteriaError> {
    let m = sys.delay_count();
    let (points, spacing) = torus_samples(cfg, m);
    let failed = AtomicBool::new(false);
    let coarse: Vec<f64> = points
        .par_iter()
        .map(|p| match abscissa_at(sys, p) {
            Ok((v, _)) => v,
            Err(_) => {
                failed.store(true, Ordering::Relaxed);
                f64::NEG_INFINITY
            }
        })
        .collect();
    if failed.load(Ordering::Relaxed) {
        return Err(LinalgError::NonConvergence(sys.dim()).into());
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| coarse[b].partial_cmp(&coarse[a]).unwrap());
    let seeds: Vec<usize> = order.into_iter().take(cfg.refine_restarts.max(1)).collect();

    let eval = |p: &[f64]| -> f64 {
        match abscissa_at(sys, p) {
            Ok((v, _)) => v,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let refined: Vec<(Vec<f64>, f64, bool)> = seeds
        .par_iter()
        .map(|&i| compass_maximize(&eval, &points[i], spacing, cfg.refine_iterations))
        .collect();
    let mut best = &refined[0];
    for r in &refined[1..] {
        if r.1 > best.1 {
            best = r;
        }
    }
    let (value, critical) = abscissa_at(sys, &best.0)?;
    Ok(TorusSweep {
        value,
        argmax: PhaseVector::new(best.0.clone()),
        critical_eigenvalue: critical,
        grid_spacing: spacing,
        converged: best.2,
    })
}

/// det(i*omega*I - S(Phi)).
fn axis_determinant(sys: &DdeSystem, omega: f64, phis: &[f64]) -> Complex64 {
    let s = sys.s_of_phi(&PhaseVector::new(phis.to_vec()));
    let m = CMatrix::identity(sys.dim(), sys.dim()) * Complex64::new(0.0, omega) - s;
    determinant(&m)
}

pub(crate) struct ResonanceWitness {
    pub omega: f64,
    pub phis: Vec<f64>,
    pub residual: f64,
}

pub(crate) struct ResonanceScan {
    /// Smallest refined |Re(lambda)| over eigenvalues with |Im| above the
    /// zero-frequency tolerance; 0 when a witness was confirmed.
    pub min_axis_distance: f64,
    pub witness: Option<ResonanceWitness>,
}

/// Two-variable Newton on det(i*omega*I - S(Phi)) = 0, varying omega and one
/// phase coordinate. Returns the refined crossing when the residual drops
/// below 1e-10 * scale.
fn newton_axis_crossing(
    sys: &DdeSystem,
    omega0: f64,
    phis0: &[f64],
    vary: usize,
) -> Option<(f64, Vec<f64>, f64)> {
    let scale = sys.norm_scale();
    let mut w = omega0;
    let mut p = phis0.to_vec();
    let eval = |w: f64, p: &[f64]| axis_determinant(sys, w, p);
    let mut f0 = eval(w, &p);
    for _ in 0..80 {
        if f0.norm() < 1e-14 * scale {
            break;
        }
        let hw = 1e-6 * (1.0 + w.abs());
        let hp = 1e-6;
        let mut pp = p.clone();
        pp[vary] += hp;
        let mut pm = p.clone();
        pm[vary] -= hp;
        let dfw = (eval(w + hw, &p) - eval(w - hw, &p)) / (2.0 * hw);
        let dfp = (eval(w, &pp) - eval(w, &pm)) / (2.0 * hp);
        let det2 = dfw.re * dfp.im - dfw.im * dfp.re;
        if det2.abs() < 1e-300 {
            return None;
        }
        let dw = (-f0.re * dfp.im + f0.im * dfp.re) / det2;
        let dt = (-dfw.re * f0.im + dfw.im * f0.re) / det2;
        let dw = dw.clamp(-0.5 * (1.0 + w.abs()), 0.5 * (1.0 + w.abs()));
        let dt = dt.clamp(-0.5, 0.5);
        // damped update
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let wn = w + lam * dw;
            let mut pn = p.clone();
            pn[vary] += lam * dt;
            let fn_ = eval(wn, &pn);
            if fn_.norm() < f0.norm() {
                w = wn;
                p = pn;
                f0 = fn_;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = f0.norm();
    if residual < 1e-10 * scale {
        Some((w, p, residual))
    } else {
        None
    }
}

/// Sweep the torus for eigenvalues of S(Phi) near the imaginary axis away
/// from the origin, refine the closest candidates, and try to confirm an
/// exact axis crossing (a resonance).
pub(crate) fn scan_for_resonance(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<ResonanceScan, CriteriaError> {
    let m = sys.delay_count();
    let zero_tol = cfg.zero_frequency_tolerance;
    let scale = sys.norm_scale();
    let (points, spacing) = torus_samples(cfg, m);
    let failed = AtomicBool::new(false);
    // score = min |Re(lambda)| over eigenvalues with |Im| > zero_tol
    let score_of = |phis: &[f64]| -> f64 {
        match spectrum_at(sys, phis) {
            Ok(eigs) => eigs
                .iter()
                .filter(|z| z.im.abs() > zero_tol)
                .map(|z| z.re.abs())
                .fold(f64::INFINITY, f64::min),
            Err(_) => {
                failed.store(true, Ordering::Relaxed);
                f64::INFINITY
            }
        }
    };
    let coarse: Vec<f64> = points.par_iter().map(|p| score_of(p)).collect();
    if failed.load(Ordering::Relaxed) {
        return Err(LinalgError::NonConvergence(sys.dim()).into());
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| coarse[a].partial_cmp(&coarse[b]).unwrap());
    let seeds: Vec<usize> = order.into_iter().take(cfg.refine_restarts.max(1)).collect();

    let neg_score = |p: &[f64]| -score_of(p);
    let refined: Vec<(Vec<f64>, f64, bool)> = seeds
        .par_iter()
        .map(|&i| compass_maximize(&neg_score, &points[i], spacing, cfg.refine_iterations))
        .collect();

    let mut min_axis_distance = f64::INFINITY;
    let mut witness: Option<ResonanceWitness> = None;
    for (phis, neg, _) in &refined {
        let dist = -neg;
        if dist < min_axis_distance {
            min_axis_distance = dist;
        }
        if !dist.is_finite() {
            continue;
        }
        // keep the best witness across seeds (smallest confirmed residual)
        let better = |cand: &ResonanceWitness, cur: &Option<ResonanceWitness>| -> bool {
            cur.as_ref().map_or(true, |w| cand.residual < w.residual)
        };
        // frequency seed: the qualifying eigenvalue closest to the axis
        let eigs = spectrum_at(sys, phis)?;
        let seed = eigs
            .iter()
            .filter(|z| z.im.abs() > zero_tol)
            .min_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).unwrap());
        let Some(&seed) = seed else { continue };
        let mut confirmed = false;
        for vary in 0..m {
            if let Some((w, p, residual)) = newton_axis_crossing(sys, seed.im, phis, vary) {
                if w.abs() > zero_tol {
                    let cand = ResonanceWitness {
                        omega: w,
                        phis: p,
                        residual,
                    };
                    if better(&cand, &witness) {
                        witness = Some(cand);
                    }
                    confirmed = true;
                    break;
                }
            }
        }
        // fallback: the compass point itself is already essentially on axis
        if !confirmed && dist < 1e-7 && seed.im.abs() > zero_tol {
            let residual = axis_determinant(sys, seed.im, phis).norm();
            if residual < 1e-6 * scale {
                let cand = ResonanceWitness {
                    omega: seed.im,
                    phis: phis.clone(),
                    residual,
                };
                if better(&cand, &witness) {
                    witness = Some(cand);
                }
            }
        }
    }
    if witness.is_some() {
        min_axis_distance = 0.0;
    }
    Ok(ResonanceScan {
        min_axis_distance,
        witness,
    })
}

fn not_certificate(
    margin: f64,
    witness: Witness,
    trace: Vec<ConditionRecord>,
) -> Certificate {
    Certificate {
        verdict: Verdict::CertifiedNot,
        margin,
        witness: Some(witness),
        condition_trace: trace,
    }
}

/// Absolute stability via nonsingular S(0) + almost-Hurwitz S(Phi).
pub fn certify_absolute_stability(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<Certificate, CriteriaError> {
    let tol = cfg.margin_tolerance;
    let m = sys.delay_count();
    let a11 = check_instantaneous_stability(sys, tol)?;
    let a12 = check_s0_nonsingular(sys, tol)?;
    let mut trace = vec![a11.clone(), a12.clone()];

    if !a12.passed {
        let w = Witness {
            omega: 0.0,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A12,
        };
        return Ok(not_certificate(a12.margin - tol, w, trace));
    }
    if a11.margin < -tol {
        // A0 clearly not Hurwitz: strongly unstable for large delays.
        let eigs = eigenvalues(sys.a0())?;
        let worst = eigs
            .values
            .iter()
            .cloned()
            .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
            .unwrap();
        let w = Witness {
            omega: worst.im,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A11,
        };
        return Ok(not_certificate(a11.margin, w, trace));
    }

    let sweep = max_abscissa_over_torus(sys, cfg)?;
    trace.push(ConditionRecord {
        condition: ConditionId::A13,
        passed: sweep.value < tol,
        margin: -sweep.value,
    });
    if sweep.value < -tol {
        return Ok(Certificate {
            verdict: Verdict::CertifiedStable,
            margin: a12.margin.min(-sweep.value),
            witness: None,
            condition_trace: trace,
        });
    }

    // The abscissa reaches the axis (or crosses it): resolve the allowed
    // zero-eigenvalue exception by hunting for a nonzero-frequency crossing.
    let scan = scan_for_resonance(sys, cfg)?;
    if let Some(w) = scan.witness {
        let wit = Witness {
            omega: w.omega,
            phi: PhaseVector::new(w.phis),
            condition: ConditionId::A13,
        };
        return Ok(not_certificate(-sweep.value.max(tol), wit, trace));
    }
    if sweep.value <= tol {
        // touching only through a zero eigenvalue; S(0) already nonsingular
        return Ok(Certificate {
            verdict: Verdict::CertifiedStable,
            margin: a12.margin.min(tol.max(-sweep.value)),
            witness: None,
            condition_trace: trace,
        });
    }
    Ok(Certificate {
        verdict: Verdict::Inconclusive,
        margin: -sweep.value,
        witness: None,
        condition_trace: trace,
    })
}

/// Absolute stability via the three-condition list: instantaneous stability,
/// nonsingular S(0), and no resonance on the torus.
pub fn certify_absolute_stability_conditions(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<Certificate, CriteriaError> {
    let tol = cfg.margin_tolerance;
    let m = sys.delay_count();
    let a11 = check_instantaneous_stability(sys, tol)?;
    let a12 = check_s0_nonsingular(sys, tol)?;
    let mut trace = vec![a11.clone(), a12.clone()];
    if !a12.passed {
        let w = Witness {
            omega: 0.0,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A12,
        };
        return Ok(not_certificate(a12.margin - tol, w, trace));
    }
    if a11.margin < -tol {
        let eigs = eigenvalues(sys.a0())?;
        let worst = eigs
            .values
            .iter()
            .cloned()
            .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
            .unwrap();
        let w = Witness {
            omega: worst.im,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A11,
        };
        return Ok(not_certificate(a11.margin, w, trace));
    }
    if !a11.passed {
        return Ok(Certificate {
            verdict: Verdict::Inconclusive,
            margin: a11.margin,
            witness: None,
            condition_trace: trace,
        });
    }
    let scan = scan_for_resonance(sys, cfg)?;
    trace.push(ConditionRecord {
        condition: ConditionId::A13,
        passed: scan.witness.is_none() && scan.min_axis_distance > tol,
        margin: scan.min_axis_distance,
    });
    if let Some(w) = scan.witness {
        let wit = Witness {
            omega: w.omega,
            phi: PhaseVector::new(w.phis),
            condition: ConditionId::A13,
        };
        return Ok(not_certificate(-tol, wit, trace));
    }
    if scan.min_axis_distance > tol {
        return Ok(Certificate {
            verdict: Verdict::CertifiedStable,
            margin: a11.margin.min(a12.margin).min(scan.min_axis_distance),
            witness: None,
            condition_trace: trace,
        });
    }
    Ok(Certificate {
        verdict: Verdict::Inconclusive,
        margin: scan.min_axis_distance,
        witness: None,
        condition_trace: trace,
    })
}

/// Absolute hyperbolicity: nonsingular S(0) and no resonance. A0 need not be
/// Hurwitz; strongly unstable systems can still be hyperbolic.
pub fn certify_absolute_hyperbolicity(
    sys: &DdeSystem,
    cfg: &TorusSweepConfig,
) -> Result<Certificate, CriteriaError> {
    let tol = cfg.margin_tolerance;
    let m = sys.delay_count();
    let a12 = check_s0_nonsingular(sys, tol)?;
    let mut trace = vec![a12.clone()];
    if !a12.passed {
        let w = Witness {
            omega: 0.0,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A12,
        };
        return Ok(not_certificate(a12.margin - tol, w, trace));
    }
    let scan = scan_for_resonance(sys, cfg)?;
    trace.push(ConditionRecord {
        condition: ConditionId::A13,
        passed: scan.witness.is_none() && scan.min_axis_distance > tol,
        margin: scan.min_axis_distance,
    });
    if let Some(w) = scan.witness {
        let wit = Witness {
            omega: w.omega,
            phi: PhaseVector::new(w.phis),
            condition: ConditionId::A13,
        };
        return Ok(not_certificate(-tol, wit, trace));
    }
    if scan.min_axis_distance > tol {
        return Ok(Certificate {
            verdict: Verdict::CertifiedStable,
            margin: a12.margin.min(scan.min_axis_distance),
            witness: None,
            condition_trace: trace,
        });
    }
    Ok(Certificate {
        verdict: Verdict::Inconclusive,
        margin: scan.min_axis_distance,
        witness: None,
        condition_trace: trace,
    })
}

/// Exact closed-form verdict for scalar systems (n = 1, any m):
/// Re(a0) + sum |ak| < 0 when Im(a0) != 0;
/// a0 + sum |ak| <= 0 and sum_k a_k != 0 when Im(a0) = 0.
pub fn certify_scalar(sys: &DdeSystem) -> Result<Certificate, CriteriaError> {
    if sys.dim() != 1 {
        return Err(CriteriaError::NotScalar(sys.dim()));
    }
    let tol = 1e-12;
    let m = sys.delay_count();
    let a0 = sys.a0()[(0, 0)];
    let coeffs: Vec<Complex64> = (1..=m).map(|k| sys.delayed(k)[(0, 0)]).collect();
    let sum_abs: f64 = coeffs.iter().map(|a| a.norm()).sum();
    let full_sum: Complex64 = a0 + coeffs.iter().sum::<Complex64>();
    let slack = a0.re + sum_abs;

    let trace = vec![
        ConditionRecord {
            condition: ConditionId::A12,
            passed: full_sum.norm() > tol,
            margin: full_sum.norm(),
        },
        ConditionRecord {
            condition: ConditionId::A13,
            passed: slack < 0.0 || (a0.im == 0.0 && slack <= 0.0),
            margin: -slack,
        },
    ];

    // Witness construction on the closed-form path: a torus point where
    // Re(a0 + sum ak e^{i phi_k}) = 0 with the phases aligned.
    let crossing_witness = || -> Option<Witness> {
        if sum_abs == 0.0 || a0.re.abs() > sum_abs {
            return None;
        }
        let t = (-a0.re / sum_abs).acos();
        let omega_plus = a0.im + t.sin() * sum_abs;
        let omega_minus = a0.im - t.sin() * sum_abs;
        let (t, omega) = if omega_plus.abs() >= omega_minus.abs() {
            (t, omega_plus)
        } else {
            (-t, omega_minus)
        };
        let phis: Vec<f64> = coeffs.iter().map(|a| -a.arg() + t).collect();
        Some(Witness {
            omega,
            phi: PhaseVector::new(phis),
            condition: ConditionId::A13,
        })
    };

    if a0.im != 0.0 {
        if slack < -tol {
            return Ok(Certificate {
                verdict: Verdict::CertifiedStable,
                margin: -slack,
                witness: None,
                condition_trace: trace,
            });
        }
        if slack > tol {
            let witness = crossing_witness().unwrap_or(Witness {
                omega: a0.im,
                phi: PhaseVector::zeros(m),
                condition: ConditionId::A11,
            });
            return Ok(not_certificate(-slack, witness, trace));
        }
        return Ok(Certificate {
            verdict: Verdict::Inconclusive,
            margin: -slack,
            witness: None,
            condition_trace: trace,
        });
    }

    // Im(a0) = 0: non-strict inequality, plus the zero-root exclusion.
    if slack > tol {
        let witness = crossing_witness().unwrap_or(Witness {
            omega: 0.0,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A11,
        });
        return Ok(not_certificate(-slack, witness, trace));
    }
    if slack <= 0.0 {
        if full_sum.norm() > tol {
            return Ok(Certificate {
                verdict: Verdict::CertifiedStable,
                margin: if slack < -tol { -slack } else { full_sum.norm() },
                witness: None,
                condition_trace: trace,
            });
        }
        let w = Witness {
            omega: 0.0,
            phi: PhaseVector::zeros(m),
            condition: ConditionId::A12,
        };
        return Ok(not_certificate(full_sum.norm() - tol, w, trace));
    }
    Ok(Certificate {
        verdict: Verdict::Inconclusive,
        margin: -slack,
        witness: None,
        condition_trace: trace,
    })
}

/// Report of the one-delay spectral-radius criterion (condition (C)).
#[derive(Debug, Clone, Serialize)]
pub struct OneDelayRadiusReport {
    pub pass: bool,
    pub worst_omega: f64,
    pub worst_rho: f64,
    pub rho_at_zero: f64,
}

/// rho((i*omega*I - A0)^{-1} A1).
fn resolvent_radius(sys: &DdeSystem, omega: f64) -> Result<f64, CriteriaError> {
    let n = sys.dim();
    let m = CMatrix::identity(n, n) * Complex64::new(0.0, omega) - sys.a0();
    let x = solve_matrix(&m, sys.delayed(1))
        .map_err(|_| CriteriaError::SingularResolvent(omega))?;
    Ok(spectral_radius(&x)?)
}

/// One-delay criterion: rho((i*omega*I - A0)^{-1} A1) < 1 for all omega != 0.
/// Sweeps |omega| <= ||A0||_F + ||A1||_F + slack (beyond which rho < 1 is
/// guaranteed) with local refinement of the maxima; the omega = 0 peak is
/// reported separately since it may reach 1 when S(0) is nonsingular.
pub fn check_one_delay_radius(
    sys: &DdeSystem,
    cfg: &OmegaSweepConfig,
) -> Result<OneDelayRadiusReport, CriteriaError> {
    if sys.delay_count() != 1 {
        return Err(CriteriaError::NotOneDelay(sys.delay_count()));
    }
    if crate::linalg::spectral_abscissa(sys.a0())? >= 0.0 {
        return Err(CriteriaError::A0NotHurwitz);
    }
    let tol = 1e-9;
    let zero_tol = 1e-8;
    let bound = sys.frequency_bound(cfg.omega_bound_slack.max(0.0));
    let samples = cfg.samples.max(16);
    let grid: Vec<f64> = (0..=samples)
        .map(|i| -bound + 2.0 * bound * i as f64 / samples as f64)
        .collect();
    let rho: Vec<f64> = grid
        .par_iter()
        .map(|&w| resolvent_radius(sys, w).unwrap_or(f64::INFINITY))
        .collect();

    // local maxima (plus endpoints), each refined by 1-D compass search
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid.len() {
        let left = if i == 0 { f64::NEG_INFINITY } else { rho[i - 1] };
        let right = if i + 1 == grid.len() {
            f64::NEG_INFINITY
        } else {
            rho[i + 1]
        };
        if rho[i] >= left && rho[i] >= right {
            let (w, r) = if cfg.refine {
                let eval = |x: &[f64]| resolvent_radius(sys, x[0]).unwrap_or(f64::INFINITY);
                let (x, fx, _) = compass_maximize(&eval, &[grid[i]], 2.0 * bound / samples as f64, 200);
                (x[0], fx)
            } else {
                (grid[i], rho[i])
            };
            peaks.push((w, r));
        }
    }
    let rho_at_zero = resolvent_radius(sys, 0.0).unwrap_or(f64::INFINITY);

    let mut pass = true;
    let mut worst_omega = 0.0f64;
    let mut worst_rho = rho_at_zero;
    for &(w, r) in &peaks {
        if w.abs() > zero_tol {
            if r > worst_rho || worst_omega.abs() <= zero_tol {
                worst_omega = w;
                worst_rho = r;
            }
            if r >= 1.0 - tol {
                pass = false;
            }
        } else if r > 1.0 + tol {
            // a peak above 1 at the origin spills onto omega != 0
            pass = false;
            worst_omega = w;
            worst_rho = r;
        }
    }
    Ok(OneDelayRadiusReport {
        pass,
        worst_omega,
        worst_rho,
        rho_at_zero,
    })
}

/// Multipliers of the extended singular map (i*omega*I - A0)^{-1} A1 e^{i*phi}.
pub fn singular_map_multipliers(
    sys: &DdeSystem,
    omega: f64,
    phi: f64,
) -> Result<Vec<Complex64>, CriteriaError> {
    if sys.delay_count() != 1 {
        return Err(CriteriaError::NotOneDelay(sys.delay_count()));
    }
    let n = sys.dim();
    let m = CMatrix::identity(n, n) * Complex64::new(0.0, omega) - sys.a0();
    let rhs = sys.delayed(1) * Complex64::from_polar(1.0, phi);
    let x = solve_matrix(&m, &rhs).map_err(|_| CriteriaError::SingularResolvent(omega))?;
    Ok(eigenvalues(&x)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(coeffs: &[Complex64]) -> DdeSystem {
        DdeSystem::scalar(coeffs).unwrap()
    }

    fn cfg() -> TorusSweepConfig {
        TorusSweepConfig::default()
    }

    #[test]
    fn instantaneous_stability_examples() {
        let tol = 1e-9;
        let r = check_instantaneous_stability(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), tol).unwrap();
        assert!(r.passed);
        assert!((r.margin - 1.0).abs() < 1e-12);
        let r = check_instantaneous_stability(&scalar(&[c(0.0, 0.0), c(0.5, 0.0)]), tol).unwrap();
        assert!(!r.passed);
        let a0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        );
        let a1 = CMatrix::identity(2, 2) * c(0.1, 0.0);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let r = check_instantaneous_stability(&sys, tol).unwrap();
        assert!(!r.passed);
        assert!((r.margin + 2.0).abs() < 1e-12);
    }

    #[test]
    fn s0_nonsingular_examples() {
        let tol = 1e-9;
        let r = check_s0_nonsingular(&scalar(&[c(-1.0, 0.0), c(1.0, 0.0)]), tol).unwrap();
        assert!(!r.passed);
        let r = check_s0_nonsingular(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), tol).unwrap();
        assert!(r.passed);
        let a0 = CMatrix::identity(2, 2) * c(-2.0, 0.0);
        let a1 = CMatrix::identity(2, 2);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let r = check_s0_nonsingular(&sys, tol).unwrap();
        assert!(r.passed);
        assert!((r.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_max_scalar_one_delay() {
        // max Re(a0 + a1 e^{i phi}) = Re a0 + |a1| at phi = -arg a1
        let sweep = max_abscissa_over_torus(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), &cfg()).unwrap();
        assert!((sweep.value + 0.5).abs() < 1e-7, "value {}", sweep.value);
        assert!(sweep.argmax.phases()[0].min(TAU - sweep.argmax.phases()[0]) < 1e-3);

        let sweep = max_abscissa_over_torus(&scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]), &cfg()).unwrap();
        assert!((sweep.value - 0.5).abs() < 1e-7);
        assert!((sweep.argmax.phases()[0] - PI).abs() < 1e-3);
    }

    #[test]
    fn torus_max_matrix() {
        // A0 = -2I, A1 = I: eigenvalues -2 + e^{i phi}, max abscissa -1 at 0
        let a0 = CMatrix::identity(2, 2) * c(-2.0, 0.0);
        let a1 = CMatrix::identity(2, 2);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let sweep = max_abscissa_over_torus(&sys, &cfg()).unwrap();
        assert!((sweep.value + 1.0).abs() < 1e-7);
    }

    #[test]
    fn certify_figure_parameters() {
        let cert = certify_absolute_stability(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), &cfg()).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedStable);

        let cert = certify_absolute_stability(&scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]), &cfg()).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedNot);
        let w = cert.witness.expect("witness required for CertifiedNot");
        assert!(
            (w.omega.abs() - 1.25f64.sqrt()).abs() < 1e-6,
            "omega {}",
            w.omega
        );

        let cert = certify_absolute_stability(
            &scalar(&[c(-1.0, 1.0), c(0.5, 0.0), c(0.3, 0.0)]),
            &cfg(),
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedStable);
    }

    #[test]
    fn hyperbolicity_examples() {
        let cert =
            certify_absolute_hyperbolicity(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), &cfg()).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedStable);

        let a0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        );
        let a1 = CMatrix::identity(2, 2) * c(0.1, 0.0);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let cert = certify_absolute_hyperbolicity(&sys, &cfg()).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedStable);

        let cert =
            certify_absolute_hyperbolicity(&scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]), &cfg()).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedNot);
        let w = cert.witness.unwrap();
        assert!((w.omega.abs() - 1.25f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn scalar_closed_form_examples() {
        let cert = certify_scalar(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0), c(0.3, 0.0)])).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedStable);
        assert!((cert.margin - 0.2).abs() < 1e-12);

        let cert = certify_scalar(&scalar(&[c(-1.0, 0.0), c(-0.7, 0.0), c(0.5, 0.1)])).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedNot);
        let expected_slack = -1.0 + 0.7 + 0.26f64.sqrt();
        assert!((cert.margin + expected_slack).abs() < 1e-12);

        let cert = certify_scalar(&scalar(&[c(-1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedNot);

        assert!(certify_scalar(&DdeSystem::new(vec![
            CMatrix::identity(2, 2) * c(-1.0, 0.0),
            CMatrix::identity(2, 2)
        ])
        .unwrap())
        .is_err());
    }

    #[test]
    fn one_delay_radius_examples() {
        let r = check_one_delay_radius(&scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]), &OmegaSweepConfig::default())
            .unwrap();
        assert!(r.pass);
        assert!((r.worst_rho - 0.5).abs() < 1e-6, "rho {}", r.worst_rho);
        assert!((r.worst_omega - 1.0).abs() < 1e-4, "omega {}", r.worst_omega);

        let r = check_one_delay_radius(&scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]), &OmegaSweepConfig::default())
            .unwrap();
        assert!(!r.pass);
        assert!((r.rho_at_zero - 1.5).abs() < 1e-9);

        let r = check_one_delay_radius(&scalar(&[c(-1.0, 0.0), c(1.0, 0.0)]), &OmegaSweepConfig::default())
            .unwrap();
        assert!(r.pass, "rho < 1 for omega != 0, touching only at 0");
        assert!((r.rho_at_zero - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_map_multiplier_examples() {
        let sys = scalar(&[c(-1.0, 0.0), c(0.5, 0.0)]);
        let mu = singular_map_multipliers(&sys, 0.0, 0.0).unwrap();
        assert!((mu[0] - c(0.5, 0.0)).norm() < 1e-14);

        let sys = scalar(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        let mu = singular_map_multipliers(&sys, 0.0, PI).unwrap();
        assert!((mu[0] - c(-1.0, 0.0)).norm() < 1e-12);

        let a0 = CMatrix::identity(2, 2) * c(-2.0, 0.0);
        let a1 = CMatrix::identity(2, 2);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let mu = singular_map_multipliers(&sys, 2.0, 0.0).unwrap();
        for v in mu {
            assert!((v.norm() - 1.0 / 8.0f64.sqrt()).abs() < 1e-12);
        }
    }
}
