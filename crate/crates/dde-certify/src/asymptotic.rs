//! Asymptotic continuous spectrum for large delays.
//!
//! For one delay the spectrum is approximated by curves
//! z = gamma_j(omega)/tau + i*omega with gamma_j = -ln|Y_j(omega)|, where the
//! Y_j are the roots of the spectral polynomial
//! P(omega, Y) = det[i*omega*I - A0 - A1 Y]. For hierarchically spaced
//! multi-delay systems (tau_k ~ eps^{-k}), level-k branches fix the faster
//! phases and scale as gamma * eps^k + i*omega.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::linalg::{determinant, eigenvalues, frobenius_norm, poly_roots, rank, CMatrix, LinalgError};
use crate::model::DdeSystem;

#[derive(Debug, Error)]
pub enum AsymptoticError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("level {level} out of range 1..={m}")]
    LevelOutOfRange { level: usize, m: usize },
    #[error("expected {expected} fixed phases for level {level}, got {got}")]
    PhaseCountMismatch {
        level: usize,
        expected: usize,
        got: usize,
    },
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("operation requires a scalar one-delay system (n = 1, m = 1)")]
    NotScalarOneDelay,
    #[error("degenerate case: det A_m ~ 0 (|det| = {det_norm:.3e}); the hierarchical union is not assembled")]
    DegenerateLeadingDelay { det_norm: f64 },
}

/// One sampled point of an asymptotic branch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchSample {
    pub omega: f64,
    pub gamma: f64,
    pub y: Complex64,
}

/// A continuity-stitched branch gamma_j(omega) of the asymptotic spectrum at
/// a given hierarchy level (level 1 for a single delay).
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticBranch {
    pub level: usize,
    pub branch_index: usize,
    pub phases: Vec<f64>,
    pub samples: Vec<BranchSample>,
}

impl AsymptoticBranch {
    pub fn max_gamma(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.gamma)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularitySign {
    PlusInfinity,
    MinusInfinity,
}

/// An isolated frequency where a branch diverges: gamma -> +inf exactly when
/// i*omega_s is an eigenvalue of A0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingularFrequency {
    pub omega_s: f64,
    pub sign: SingularitySign,
}

/// The non-degenerate union: strongly unstable eigenvalues of A0, positive
/// parts of levels k < m, and full level-m branches.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchicalSpectrum {
    pub strongly_unstable: Vec<Complex64>,
    pub branches: Vec<AsymptoticBranch>,
}

/// Coefficients (ascending in Y) of
/// P_k(omega, phi_1..phi_{k-1}, Y) = det[i*omega*I - A0 - sum_{l<k} A_l e^{i phi_l} - A_k Y],
/// a polynomial of degree <= rank(A_k). Extracted by evaluating the
/// determinant at rank+1 roots of unity and inverting the DFT.
pub fn spectral_polynomial(
    sys: &DdeSystem,
    omega: f64,
    fixed_phases: &[f64],
    level: usize,
) -> Result<Vec<Complex64>, AsymptoticError> {
    let m = sys.delay_count();
    if level == 0 || level > m {
        return Err(AsymptoticError::LevelOutOfRange { level, m });
    }
    if fixed_phases.len() != level - 1 {
        return Err(AsymptoticError::PhaseCountMismatch {
            level,
            expected: level - 1,
            got: fixed_phases.len(),
        });
    }
    let n = sys.dim();
    let mut base = CMatrix::identity(n, n) * Complex64::new(0.0, omega) - sys.a0();
    for (l, &p) in fixed_phases.iter().enumerate() {
        base -= sys.delayed(l + 1) * Complex64::from_polar(1.0, p);
    }
    let b = sys.delayed(level);
    let deg = rank(b, 1e-10);
    let nodes = deg + 1;
    let evals: Vec<Complex64> = (0..nodes)
        .map(|q| {
            let y = Complex64::from_polar(1.0, TAU * q as f64 / nodes as f64);
            determinant(&(&base - b * y))
        })
        .collect();
    // inverse DFT at roots of unity
    let mut coeffs = vec![Complex64::new(0.0, 0.0); nodes];
    for (p, cp) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, &e) in evals.iter().enumerate() {
            let w = Complex64::from_polar(1.0, -TAU * (p * q) as f64 / nodes as f64);
            acc += e * w;
        }
        *cp = acc / nodes as f64;
    }
    Ok(coeffs)
}

/// Greedy nearest-neighbor matching of the new root set against the previous
/// one. Slot i of the result continues branch i; `None` marks a branch with
/// no matching root at this omega (root count dropped).
fn stitch(prev: &[Complex64], next: &[Complex64]) -> Vec<Option<Complex64>> {
    let width = prev.len().max(next.len());
    let k = prev.len().min(next.len());
    let mut out: Vec<Option<Complex64>> = vec![None; width];
    let mut used_prev = vec![false; prev.len()];
    let mut used_next = vec![false; next.len()];
    for _ in 0..k {
        let mut best = f64::INFINITY;
        let mut bi = 0;
        let mut bj = 0;
        for (i, &p) in prev.iter().enumerate() {
            if used_prev[i] {
                continue;
            }
            for (j, &q) in next.iter().enumerate() {
                if used_next[j] {
                    continue;
                }
                let d = (p - q).norm();
                if d < best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        used_prev[bi] = true;
        used_next[bj] = true;
        out[bi] = Some(next[bj]);
    }
    // unmatched new roots (count growth) fill the free slots deterministically
    let mut extras: Vec<Complex64> = next
        .iter()
        .enumerate()
        .filter(|(j, _)| !used_next[*j])
        .map(|(_, &z)| z)
        .collect();
    extras.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut ei = 0;
    for slot in out.iter_mut() {
        if slot.is_none() && ei < extras.len() {
            *slot = Some(extras[ei]);
            ei += 1;
        }
    }
    out
}

/// Roots Y of the level-k spectral polynomial at one omega, in a canonical
/// order (before stitching).
fn roots_at(
    sys: &DdeSystem,
    omega: f64,
    phases: &[f64],
    level: usize,
) -> Result<Vec<Complex64>, AsymptoticError> {
    let coeffs = spectral_polynomial(sys, omega, phases, level)?;
    if coeffs.len() < 2 {
        return Ok(Vec::new());
    }
    Ok(poly_roots(&coeffs)?.roots)
}

/// Branches of the asymptotic spectrum at a fixed phase combination.
fn branches_at_level(
    sys: &DdeSystem,
    omega_grid: &[f64],
    phases: &[f64],
    level: usize,
) -> Result<Vec<AsymptoticBranch>, AsymptoticError> {
    let mut grid: Vec<f64> = omega_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let per_omega: Vec<Vec<Complex64>> = grid
        .par_iter()
        .map(|&w| roots_at(sys, w, phases, level))
        .collect::<Result<_, _>>()?;

    let width = per_omega.iter().map(Vec::len).max().unwrap_or(0);
    if width == 0 {
        return Ok(Vec::new());
    }
    let mut branches: Vec<AsymptoticBranch> = (0..width)
        .map(|j| AsymptoticBranch {
            level,
            branch_index: j + 1,
            phases: phases.to_vec(),
            samples: Vec::with_capacity(grid.len()),
        })
        .collect();
    let mut prev: Vec<Complex64> = Vec::new();
    for (i, roots) in per_omega.iter().enumerate() {
        let ordered: Vec<Option<Complex64>> = if prev.is_empty() {
            let mut r = roots.clone();
            r.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            r.into_iter().map(Some).collect()
        } else {
            stitch(&prev, roots)
        };
        for (j, slot) in ordered.iter().enumerate() {
            let Some(y) = *slot else { continue };
            let abs = y.norm();
            // skip divergent samples at isolated singular frequencies
            if !(1e-300..=1e300).contains(&abs) {
                continue;
            }
            branches[j].samples.push(BranchSample {
                omega: grid[i],
                gamma: -abs.ln(),
                y,
            });
        }
        // carry forward the matched positions; keep the old anchor for
        // branches that vanished at this omega
        if prev.len() < ordered.len() {
            prev.resize(ordered.len(), Complex64::new(0.0, 0.0));
        }
        for (j, slot) in ordered.iter().enumerate() {
            if let Some(y) = *slot {
                prev[j] = y;
            }
        }
    }
    branches.retain(|b| !b.samples.is_empty());
    Ok(branches)
}

/// Level-1 branches gamma_j(omega) = -ln|Y_j(omega)| over the given grid.
pub fn branches_one_delay(
    sys: &DdeSystem,
    omega_grid: &[f64],
) -> Result<Vec<AsymptoticBranch>, AsymptoticError> {
    branches_at_level(sys, omega_grid, &[], 1)
}

/// How to map gamma values into the complex plane.
#[derive(Debug, Clone, Copy)]
pub enum BranchScale {
    /// z = gamma / tau + i*omega (single large delay tau).
    Delay(f64),
    /// z = gamma * eps^level + i*omega (hierarchical delays tau_k ~ eps^{-k}).
    Epsilon(f64),
}

/// Map a branch into the complex plane at a finite delay scale.
pub fn scale_to_complex_plane(
    branch: &AsymptoticBranch,
    scale: BranchScale,
) -> Result<Vec<Complex64>, AsymptoticError> {
    let factor = match scale {
        BranchScale::Delay(tau) => {
            if tau <= 0.0 {
                return Err(AsymptoticError::NonPositiveScale(tau));
            }
            1.0 / tau
        }
        BranchScale::Epsilon(eps) => {
            if eps <= 0.0 {
                return Err(AsymptoticError::NonPositiveScale(eps));
            }
            eps.powi(branch.level as i32)
        }
    };
    Ok(branch
        .samples
        .iter()
        .map(|s| Complex64::new(s.gamma * factor, s.omega))
        .collect())
}

/// Closed-form scalar one-delay branch:
/// gamma(omega) = -1/2 ln((omega - Im a0)^2 + (Re a0)^2) + ln|a1|.
pub fn scalar_gamma_one_delay(sys: &DdeSystem, omega: f64) -> Result<f64, AsymptoticError> {
    if sys.dim() != 1 || sys.delay_count() != 1 {
        return Err(AsymptoticError::NotScalarOneDelay);
    }
    let a0 = sys.a0()[(0, 0)];
    let a1 = sys.delayed(1)[(0, 0)];
    Ok(-0.5 * ((omega - a0.im).powi(2) + a0.re.powi(2)).ln() + a1.norm().ln())
}

/// Frequencies where the scalar one-delay asymptotic spectrum crosses the
/// imaginary axis: omega_H = Im a0 +- sqrt(|a1|^2 - (Re a0)^2) when
/// |a1| >= |Re a0|; None otherwise.
pub fn hopf_frequencies_scalar(sys: &DdeSystem) -> Result<Option<(f64, f64)>, AsymptoticError> {
    if sys.dim() != 1 || sys.delay_count() != 1 {
        return Err(AsymptoticError::NotScalarOneDelay);
    }
    let a0 = sys.a0()[(0, 0)];
    let a1 = sys.delayed(1)[(0, 0)];
    let disc = a1.norm_sqr() - a0.re * a0.re;
    if disc < 0.0 {
        return Ok(None);
    }
    let root = disc.sqrt();
    Ok(Some((a0.im - root, a0.im + root)))
}

/// Frequencies where a branch diverges to +infinity: i*omega_s in sigma(A0).
pub fn singular_frequencies(sys: &DdeSystem, tol: f64) -> Result<Vec<SingularFrequency>, AsymptoticError> {
    let eigs = eigenvalues(sys.a0())?;
    Ok(eigs
        .values
        .iter()
        .filter(|z| z.re.abs() < tol)
        .map(|z| SingularFrequency {
            omega_s: z.im,
            sign: SingularitySign::PlusInfinity,
        })
        .collect())
}

/// Default omega grid used by the CLI and by the hierarchical assembly:
/// uniform points over [-bound, bound], refined near singular frequencies.
pub fn default_omega_grid(sys: &DdeSystem, points: usize) -> Vec<f64> {
    let bound = sys.frequency_bound(1.0);
    let points = points.max(3);
    let mut grid: Vec<f64> = (0..points)
        .map(|i| -bound + 2.0 * bound * i as f64 / (points - 1) as f64)
        .collect();
    if let Ok(sing) = singular_frequencies(sys, 1e-9) {
        for s in sing {
            for j in 1..=20 {
                let d = 0.05 * j as f64 / 20.0;
                grid.push(s.omega_s - d);
                grid.push(s.omega_s + d);
            }
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Assemble the non-degenerate union for hierarchically spaced delays:
/// strongly unstable eigenvalues of A0, positive-gamma parts of levels k < m,
/// and full level-m branches, sampling the fixed phases of level k from the
/// Cartesian product of the first k-1 phase grids.
pub fn assemble_hierarchical_spectrum(
    sys: &DdeSystem,
    omega_grid: &[f64],
    phase_grid_per_level: &[Vec<f64>],
) -> Result<HierarchicalSpectrum, AsymptoticError> {
    let m = sys.delay_count();
    let am = sys.delayed(m);
    let det_norm = determinant(am).norm();
    let scale = frobenius_norm(am).max(f64::MIN_POSITIVE);
    if det_norm <= 1e-10 * scale.powi(sys.dim() as i32) {
        return Err(AsymptoticError::DegenerateLeadingDelay { det_norm });
    }
    let strongly_unstable: Vec<Complex64> = eigenvalues(sys.a0())?
        .values
        .into_iter()
        .filter(|z| z.re > 0.0)
        .collect();

    let grid_for = |l: usize| -> Vec<f64> {
        phase_grid_per_level
            .get(l)
            .cloned()
            .unwrap_or_else(|| (0..8).map(|i| TAU * i as f64 / 8.0).collect())
    };

    let mut branches = Vec::new();
    for level in 1..=m {
        // Cartesian product of the grids for phi_1 .. phi_{level-1}
        let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
        for l in 0..level - 1 {
            let g = grid_for(l);
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    g.iter().map(move |&p| {
                        let mut c2 = c.clone();
                        c2.push(p);
                        c2
                    })
                })
                .collect();
        }
        let per_combo: Vec<Vec<AsymptoticBranch>> = combos
            .par_iter()
            .map(|phases| branches_at_level(sys, omega_grid, phases, level))
            .collect::<Result<_, _>>()?;
        for mut set in per_combo {
            if level < m {
                // only the unstable portions B+ of faster levels matter
                for b in &mut set {
                    b.samples.retain(|s| s.gamma > 0.0);
                }
                set.retain(|b| !b.samples.is_empty());
            }
            branches.extend(set);
        }
    }
    Ok(HierarchicalSpectrum {
        strongly_unstable,
        branches,
    })
}

/// CSV export of branches: level, branch, omega, gamma, Re(Y), Im(Y).
pub fn branches_to_csv(branches: &[AsymptoticBranch]) -> String {
    let mut out = String::from("level,branch,omega,gamma,re_y,im_y\n");
    for b in branches {
        for s in &b.samples {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                b.level, b.branch_index, s.omega, s.gamma, s.y.re, s.y.im
            ));
        }
    }
    out
}

/// Export phases alongside samples when fixed phases are present.
pub fn phases_label(phases: &[f64]) -> String {
    phases
        .iter()
        .map(|p| format!("{:.6}", crate::model::canonical_phase(*p)))
        .collect::<Vec<_>>()
        .join(";")
}
