//! Finite-delay validation: characteristic roots of
//! Q(lambda) = det[lambda I - A0 - sum_k Ak e^{-lambda tau_k}]
//! via Chebyshev pseudospectral discretization of the solution-operator
//! generator on [-tau_max, 0] (eigenvalue seeds) followed by Newton
//! refinement on Q itself, plus an independent time-domain cross-check by
//! the method of steps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{determinant, eigenvalues, solve_matrix, CMatrix, LinalgError};
use crate::model::{CharRoot, DdeSystem, DelayVector};

#[derive(Debug, Error)]
pub enum CharRootsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("time step {dt} too large: must be below min positive delay / 10 = {limit}")]
    TimeStepTooLarge { dt: f64, limit: f64 },
    #[error("simulation horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Pseudospectral discretization and Newton-refinement parameters.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationConfig {
    /// Chebyshev nodes on [-tau_max, 0] (N+1 collocation points).
    pub nodes: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub dedup_radius: f64,
    pub window_re: (f64, f64),
    pub window_im: (f64, f64),
}

impl DiscretizationConfig {
    /// Defaults tied to the system scale: N = max(64, 20 ceil(tau_max))
    /// capped at 600; window Re in [-5, max(1, norm bound)], Im in
    /// [-Omega, Omega] with the certificate frequency bound Omega.
    pub fn default_for(sys: &DdeSystem, taus: &DelayVector) -> Self {
        let tau_max = taus.max();
        let nodes = (20.0 * tau_max.ceil()).max(64.0).min(600.0) as usize;
        let omega = sys.frequency_bound(1.0);
        DiscretizationConfig {
            nodes,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            dedup_radius: 1e-8,
            window_re: (-5.0, sys.frequency_bound(0.0).max(1.0)),
            window_im: (-omega, omega),
        }
    }
}

/// The computed finite-delay spectrum inside the window.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub taus: DelayVector,
    pub roots: Vec<CharRoot>,
    pub rightmost: Option<CharRoot>,
    pub dropped_seeds: usize,
    pub discretization: DiscretizationConfig,
}

/// M(lambda) = lambda I - A0 - sum_k Ak e^{-lambda tau_k}.
fn char_matrix(sys: &DdeSystem, taus: &DelayVector, lambda: Complex64) -> CMatrix {
    let n = sys.dim();
    let mut m = CMatrix::identity(n, n) * lambda - sys.a0();
    for (k, &tau) in taus.values().iter().enumerate() {
        m -= sys.delayed(k + 1) * (-lambda * tau).exp();
    }
    m
}

/// Q(lambda) = det M(lambda).
pub fn quasipolynomial(sys: &DdeSystem, taus: &DelayVector, lambda: Complex64) -> Complex64 {
    determinant(&char_matrix(sys, taus, lambda))
}

/// dQ/dlambda via Jacobi's formula Q * trace(M^{-1} M') with
/// M' = I + sum_k tau_k Ak e^{-lambda tau_k}; central finite differences as
/// fallback when M is numerically singular.
pub fn quasipolynomial_derivative(
    sys: &DdeSystem,
    taus: &DelayVector,
    lambda: Complex64,
) -> Complex64 {
    let n = sys.dim();
    let m = char_matrix(sys, taus, lambda);
    let mut mp = CMatrix::identity(n, n);
    for (k, &tau) in taus.values().iter().enumerate() {
        mp += sys.delayed(k + 1) * ((-lambda * tau).exp() * tau);
    }
    if let Ok(x) = solve_matrix(&m, &mp) {
        let tr: Complex64 = (0..n).map(|i| x[(i, i)]).sum();
        return determinant(&m) * tr;
    }
    let h = 1e-7 * (1.0 + lambda.norm());
    (quasipolynomial(sys, taus, lambda + h) - quasipolynomial(sys, taus, lambda - h)) / (2.0 * h)
}

/// One Newton step lambda -> lambda - 1/trace(M^{-1} M'); the ratio Q/Q' is
/// formed without evaluating Q, which stays stable arbitrarily close to the
/// root.
fn newton_refine(
    sys: &DdeSystem,
    taus: &DelayVector,
    seed: Complex64,
    cfg: &DiscretizationConfig,
    scale: f64,
) -> Option<CharRoot> {
    let n = sys.dim();
    let mut lambda = seed;
    for _ in 0..cfg.newton_max_iter {
        let m = char_matrix(sys, taus, lambda);
        let mut mp = CMatrix::identity(n, n);
        for (k, &tau) in taus.values().iter().enumerate() {
            mp += sys.delayed(k + 1) * ((-lambda * tau).exp() * tau);
        }
        let step = match solve_matrix(&m, &mp) {
            Ok(x) => {
                let tr: Complex64 = (0..n).map(|i| x[(i, i)]).sum();
                if tr.norm() == 0.0 {
                    return None;
                }
                1.0 / tr
            }
            Err(_) => {
                // numerically singular: already at a root to working precision
                break;
            }
        };
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        lambda -= step;
        if step.norm() < cfg.newton_tol * (1.0 + lambda.norm()) {
            break;
        }
    }
    let residual = quasipolynomial(sys, taus, lambda).norm();
    if !lambda.re.is_finite() || !lambda.im.is_finite() || residual >= 1e-10 * scale {
        return None;
    }
    Some(CharRoot {
        lambda,
        residual,
        multiplicity_hint: 1,
    })
}

/// Chebyshev differentiation matrix on the standard nodes x_i = cos(i pi / N).
fn chebyshev_diff(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let nn = n as f64;
    let x: Vec<f64> = (0..=n).map(|i| (std::f64::consts::PI * i as f64 / nn).cos()).collect();
    let c = |i: usize| -> f64 {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        base * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                d[i][j] = (c(i) / c(j)) / (x[i] - x[j]);
                row_sum += d[i][j];
            }
        }
        d[i][i] = -row_sum;
    }
    (x, d)
}

/// Barycentric interpolation weights for Chebyshev points at an arbitrary
/// point t (in node coordinates).
fn barycentric_weights(nodes: &[f64], t: f64) -> Vec<f64> {
    let n = nodes.len() - 1;
    for (i, &xi) in nodes.iter().enumerate() {
        if (t - xi).abs() < 1e-14 {
            let mut w = vec![0.0; nodes.len()];
            w[i] = 1.0;
            return w;
        }
    }
    let bw = |i: usize| -> f64 {
        let base = if i == 0 || i == n { 0.5 } else { 1.0 };
        base * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let terms: Vec<f64> = (0..=n).map(|i| bw(i) / (t - nodes[i])).collect();
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / total).collect()
}

/// Discretize the generator on [-tau_max, 0] and return its eigenvalues
/// (the root seeds).
fn discretization_seeds(
    sys: &DdeSystem,
    taus: &DelayVector,
    nodes: usize,
) -> Result<Vec<Complex64>, CharRootsError> {
    let n = sys.dim();
    let tau_max = taus.max();
    if tau_max == 0.0 {
        let s0 = sys.s_of_phi(&crate::model::PhaseVector::zeros(sys.delay_count()));
        return Ok(eigenvalues(&s0)?.values);
    }
    let big_n = nodes.max(8);
    let (x, d) = chebyshev_diff(big_n);
    // t = (x - 1) * tau_max / 2 maps x in [-1,1] to t in [-tau_max, 0];
    // node 0 is t = 0. d/dt = (2/tau_max) d/dx.
    let scale = 2.0 / tau_max;
    let dim = (big_n + 1) * n;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 1..=big_n {
        for j in 0..=big_n {
            let v = Complex64::new(scale * d[i][j], 0.0);
            for r in 0..n {
                m[(i * n + r, j * n + r)] = v;
            }
        }
    }
    // boundary row: dx/dt(t) = A0 x(t) + sum Ak x(t - tau_k)
    for r in 0..n {
        for s in 0..n {
            m[(r, s)] += sys.a0()[(r, s)];
        }
    }
    for (k, &tau) in taus.values().iter().enumerate() {
        let xk = 1.0 - 2.0 * tau / tau_max; // node coordinate of t = -tau_k
        let w = barycentric_weights(&x, xk);
        let ak = sys.delayed(k + 1);
        for (j, &wj) in w.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            for r in 0..n {
                for s in 0..n {
                    m[(r, j * n + s)] += ak[(r, s)] * wj;
                }
            }
        }
    }
    Ok(eigenvalues(&m)?.values)
}

/// Compute the characteristic roots inside the window: discretization seeds,
/// parallel Newton refinement on Q, window filter, deduplication.
pub fn compute_spectrum(
    sys: &DdeSystem,
    taus: &DelayVector,
    cfg: &DiscretizationConfig,
) -> Result<SpectrumReport, CharRootsError> {
    sys.check_delays(taus)?;
    let scale = sys.norm_scale();
    let seeds = discretization_seeds(sys, taus, cfg.nodes)?;
    let in_window = |z: Complex64, slack: f64| -> bool {
        z.re >= cfg.window_re.0 - slack
            && z.re <= cfg.window_re.1 + slack
            && z.im >= cfg.window_im.0 - slack
            && z.im <= cfg.window_im.1 + slack
    };
    let candidates: Vec<Complex64> = seeds
        .into_iter()
        .filter(|&z| in_window(z, 0.5))
        .collect();
    let refined: Vec<Option<CharRoot>> = candidates
        .par_iter()
        .map(|&seed| newton_refine(sys, taus, seed, cfg, scale))
        .collect();
    let dropped_seeds = refined.iter().filter(|r| r.is_none()).count();
    let mut roots: Vec<CharRoot> = refined
        .into_iter()
        .flatten()
        .filter(|r| in_window(r.lambda, 0.0))
        .collect();
    roots.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap()
    });
    // dedup within dedup_radius, keeping the smallest residual
    let mut merged: Vec<CharRoot> = Vec::new();
    for r in roots {
        if let Some(last) = merged
            .iter_mut()
            .find(|m| (m.lambda - r.lambda).norm() < cfg.dedup_radius)
        {
            last.multiplicity_hint += 1;
            if r.residual < last.residual {
                last.lambda = r.lambda;
                last.residual = r.residual;
            }
        } else {
            merged.push(r);
        }
    }
    let rightmost = merged
        .iter()
        .cloned()
        .max_by(|a, b| a.lambda.re.partial_cmp(&b.lambda.re).unwrap());
    Ok(SpectrumReport {
        taus: taus.clone(),
        roots: merged,
        rightmost,
        dropped_seeds,
        discretization: cfg.clone(),
    })
}

/// CSV export: Re, Im, residual per root.
pub fn spectrum_to_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("re,im,residual\n");
    for r in &report.roots {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.3e}\n",
            r.lambda.re, r.lambda.im, r.residual
        ));
    }
    out
}

/// Time-domain trajectory summary from the method of steps.
#[derive(Debug, Clone, Serialize)]
pub struct Simulation {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of ln||x|| over the last third of the run.
    pub growth: f64,
    /// Set when the state norm exceeded the overflow guard; the run stops
    /// there and the growth estimate is taken on the data so far.
    pub overflow_at: Option<f64>,
}

/// Fixed-step RK4 method of steps with constant pre-history and cubic
/// Lagrange interpolation of the stored trajectory at the delayed times.
pub fn simulate_method_of_steps(
    sys: &DdeSystem,
    taus: &DelayVector,
    history: &[Complex64],
    t_end: f64,
    dt: f64,
) -> Result<Simulation, CharRootsError> {
    sys.check_delays(taus)?;
    assert_eq!(history.len(), sys.dim(), "history must match the state dimension");
    if t_end <= 0.0 {
        return Err(CharRootsError::NonPositiveHorizon(t_end));
    }
    if dt <= 0.0 {
        return Err(CharRootsError::NonPositiveStep(dt));
    }
    let min_pos_tau = taus
        .values()
        .iter()
        .cloned()
        .filter(|&t| t > 0.0)
        .fold(f64::INFINITY, f64::min);
    if min_pos_tau.is_finite() && dt > min_pos_tau / 10.0 {
        return Err(CharRootsError::TimeStepTooLarge {
            dt,
            limit: min_pos_tau / 10.0,
        });
    }

    let n = sys.dim();
    // zero delays act instantaneously: fold them into the A0 part
    let mut a_inst = sys.a0().clone();
    let mut lagged: Vec<(f64, &CMatrix)> = Vec::new();
    for (k, &tau) in taus.values().iter().enumerate() {
        if tau == 0.0 {
            a_inst += sys.delayed(k + 1);
        } else {
            lagged.push((tau, sys.delayed(k + 1)));
        }
    }

    let steps = (t_end / dt).ceil() as usize;
    let mut states: Vec<Vec<Complex64>> = Vec::with_capacity(steps + 1);
    states.push(history.to_vec());

    // x(s) for s <= current time, cubic Lagrange through the 4 grid points
    // around s; constant history for s <= 0.
    let lookup = |states: &Vec<Vec<Complex64>>, s: f64| -> Vec<Complex64> {
        if s <= 0.0 {
            return history.to_vec();
        }
        let last = states.len() - 1;
        let j = ((s / dt).floor() as usize).min(last.saturating_sub(1));
        let lo = j.saturating_sub(1);
        let hi = (lo + 3).min(last);
        let lo = hi.saturating_sub(3);
        let idx: Vec<usize> = (lo..=hi).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for &i in &idx {
            let ti = i as f64 * dt;
            let mut l = 1.0;
            for &q in &idx {
                if q != i {
                    l *= (s - q as f64 * dt) / (ti - q as f64 * dt);
                }
            }
            for r in 0..n {
                out[r] += states[i][r] * l;
            }
        }
        out
    };

    let rhs = |states: &Vec<Vec<Complex64>>, t: f64, x: &[Complex64]| -> Vec<Complex64> {
        let mut dx = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..n {
            for s in 0..n {
                dx[r] += a_inst[(r, s)] * x[s];
            }
        }
        for (tau, ak) in &lagged {
            let xd = lookup(states, t - tau);
            for r in 0..n {
                for s in 0..n {
                    dx[r] += ak[(r, s)] * xd[s];
                }
            }
        }
        dx
    };

    let mut overflow_at = None;
    for i in 0..steps {
        let t = i as f64 * dt;
        let x = states[i].clone();
        let k1 = rhs(&states, t, &x);
        let mid1: Vec<Complex64> = (0..n).map(|r| x[r] + k1[r] * (dt / 2.0)).collect();
        let k2 = rhs(&states, t + dt / 2.0, &mid1);
        let mid2: Vec<Complex64> = (0..n).map(|r| x[r] + k2[r] * (dt / 2.0)).collect();
        let k3 = rhs(&states, t + dt / 2.0, &mid2);
        let end: Vec<Complex64> = (0..n).map(|r| x[r] + k3[r] * dt).collect();
        let k4 = rhs(&states, t + dt, &end);
        let next: Vec<Complex64> = (0..n)
            .map(|r| x[r] + (k1[r] + k2[r] * 2.0 + k3[r] * 2.0 + k4[r]) * (dt / 6.0))
            .collect();
        let norm: f64 = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1e150 {
            overflow_at = Some(t + dt);
            break;
        }
        states.push(next);
    }

    let times: Vec<f64> = (0..states.len()).map(|i| i as f64 * dt).collect();
    let norms: Vec<f64> = states
        .iter()
        .map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    // least-squares slope of ln||x|| over the last third (skip zero norms)
    let start = norms.len() - norms.len() / 3;
    let pts: Vec<(f64, f64)> = (start..norms.len())
        .filter(|&i| norms[i] > 0.0)
        .map(|i| (times[i], norms[i].ln()))
        .collect();
    let growth = if overflow_at.is_some() {
        f64::INFINITY
    } else if pts.len() < 2 {
        f64::NEG_INFINITY
    } else {
        let np = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (np * sxy - sx * sy) / (np * sxx - sx * sx)
    };

    Ok(Simulation {
        times,
        norms,
        growth,
        overflow_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(coeffs: &[Complex64]) -> DdeSystem {
        DdeSystem::scalar(coeffs).unwrap()
    }

    #[test]
    fn quasipolynomial_examples() {
        // lambda = 0 is a root whenever a0 + a1 = 0
        let sys = scalar(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        for tau in [0.3, 1.0, 7.5] {
            let q = quasipolynomial(&sys, &DelayVector::new(vec![tau]).unwrap(), c(0.0, 0.0));
            assert!(q.norm() < 1e-15);
        }
        // tau = 0 reduces to det(lambda I - S(0))
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        let taus = DelayVector::new(vec![0.0]).unwrap();
        let lambda = c(0.2, -0.3);
        let q = quasipolynomial(&sys, &taus, lambda);
        assert!((q - (lambda - c(-0.5, 1.0))).norm() < 1e-14);
        // fixed point of lambda = a0 + a1 e^{-lambda tau} is a root
        // (tau small enough that the fixed-point map is a contraction)
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        let tau = 0.2;
        let mut l = c(-1.0, 1.0);
        for _ in 0..200 {
            l = c(-1.0, 1.0) + c(0.5, 0.0) * (-l * tau).exp();
        }
        let q = quasipolynomial(&sys, &DelayVector::new(vec![tau]).unwrap(), l);
        assert!(q.norm() < 1e-12, "residual {}", q.norm());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        let taus = DelayVector::new(vec![2.0]).unwrap();
        for lambda in [c(0.1, 0.4), c(-0.5, 1.2), c(0.0, 0.0)] {
            let analytic = quasipolynomial_derivative(&sys, &taus, lambda);
            // scalar: 1 + a1 tau e^{-lambda tau}
            let expected = c(1.0, 0.0) + c(0.5, 0.0) * 2.0 * (-lambda * 2.0).exp();
            assert!((analytic - expected).norm() < 1e-10 * expected.norm().max(1.0));
            let h = 1e-6;
            let fd = (quasipolynomial(&sys, &taus, lambda + h)
                - quasipolynomial(&sys, &taus, lambda - h))
                / (2.0 * h);
            assert!((analytic - fd).norm() < 1e-6 * fd.norm().max(1.0));
        }
    }

    #[test]
    fn zero_delay_spectrum_matches_s0() {
        let a0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0)],
        );
        let a1 = CMatrix::identity(2, 2) * c(0.5, 0.0);
        let sys = DdeSystem::new(vec![a0, a1]).unwrap();
        let taus = DelayVector::new(vec![0.0]).unwrap();
        let cfg = DiscretizationConfig::default_for(&sys, &taus);
        let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
        let s0 = sys.s_of_phi(&crate::model::PhaseVector::zeros(1));
        let expected = eigenvalues(&s0).unwrap().values;
        assert_eq!(rep.roots.len(), expected.len());
        for (r, e) in rep.roots.iter().zip(expected.iter()) {
            assert!((r.lambda - e).norm() < 1e-10);
        }
    }

    #[test]
    fn stable_spectrum_stays_left() {
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        for tau in [0.5, 5.0] {
            let taus = DelayVector::new(vec![tau]).unwrap();
            let cfg = DiscretizationConfig::default_for(&sys, &taus);
            let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
            assert!(!rep.roots.is_empty());
            let rm = rep.rightmost.as_ref().unwrap();
            assert!(rm.lambda.re < 0.0, "tau {} rightmost {}", tau, rm.lambda);
            for r in &rep.roots {
                assert!(r.residual < 1e-10 * sys.norm_scale());
            }
        }
    }

    #[test]
    fn unstable_spectrum_has_right_root() {
        let sys = scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]);
        let taus = DelayVector::new(vec![20.0]).unwrap();
        let cfg = DiscretizationConfig::default_for(&sys, &taus);
        let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
        let rm = rep.rightmost.as_ref().unwrap();
        assert!(rm.lambda.re > 0.0, "rightmost {}", rm.lambda);
    }

    #[test]
    fn conjugate_symmetry_for_real_systems() {
        let sys = scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]);
        let taus = DelayVector::new(vec![5.0]).unwrap();
        let cfg = DiscretizationConfig::default_for(&sys, &taus);
        let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
        for r in &rep.roots {
            let conj = r.lambda.conj();
            assert!(
                rep.roots
                    .iter()
                    .any(|q| (q.lambda - conj).norm() < 1e-6),
                "missing conjugate of {}",
                r.lambda
            );
        }
    }

    #[test]
    fn simulation_matches_spectrum_sign() {
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        let taus = DelayVector::new(vec![5.0]).unwrap();
        let sim = simulate_method_of_steps(&sys, &taus, &[c(1.0, 0.0)], 60.0, 0.05).unwrap();
        assert!(sim.growth < 0.0, "growth {}", sim.growth);
        let cfg = DiscretizationConfig::default_for(&sys, &taus);
        let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
        let rm = rep.rightmost.unwrap().lambda.re;
        assert!((sim.growth - rm).abs() < 0.05, "growth {} vs {}", sim.growth, rm);

        let sys = scalar(&[c(-1.0, 0.0), c(-1.5, 0.0)]);
        let taus = DelayVector::new(vec![20.0]).unwrap();
        let sim = simulate_method_of_steps(&sys, &taus, &[c(1.0, 0.0)], 240.0, 0.1).unwrap();
        assert!(sim.growth > 0.0, "growth {}", sim.growth);
    }

    #[test]
    fn no_delay_matches_ode() {
        let sys = scalar(&[c(-0.7, 0.3), c(0.0, 0.0)]);
        let taus = DelayVector::new(vec![0.0]).unwrap();
        let sim = simulate_method_of_steps(&sys, &taus, &[c(1.0, 0.0)], 5.0, 0.01).unwrap();
        // x(t) = e^{(a0+a1) t}; a1 = 0 here
        let t = *sim.times.last().unwrap();
        let expected = ((c(-0.7, 0.3)) * t).exp().norm();
        let got = *sim.norms.last().unwrap();
        assert!((got - expected).abs() < 1e-8 * expected.max(1.0));
    }

    #[test]
    fn step_size_guard() {
        let sys = scalar(&[c(-1.0, 0.0), c(0.5, 0.0)]);
        let taus = DelayVector::new(vec![1.0]).unwrap();
        assert!(matches!(
            simulate_method_of_steps(&sys, &taus, &[c(1.0, 0.0)], 5.0, 0.5),
            Err(CharRootsError::TimeStepTooLarge { .. })
        ));
    }

    #[test]
    fn csv_export_shape() {
        let sys = scalar(&[c(-1.0, 1.0), c(0.5, 0.0)]);
        let taus = DelayVector::new(vec![0.5]).unwrap();
        let cfg = DiscretizationConfig::default_for(&sys, &taus);
        let rep = compute_spectrum(&sys, &taus, &cfg).unwrap();
        let csv = spectrum_to_csv(&rep);
        assert!(csv.starts_with("re,im,residual\n"));
        assert_eq!(csv.trim().lines().count(), rep.roots.len() + 1);
    }
}
