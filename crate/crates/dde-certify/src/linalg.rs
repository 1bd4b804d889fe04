//! Dense complex linear-algebra kernel: eigenvalues, spectral radius and
//! abscissa, determinants, linear solves, and polynomial root finding.
//!
//! Matrices here are small (typically n <= 10, discretizations up to ~1200),
//! so the eigenvalue solver favors robustness over speed: unitary reduction
//! to upper Hessenberg form followed by a shifted QR iteration on complex
//! matrices, with deterministic (Re, Im) ordering of the output.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("QR eigenvalue iteration failed to converge (active block {0})")]
    NonConvergence(usize),
    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Eigenvalues of a square matrix, with algebraic multiplicity, sorted by
/// (Re, Im).
#[derive(Debug, Clone)]
pub struct EigenSet {
    pub values: Vec<Complex64>,
    pub backward_error: f64,
}

#[derive(Debug, Clone)]
pub struct PolyRoots {
    pub coefficients: Vec<Complex64>,
    pub roots: Vec<Complex64>,
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// All eigenvalues of a complex matrix via Hessenberg reduction + shifted QR.
pub fn eigenvalues(m: &CMatrix) -> Result<EigenSet, LinalgError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigenvalues: matrix must be square");
    let norm = frobenius_norm(m);
    let backward_error = f64::EPSILON * norm * n as f64;

    let mut values = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => eig2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]).to_vec(),
        _ => {
            let mut h = m.clone();
            hessenberg_in_place(&mut h);
            qr_hessenberg_eigenvalues(&mut h)?
        }
    };
    sort_complex(&mut values);
    Ok(EigenSet {
        values,
        backward_error,
    })
}

/// max Re over the spectrum.
pub fn spectral_abscissa(m: &CMatrix) -> Result<f64, LinalgError> {
    let e = eigenvalues(m)?;
    Ok(e.values
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// max |lambda| over the spectrum.
pub fn spectral_radius(m: &CMatrix) -> Result<f64, LinalgError> {
    let e = eigenvalues(m)?;
    Ok(e.values.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigenvalues of a complex 2x2 matrix by the quadratic formula.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let tr = a + d;
    let half = tr * 0.5;
    let disc = (half * half - (a * d - b * c)).sqrt();
    [half + disc, half - disc]
}

/// In-place Householder reduction to upper Hessenberg form (no Q).
fn hessenberg_in_place(h: &mut CMatrix) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, rows k+1..n.
        let mut xnorm = 0.0;
        for i in k + 1..n {
            xnorm += h[(i, k)].norm_sqr();
        }
        let xnorm = xnorm.sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H := P H, P = I - beta v v^H acting on rows k+1..n.
        for j in k..n {
            let mut dot = ZERO;
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + i, j)];
            }
            dot *= beta;
            for (i, vi) in v.iter().enumerate() {
                let val = h[(k + 1 + i, j)] - vi * dot;
                h[(k + 1 + i, j)] = val;
            }
        }
        // H := H P acting on columns k+1..n.
        for i in 0..n {
            let mut dot = ZERO;
            for (j, vj) in v.iter().enumerate() {
                dot += h[(i, k + 1 + j)] * vj;
            }
            dot *= beta;
            for (j, vj) in v.iter().enumerate() {
                let val = h[(i, k + 1 + j)] - dot * vj.conj();
                h[(i, k + 1 + j)] = val;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Complex Givens rotation: returns (c, s) with c real such that
/// [c s; -conj(s) c] [a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if a.norm() == 0.0 {
        return (0.0, ONE);
    }
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}

/// Shifted QR iteration on an upper Hessenberg complex matrix; eigenvalues
/// accumulate as the bottom of the active block deflates.
fn qr_hessenberg_eigenvalues(h: &mut CMatrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    let hnorm = frobenius_norm(h).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iters_since_deflation = 0usize;
    loop {
        // Find the start of the active block: smallest lo with negligible
        // subdiagonal h[lo, lo-1] (set to zero), or lo = 0.
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { hnorm } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs.push(h[(hi, hi)]);
            if hi == 0 {
                break;
            }
            hi -= 1;
            iters_since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let [l1, l2] = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eigs.push(l1);
            eigs.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            iters_since_deflation = 0;
            continue;
        }

        iters_since_deflation += 1;
        if iters_since_deflation > 60 {
            return Err(LinalgError::NonConvergence(hi - lo + 1));
        }
        // Wilkinson shift from the trailing 2x2; exceptional shift on stall.
        let sigma = if iters_since_deflation % 15 == 0 {
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm().abs(), 0.0) * 1.5
        } else {
            let [l1, l2] = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let d = h[(hi, hi)];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for k in lo..=hi {
            h[(k, k)] -= sigma;
        }
        // QR via Givens rotations on the active Hessenberg block.
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rotations.push((c, s));
            for j in k..=hi {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = c * t1 + s * t2;
                h[(k + 1, j)] = -s.conj() * t1 + c * t2;
            }
        }
        // RQ: apply the conjugate rotations from the right.
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + idx;
            let imax = (k + 2).min(hi);
            for i in lo..=imax {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = c * t1 + s.conj() * t2;
                h[(i, k + 1)] = -s * t1 + c * t2;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += sigma;
        }
    }
    Ok(eigs)
}

/// LU factorization with partial pivoting. Returns (lu, permutation sign,
/// row permutation) packed in one matrix.
struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
}

fn lu_factor(m: &CMatrix) -> Lu {
    let n = m.nrows();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k {
            lu.swap_rows(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        let piv = lu[(k, k)];
        if piv.norm() == 0.0 {
            continue;
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let val = lu[(i, j)] - f * lu[(k, j)];
                lu[(i, j)] = val;
            }
        }
    }
    Lu { lu, perm, sign }
}

/// LU-based determinant with partial pivoting; exact for n = 1.
pub fn determinant(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant: matrix must be square");
    if n == 0 {
        return ONE;
    }
    if n == 1 {
        return m[(0, 0)];
    }
    let f = lu_factor(m);
    let mut det = Complex64::new(f.sign, 0.0);
    for k in 0..n {
        det *= f.lu[(k, k)];
    }
    det
}

/// Solve A X = B for a square A; errors out on a pivot below working
/// precision relative to ||A||.
pub fn solve_matrix(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let f = lu_factor(a);
    let tiny = f64::EPSILON * frobenius_norm(a) * n as f64;
    for k in 0..n {
        if f.lu[(k, k)].norm() <= tiny {
            return Err(LinalgError::Singular);
        }
    }
    let mut x = CMatrix::zeros(n, b.ncols());
    for (i, &pi) in f.perm.iter().enumerate() {
        for j in 0..b.ncols() {
            x[(i, j)] = b[(pi, j)];
        }
    }
    // Forward then backward substitution.
    for j in 0..b.ncols() {
        for i in 1..n {
            let mut acc = x[(i, j)];
            for k in 0..i {
                acc -= f.lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[(i, j)];
            for k in i + 1..n {
                acc -= f.lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / f.lu[(i, i)];
        }
    }
    Ok(x)
}

/// Numerical rank by Gaussian elimination with full pivoting; pivots below
/// tol * ||M|| are treated as zero.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.nrows(), a.ncols());
    let tol = rel_tol * frobenius_norm(&a).max(f64::MIN_POSITIVE);
    let mut r = 0;
    for _ in 0..rows.min(cols) {
        // full pivot over the remaining block
        let mut best = 0.0;
        let mut bi = r;
        let mut bj = r;
        for i in r..rows {
            for j in r..cols {
                let v = a[(i, j)].norm();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        a.swap_rows(r, bi);
        a.swap_columns(r, bj);
        let piv = a[(r, r)];
        for i in r + 1..rows {
            let f = a[(i, r)] / piv;
            for j in r..cols {
                let val = a[(i, j)] - f * a[(r, j)];
                a[(i, j)] = val;
            }
        }
        r += 1;
    }
    r
}

/// Roots of a complex polynomial (coefficients in ascending degree) via
/// companion-matrix eigenvalues. High-order coefficients below
/// 1e-14 * max|c| are trimmed.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<PolyRoots, LinalgError> {
    let maxc = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if maxc == 0.0 || coeffs.is_empty() {
        return Err(LinalgError::ZeroPolynomial);
    }
    let trim = 1e-14 * maxc;
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= trim {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(PolyRoots {
            coefficients: coeffs.to_vec(),
            roots: Vec::new(),
        });
    }
    let lead = coeffs[deg];
    let mut companion = CMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = ONE;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots = eigenvalues(&companion)?.values;
    sort_complex(&mut roots);
    Ok(PolyRoots {
        coefficients: coeffs.to_vec(),
        roots,
    })
}

/// Evaluate a polynomial (ascending coefficients) by Horner's rule.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}
