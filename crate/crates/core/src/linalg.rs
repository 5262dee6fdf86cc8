//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here works on `DMatrix<Complex64>`; sizes are desk scale
//! (N ≤ 512), so nothing tries to be clever about storage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| re(x)))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &CMat) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Singular values sorted in decreasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square matrix (zero for empty input).
pub fn min_singular(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        // rank-deficient by shape on the short side
        let s = singular_values(m);
        if m.nrows() < m.ncols() {
            return 0.0;
        }
        return s.last().copied().unwrap_or(0.0);
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Complex Schur form `M = Q T Q†` with a bounded iteration count. A stalled
/// QR iteration is retried on `M + sI` for a few generic complex shifts `s`,
/// which has the same Schur vectors.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let shifts = [0.0, 0.318_309_886, -0.577_215_665, 0.707_106_781];
    for (k, &s) in shifts.iter().enumerate() {
        let shift = Complex64::new(s, 0.5 * s * (k as f64)) * scale;
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += shift;
        }
        if let Some(sch) = shifted.try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
            let (q, mut t) = sch.unpack();
            for i in 0..n {
                t[(i, i)] -= shift;
            }
            return Ok((q, t));
        }
    }
    Err(Error::Internal("Schur iteration did not converge".into()))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn spectral_abscissa(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn distance_to_spectrum(spectrum: &[Complex64], z: Complex64) -> f64 {
    spectrum
        .iter()
        .map(|s| (s - z).norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn is_normal(m: &CMat, rel_tol: f64) -> bool {
    let mh = m.adjoint();
    let c = m * &mh - &mh * m;
    let scale = frobenius(m).powi(2).max(1e-300);
    frobenius(&c) <= rel_tol * scale
}

/// Orthonormal basis (as columns) of the span of the right singular vectors
/// belonging to the `k` smallest singular values of a square matrix.
pub fn smallest_right_singular_vectors(m: &CMat, k: usize) -> CMat {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut out = zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        for r in 0..n {
            out[(r, col)] = vt[(idx, r)].conj();
        }
    }
    out
}

/// Orthonormal basis of the column space of a projection-like matrix:
/// left singular vectors whose singular value exceeds `threshold`.
pub fn range_basis(m: &CMat, threshold: f64) -> CMat {
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > threshold)
        .collect();
    let mut out = zeros(n, cols.len());
    for (c, &i) in cols.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Null space basis of a square matrix: right singular vectors with
/// singular value at most `threshold`.
pub fn null_basis(m: &CMat, threshold: f64) -> CMat {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= threshold)
        .collect();
    let mut out = zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for r in 0..n {
            out[(r, c)] = vt[(i, r)].conj();
        }
    }
    out
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Scaling and squaring with the degree-13 diagonal Padé approximant.
pub(crate) fn expm_pade13(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * re(0.5f64.powi(s));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]))
        + &a6 * re(b[7])
        + &a4 * re(b[5])
        + &a2 * re(b[3])
        + &id * re(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]))
        + &a6 * re(b[6])
        + &a4 * re(b[4])
        + &a2 * re(b[2])
        + &id * re(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Singular("Padé denominator in matrix exponential".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ExpRange {
            norm,
            log_norm: log_norm_one(a),
        });
    }
    Ok(r)
}

/// Logarithmic norm induced by the 1-norm: max over columns of
/// Re a_jj + Σ_{i≠j} |a_ij|. Bounds log ‖e^A‖₁.
pub fn log_norm_one(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| {
            let off: f64 = (0..a.nrows()).filter(|&i| i != j).map(|i| a[(i, j)].norm()).sum();
            a[(j, j)].re + off
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Ordinary least squares of `y` on the columns of `design` (rows are
/// observations). Returns coefficients and the coefficient of
/// determination.
pub fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let yv = DVector::from_column_slice(y);
    let ata = design.transpose() * design;
    let aty = design.transpose() * &yv;
    let coef = ata.lu().solve(&aty)?;
    let fitted = design * &coef;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((coef.iter().copied().collect(), r2))
}

/// Straight-line fit y ≈ a + b x; returns (a, b, r²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    if x.len() < 2 {
        return None;
    }
    let design = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let (c, r2) = least_squares(&design, y)?;
    Some((c[0], c[1], r2))
}

pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=count)
        .map(|i| lo * 10f64.powf(decades * i as f64 / count as f64))
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
