//! Structure-constant Lie algebras and the adjoint action.
//!
//! Indices are zero-based in code: `c(i, j, k)` is the coefficient of
//! `e_k` in `[e_i, e_j]`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::report::{complex_json, Check, Outcome};

/// Absolute tolerance for the antisymmetry and Jacobi axioms.
pub const AXIOM_TOL: f64 = 1e-12;
/// Maximum disagreement between series and matrix-exponential routes in `exp_ad`.
pub const EXP_AD_CROSSCHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<f64>,
}

/// Element of the complexified algebra, in coordinates of the ordered basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElement(pub CVec);

impl AlgElement {
    pub fn zero(dim: usize) -> Self {
        AlgElement(CVec::zeros(dim))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVec::zeros(dim);
        v[k] = linalg::ONE;
        AlgElement(v)
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        AlgElement(CVec::from_iterator(coeffs.len(), coeffs.iter().map(|&x| linalg::re(x))))
    }

    pub fn from_complex(coeffs: &[Complex64]) -> Self {
        AlgElement(CVec::from_column_slice(coeffs))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &CVec {
        &self.0
    }

    pub fn one_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        AlgElement(&self.0 * s)
    }
}

impl Add for &AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: &AlgElement) -> AlgElement {
        AlgElement(&self.0 + &rhs.0)
    }
}

impl Add for AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: AlgElement) -> AlgElement {
        AlgElement(self.0 + rhs.0)
    }
}

impl Sub for &AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: &AlgElement) -> AlgElement {
        AlgElement(&self.0 - &rhs.0)
    }
}

impl Neg for &AlgElement {
    type Output = AlgElement;
    fn neg(self) -> AlgElement {
        AlgElement(-&self.0)
    }
}

impl Mul<f64> for &AlgElement {
    type Output = AlgElement;
    fn mul(self, s: f64) -> AlgElement {
        AlgElement(&self.0 * linalg::re(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementNorms {
    pub one_norm: f64,
    pub ad_op_norm: f64,
}

/// Primary decomposition of `ad a` on the complexified algebra.
#[derive(Debug, Clone)]
pub struct AdSpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub projections: Vec<CMat>,
    /// `s_j`: `(ad a − μ_j)^{s_j} P_j ≠ 0 = (ad a − μ_j)^{s_j+1} P_j`.
    pub indices: Vec<usize>,
    pub multiplicities: Vec<usize>,
    pub cluster_tol: f64,
    /// Two clusters lay within twice the clustering tolerance and were merged.
    pub ambiguous: bool,
}

impl AdSpectralData {
    pub fn to_check(&self) -> Check {
        let mut c = Check::new("ad_spectral_data", Outcome::from_bool(!self.ambiguous))
            .constant("cluster_tol", self.cluster_tol);
        for (j, mu) in self.eigenvalues.iter().enumerate() {
            c = c.witness(json!({
                "eigenvalue": complex_json(*mu),
                "index": self.indices[j],
                "multiplicity": self.multiplicities[j],
            }));
        }
        if self.ambiguous {
            c = c.note("eigenvalue clusters within 2x cluster_tol were merged");
        }
        c
    }
}

/// Validates a nested structure tensor: shape first, then the bracket axioms.
pub fn validate_algebra(structure: &[Vec<Vec<f64>>]) -> Result<Check> {
    let d = structure.len();
    for (i, plane) in structure.iter().enumerate() {
        if plane.len() != d {
            return Err(Error::TensorShape {
                axis: 1,
                index: i,
                expected: d,
                got: plane.len(),
            });
        }
        for (j, row) in plane.iter().enumerate() {
            if row.len() != d {
                return Err(Error::TensorShape {
                    axis: 2,
                    index: i * d + j,
                    expected: d,
                    got: row.len(),
                });
            }
        }
    }
    let flat: Vec<f64> = structure.iter().flatten().flatten().copied().collect();
    let (anti, jac) = axiom_residuals(d, &flat);
    let ok = anti <= AXIOM_TOL && jac <= AXIOM_TOL;
    Ok(Check::new("validate_algebra", Outcome::from_bool(ok))
        .residual("antisymmetry", anti)
        .residual("jacobi", jac)
        .constant("dim", d as f64)
        .constant("tolerance", AXIOM_TOL))
}

fn axiom_residuals(d: usize, c: &[f64]) -> (f64, f64) {
    let at = |i: usize, j: usize, k: usize| c[(i * d + j) * d + k];
    let mut anti: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                anti = anti.max((at(i, j, k) + at(j, i, k)).abs());
            }
        }
    }
    let mut jac: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let s: f64 = (0..d)
                        .map(|m| {
                            at(i, j, m) * at(m, k, l)
                                + at(j, k, m) * at(m, i, l)
                                + at(k, i, m) * at(m, j, l)
                        })
                        .sum();
                    jac = jac.max(s.abs());
                }
            }
        }
    }
    (anti, jac)
}

impl LieAlgebra {
    /// Builds an algebra from a flat row-major `d×d×d` tensor, rejecting
    /// tensors that violate the axioms.
    pub fn new(dim: usize, structure: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("Lie algebra dimension must be positive".into()));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                what: "structure tensor".into(),
                expected: dim * dim * dim,
                got: structure.len(),
            });
        }
        let (antisymmetry, jacobi) = axiom_residuals(dim, &structure);
        if antisymmetry > AXIOM_TOL || jacobi > AXIOM_TOL {
            return Err(Error::InvalidAlgebra {
                antisymmetry,
                jacobi,
            });
        }
        Ok(LieAlgebra { dim, c: structure })
    }

    pub fn from_nested(structure: &[Vec<Vec<f64>>]) -> Result<Self> {
        let check = validate_algebra(structure)?;
        if !check.passed() {
            return Err(Error::InvalidAlgebra {
                antisymmetry: check.residuals["antisymmetry"],
                jacobi: check.residuals["jacobi"],
            });
        }
        Self::new(
            structure.len(),
            structure.iter().flatten().flatten().copied().collect(),
        )
    }

    /// Builds from the nonzero brackets `[e_i, e_j] = Σ coeff e_k`, listed once
    /// per unordered pair; the antisymmetric partner is filled in.
    pub fn from_brackets(dim: usize, brackets: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        for &(i, j, k, v) in brackets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::LetterOutOfRange {
                    letter: i.max(j).max(k),
                    dim,
                });
            }
            c[(i * dim + j) * dim + k] += v;
            c[(j * dim + i) * dim + k] -= v;
        }
        Self::new(dim, c)
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebra {
            dim,
            c: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| (0..self.dim).map(|k| self.c(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    fn check_dim(&self, x: &AlgElement) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "algebra element".into(),
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &AlgElement, y: &AlgElement) -> Result<AlgElement> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let d = self.dim;
        let mut out = CVec::zeros(d);
        for i in 0..d {
            if x.0[i] == linalg::ZERO {
                continue;
            }
            for j in 0..d {
                let xy = x.0[i] * y.0[j];
                if xy == linalg::ZERO {
                    continue;
                }
                for k in 0..d {
                    let c = self.c(i, j, k);
                    if c != 0.0 {
                        out[k] += xy * c;
                    }
                }
            }
        }
        Ok(AlgElement(out))
    }

    /// Matrix of `b ↦ [a, b]`; column j holds the coordinates of `[a, e_j]`.
    pub fn ad_matrix(&self, a: &AlgElement) -> Result<CMat> {
        self.check_dim(a)?;
        let d = self.dim;
        let mut m = linalg::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let c = self.c(i, j, k);
                    if c != 0.0 {
                        m[(k, j)] += a.0[i] * c;
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn norms(&self, a: &AlgElement) -> Result<ElementNorms> {
        let ad = self.ad_matrix(a)?;
        Ok(ElementNorms {
            one_norm: a.one_norm(),
            ad_op_norm: linalg::one_norm(&ad),
        })
    }

    pub fn ad_spectral_data(&self, a: &AlgElement) -> Result<AdSpectralData> {
        let ad = self.ad_matrix(a)?;
        spectral_data_of(&ad)
    }

    /// `exp(−t ad a)(b)` by its power series, cross-checked against the
    /// matrix exponential of `−t·ad a`.
    pub fn exp_ad(&self, t: f64, a: &AlgElement, b: &AlgElement, tol: f64) -> Result<AlgElement> {
        self.check_dim(b)?;
        if tol <= 0.0 || !tol.is_finite() {
            return Err(Error::Invalid(format!("exp_ad tolerance must be positive, got {tol}")));
        }
        let ad = self.ad_matrix(a)?;
        let r = t.abs() * linalg::one_norm(&ad);
        let b_norm = b.one_norm();
        let mut term = b.0.clone();
        let mut sum = term.clone();
        let mut k = 0usize;
        let mut tail_bound_at_k = 1.0;
        loop {
            // tail_bound_at_k tracks r^{k+1}/(k+1)!
            tail_bound_at_k *= r / (k as f64 + 1.0);
            let geometric = k as f64 + 2.0 > r;
            if geometric {
                let tail = b_norm * tail_bound_at_k / (1.0 - r / (k as f64 + 2.0));
                if tail < tol {
                    break;
                }
            }
            if term.iter().all(|z| *z == linalg::ZERO) {
                break;
            }
            k += 1;
            term = (&ad * &term) * linalg::re(-t / k as f64);
            sum += &term;
            if k > 10_000 {
                return Err(Error::Internal("exp_ad series did not settle".into()));
            }
        }
        let mut gen = ad.clone();
        gen *= linalg::re(-t);
        let via_matrix = linalg::expm_pade13(&gen)? * &b.0;
        let scale = sum.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
        let gap: f64 = (&via_matrix - &sum).iter().map(|z| z.norm()).sum();
        if gap > EXP_AD_CROSSCHECK_TOL * scale.max(tol / EXP_AD_CROSSCHECK_TOL) {
            return Err(Error::Internal(format!(
                "exp_ad series and matrix exponential disagree by {gap:e}"
            )));
        }
        Ok(AlgElement(sum))
    }
}

pub(crate) fn spectral_data_of(ad: &CMat) -> Result<AdSpectralData> {
    let d = ad.nrows();
    let op_norm = linalg::one_norm(ad);
    let cluster_tol = 1e-8 * op_norm.max(1.0);
    let eig = linalg::eigenvalues(ad)?;

    // single-linkage clustering at 2·cluster_tol; links longer than
    // cluster_tol mark the result ambiguous
    let mut parent: Vec<usize> = (0..eig.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    let mut ambiguous = false;
    for i in 0..eig.len() {
        for j in (i + 1)..eig.len() {
            let dist = (eig[i] - eig[j]).norm();
            if dist <= 2.0 * cluster_tol {
                if dist > cluster_tol {
                    ambiguous = true;
                }
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..eig.len() {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(p) => clusters[p].push(i),
            None => {
                roots.push(r);
                clusters.push(vec![i]);
            }
        }
    }
    let mut centers: Vec<(Complex64, usize)> = clusters
        .iter()
        .map(|c| {
            let s: Complex64 = c.iter().map(|&i| eig[i]).sum();
            (s / c.len() as f64, c.len())
        })
        .collect();
    centers.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));

    // generalized eigenspaces from the near-null space of (ad − μ)^{n_j}
    let id = linalg::identity(d);
    let mut basis = linalg::zeros(d, d);
    let mut col = 0;
    for &(mu, mult) in &centers {
        let shifted = ad - &id * mu;
        let mut power = linalg::identity(d);
        for _ in 0..mult {
            power = &shifted * &power;
        }
        let vecs = linalg::smallest_right_singular_vectors(&power, mult);
        basis.view_mut((0, col), (d, mult)).copy_from(&vecs);
        col += mult;
    }
    let inv = linalg::inverse(&basis).ok_or_else(|| {
        Error::Internal("generalized eigenvectors are linearly dependent".into())
    })?;

    let mut projections = Vec::with_capacity(centers.len());
    let mut indices = Vec::with_capacity(centers.len());
    let mut offset = 0;
    for &(mu, mult) in &centers {
        let mut sel = linalg::zeros(d, d);
        for i in offset..offset + mult {
            sel[(i, i)] = linalg::ONE;
        }
        offset += mult;
        let p = &basis * sel * &inv;
        let shifted = ad - &id * mu;
        let p_norm = linalg::frobenius(&p).max(1.0);
        let mut s = 0usize;
        let mut acc = &shifted * &p;
        while s < mult
            && linalg::frobenius(&acc)
                > 1e-8 * p_norm * op_norm.max(1.0).powi(s as i32 + 1)
        {
            s += 1;
            acc = &shifted * acc;
        }
        projections.push(p);
        indices.push(s);
    }

    Ok(AdSpectralData {
        eigenvalues: centers.iter().map(|c| c.0).collect(),
        multiplicities: centers.iter().map(|c| c.1).collect(),
        projections,
        indices,
        cluster_tol,
        ambiguous,
    })
}
