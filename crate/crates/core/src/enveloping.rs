//! Words in the basis, PBW straightening and ellipticity of ordered
//! polynomials in the enveloping algebra.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg::{self, CMat};
use crate::repspace::MatrixRep;

/// Coefficients at or below this magnitude are dropped.
pub const COEFF_EPS: f64 = 1e-14;
pub const ELLIPTIC_TOL: f64 = 1e-10;
pub const DEFAULT_SPHERE_SAMPLES: usize = 4096;

/// A monomial `B_{u_1}⋯B_{u_n}` (zero-based letters); empty is the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn is_ordered(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    fn first_descent(&self) -> Option<usize> {
        self.0.windows(2).position(|w| w[0] > w[1])
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

/// A finite linear combination of words.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvElement {
    terms: BTreeMap<Word, Complex64>,
}

impl EnvElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(letters: &[usize], coeff: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(Word(letters.to_vec()), coeff);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, Complex64)>) -> Self {
        let mut e = Self::zero();
        for (w, c) in terms {
            e.add_term(w, c);
        }
        e
    }

    pub fn add_term(&mut self, w: Word, c: Complex64) {
        let entry = self.terms.entry(w.clone()).or_insert(linalg::ZERO);
        *entry += c;
        if entry.norm() <= COEFF_EPS {
            self.terms.remove(&w);
        }
    }

    pub fn add(&self, other: &EnvElement) -> EnvElement {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> EnvElement {
        EnvElement::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c * s)))
    }

    pub fn terms(&self) -> &BTreeMap<Word, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum word length over stored terms (presentation dependent).
    pub fn size(&self) -> usize {
        self.terms.keys().map(Word::size).max().unwrap_or(0)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for w in self.terms.keys() {
            if let Some(&l) = w.0.iter().find(|&&l| l >= dim) {
                return Err(Error::LetterOutOfRange { letter: l, dim });
            }
        }
        Ok(())
    }
}

/// Polynomial in ordered monomials `B_1^{α_1}⋯B_d^{α_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedPoly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl OrderedPoly {
    pub fn new(dim: usize) -> Self {
        OrderedPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, Complex64)>) -> Result<Self> {
        let mut p = Self::new(dim);
        for (alpha, c) in terms {
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "multi-index".into(),
                    expected: dim,
                    got: alpha.len(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// `−Σ_k B_k²`, the minus-Laplacian.
    pub fn minus_laplacian(dim: usize) -> Self {
        let mut p = Self::new(dim);
        for k in 0..dim {
            let mut a = vec![0; dim];
            a[k] = 2;
            p.add_term(a, linalg::re(-1.0));
        }
        p
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: Complex64) {
        let entry = self.terms.entry(alpha.clone()).or_insert(linalg::ZERO);
        *entry += c;
        if entry.norm() <= COEFF_EPS {
            self.terms.remove(&alpha);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Complex64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_minus_laplacian(&self) -> bool {
        *self == Self::minus_laplacian(self.dim)
    }

    pub fn to_env_element(&self) -> EnvElement {
        EnvElement::from_terms(self.terms.iter().map(|(alpha, c)| {
            let letters: Vec<usize> = alpha
                .iter()
                .enumerate()
                .flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize))
                .collect();
            (Word(letters), *c)
        }))
    }

    /// `Σ_{|α|=m} c_α ξ^α` for the order `m`.
    pub fn principal_symbol(&self, xi: &[f64]) -> Complex64 {
        let m = self.order();
        self.terms
            .iter()
            .filter(|(a, _)| a.iter().sum::<u32>() == m)
            .map(|(a, c)| {
                let mono: f64 = a.iter().zip(xi).map(|(&e, x)| x.powi(e as i32)).product();
                c * mono
            })
            .sum()
    }
}

fn multi_index(dim: usize, w: &Word) -> Vec<u32> {
    let mut a = vec![0u32; dim];
    for &l in &w.0 {
        a[l] += 1;
    }
    a
}

/// Rewrites every word into non-decreasing order using
/// `B_j B_i = B_i B_j + Σ_k c_{ji}^k B_k` at the leftmost descent.
pub fn pbw_normal_form(alg: &LieAlgebra, e: &EnvElement) -> Result<OrderedPoly> {
    e.validate(alg.dim())?;
    let d = alg.dim();
    let mut pending: BTreeMap<Word, Complex64> = e.terms.clone();
    let mut done = OrderedPoly::new(d);
    while let Some((w, c)) = pending.pop_first() {
        if c.norm() <= COEFF_EPS {
            continue;
        }
        match w.first_descent() {
            None => done.add_term(multi_index(d, &w), c),
            Some(p) => {
                let (j, i) = (w.0[p], w.0[p + 1]);
                let mut swapped = w.0.clone();
                swapped.swap(p, p + 1);
                *pending.entry(Word(swapped)).or_insert(linalg::ZERO) += c;
                for k in 0..d {
                    let s = alg.c(j, i, k);
                    if s != 0.0 {
                        let mut shorter = Vec::with_capacity(w.size() - 1);
                        shorter.extend_from_slice(&w.0[..p]);
                        shorter.push(k);
                        shorter.extend_from_slice(&w.0[p + 2..]);
                        *pending.entry(Word(shorter)).or_insert(linalg::ZERO) += c * s;
                    }
                }
            }
        }
    }
    Ok(done)
}

/// `B^u B^v − B^v B^u` as a sum of words of size `|u|+|v|−1`, one
/// bracket `[B_{u_i}, B_{v_j}]` per letter pair.
pub fn expand_ad_word(alg: &LieAlgebra, u: &Word, v: &Word) -> Result<EnvElement> {
    if u.0.is_empty() || v.0.is_empty() {
        return Err(Error::Invalid("expand_ad_word needs nonempty words".into()));
    }
    let d = alg.dim();
    EnvElement::from_terms([(u.clone(), linalg::ONE), (v.clone(), linalg::ONE)]).validate(d)?;
    let mut out = EnvElement::zero();
    for i in 0..u.size() {
        for j in 0..v.size() {
            for k in 0..d {
                let c = alg.c(u.0[i], v.0[j], k);
                if c == 0.0 {
                    continue;
                }
                // u_{<i} v_{<j} [u_i, v_j] v_{>j} u_{>i}
                let mut w = Vec::with_capacity(u.size() + v.size() - 1);
                w.extend_from_slice(&u.0[..i]);
                w.extend_from_slice(&v.0[..j]);
                w.push(k);
                w.extend_from_slice(&v.0[j + 1..]);
                w.extend_from_slice(&u.0[i + 1..]);
                out.add_term(Word(w), linalg::re(c));
            }
        }
    }
    let bound = d * u.size() * v.size();
    if out.len() > bound {
        return Err(Error::Internal(format!(
            "ad expansion has {} terms, more than d|u||v| = {bound}",
            out.len()
        )));
    }
    Ok(out)
}

/// Substitutes the representation matrices into every word.
pub fn word_eval(rep: &MatrixRep, e: &EnvElement) -> Result<CMat> {
    e.validate(rep.dim())?;
    let n = rep.space_dim();
    let mut out = linalg::zeros(n, n);
    for (w, c) in &e.terms {
        out += rep.monomial(&w.0) * *c;
    }
    Ok(out)
}

pub fn ordered_eval(rep: &MatrixRep, p: &OrderedPoly) -> Result<CMat> {
    if p.dim() != rep.dim() {
        return Err(Error::DimensionMismatch {
            what: "ordered polynomial".into(),
            expected: rep.dim(),
            got: p.dim(),
        });
    }
    word_eval(rep, &p.to_env_element())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipticity {
    pub order: u32,
    pub elliptic: bool,
    pub strongly_elliptic: bool,
    /// Minimizing direction on failure.
    pub witness: Option<Vec<f64>>,
    /// True when the verdicts come from the exact second-order path.
    pub exact: bool,
    pub min_abs_symbol: f64,
    pub min_re_symbol: f64,
    pub warnings: Vec<String>,
}

/// Ellipticity and strong ellipticity of the principal symbol.
pub fn ellipticity_check(p: &OrderedPoly, samples: usize) -> Ellipticity {
    let d = p.dim();
    let m = p.order();
    let mut warnings = Vec::new();
    let unit = |k: usize| {
        let mut v = vec![0.0; d];
        if d > 0 {
            v[k] = 1.0;
        }
        v
    };
    if p.is_zero() {
        return Ellipticity {
            order: 0,
            elliptic: false,
            strongly_elliptic: false,
            witness: Some(unit(0)),
            exact: true,
            min_abs_symbol: 0.0,
            min_re_symbol: 0.0,
            warnings: vec!["zero polynomial".into()],
        };
    }
    let sign = if m % 2 == 0 {
        if (m / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    } else {
        warnings.push(format!("order {m} is odd; strong ellipticity is declared false"));
        0.0
    };

    let points = sphere_points(d, samples);
    let mut min_abs = f64::INFINITY;
    let mut abs_arg = unit(0);
    let mut min_re = f64::INFINITY;
    let mut re_arg = unit(0);
    for xi in &points {
        let s = p.principal_symbol(xi);
        if s.norm() < min_abs {
            min_abs = s.norm();
            abs_arg = xi.clone();
        }
        let r = sign * s.re;
        if r < min_re {
            min_re = r;
            re_arg = xi.clone();
        }
    }
    let mut elliptic = min_abs > ELLIPTIC_TOL;
    let mut strongly = m % 2 == 0 && min_re > ELLIPTIC_TOL;
    let mut exact = false;
    let mut witness = if !strongly {
        Some(re_arg)
    } else if !elliptic {
        Some(abs_arg.clone())
    } else {
        None
    };
    if !elliptic {
        witness = Some(abs_arg);
    }

    if m == 2 {
        exact = true;
        let (re_s, im_s) = symmetric_parts(p);
        let re_eig = nalgebra::SymmetricEigen::new(re_s.clone());
        let im_eig = nalgebra::SymmetricEigen::new(im_s.clone());
        let (re_min, re_min_vec) = extreme_eigen(&re_eig, true);
        let (re_max, re_max_vec) = extreme_eigen(&re_eig, false);
        // (−1)·Re P = ξᵀ(−Re S)ξ: positive definite iff max eig(Re S) < 0
        strongly = -re_max > ELLIPTIC_TOL;
        min_re = -re_max;
        let re_definite = re_min > ELLIPTIC_TOL || re_max < -ELLIPTIC_TOL;
        let im_zero = im_s.iter().all(|v| v.abs() <= COEFF_EPS);
        let (im_min, _) = extreme_eigen(&im_eig, true);
        let (im_max, _) = extreme_eigen(&im_eig, false);
        let im_definite = im_min > ELLIPTIC_TOL || im_max < -ELLIPTIC_TOL;
        if re_definite || im_definite {
            elliptic = true;
        } else if im_zero {
            elliptic = false;
        } else {
            exact = false;
            warnings.push("complex indefinite second-order symbol; ellipticity decided by sampling".into());
        }
        witness = if !elliptic && im_zero {
            Some(isotropic_vector(re_min, &re_min_vec, re_max, &re_max_vec))
        } else if !strongly {
            Some(re_max_vec.clone())
        } else if !elliptic {
            witness
        } else {
            None
        };
    }

    Ellipticity {
        order: m,
        elliptic,
        strongly_elliptic: strongly,
        witness,
        exact,
        min_abs_symbol: min_abs,
        min_re_symbol: min_re,
        warnings,
    }
}

fn symmetric_parts(p: &OrderedPoly) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let d = p.dim();
    let mut re_s = nalgebra::DMatrix::zeros(d, d);
    let mut im_s = nalgebra::DMatrix::zeros(d, d);
    for (alpha, c) in p.terms() {
        if alpha.iter().sum::<u32>() != 2 {
            continue;
        }
        let idx: Vec<usize> = alpha
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize))
            .collect();
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            re_s[(i, i)] += c.re;
            im_s[(i, i)] += c.im;
        } else {
            re_s[(i, j)] += c.re / 2.0;
            re_s[(j, i)] += c.re / 2.0;
            im_s[(i, j)] += c.im / 2.0;
            im_s[(j, i)] += c.im / 2.0;
        }
    }
    (re_s, im_s)
}

fn extreme_eigen(e: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>, smallest: bool) -> (f64, Vec<f64>) {
    let mut best = 0;
    for i in 1..e.eigenvalues.len() {
        let better = if smallest {
            e.eigenvalues[i] < e.eigenvalues[best]
        } else {
            e.eigenvalues[i] > e.eigenvalues[best]
        };
        if better {
            best = i;
        }
    }
    let mut v: Vec<f64> = e.eigenvectors.column(best).iter().copied().collect();
    canonical_sign(&mut v);
    (e.eigenvalues[best], v)
}

fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    for x in v.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
}

/// A unit ξ with `ξᵀSξ = 0` for an indefinite or singular real symmetric S.
fn isotropic_vector(lo: f64, lo_vec: &[f64], hi: f64, hi_vec: &[f64]) -> Vec<f64> {
    if lo.abs() <= ELLIPTIC_TOL {
        return lo_vec.to_vec();
    }
    if hi.abs() <= ELLIPTIC_TOL {
        return hi_vec.to_vec();
    }
    let a = (-lo).max(0.0).sqrt();
    let b = hi.max(0.0).sqrt();
    let mut v: Vec<f64> = hi_vec.iter().zip(lo_vec).map(|(h, l)| a * h + b * l).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    canonical_sign(&mut v);
    v
}

/// Quasi-uniform points on the unit sphere of ℝ^d plus all ±e_k.
pub fn sphere_points(d: usize, samples: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[k] = s;
            pts.push(v);
        }
    }
    match d {
        0 | 1 => {}
        2 => {
            for i in 0..samples {
                let a = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                pts.push(vec![a.cos(), a.sin()]);
            }
        }
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..samples {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / samples as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                pts.push(vec![r * a.cos(), r * a.sin(), z]);
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5a3d);
            for _ in 0..samples {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
                pts.push(v.iter().map(|x| x / n).collect());
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::re;

    #[test]
    fn heisenberg_swap() {
        let h = fixtures::heisenberg();
        let e = EnvElement::monomial(&[1, 0], linalg::ONE);
        let nf = pbw_normal_form(&h, &e).unwrap();
        assert_eq!(nf.terms().len(), 2);
        assert_eq!(nf.terms()[&vec![1, 1, 0]], linalg::ONE);
        assert_eq!(nf.terms()[&vec![0, 0, 1]], re(-1.0));
        // cross-check on the 3×3 representation
        let rep = fixtures::heisenberg_rep3();
        let lhs = word_eval(&rep, &e).unwrap();
        let rhs = ordered_eval(&rep, &nf).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn ordered_word_is_fixed() {
        let h = fixtures::heisenberg();
        let nf = pbw_normal_form(&h, &EnvElement::monomial(&[0, 1], linalg::ONE)).unwrap();
        assert_eq!(nf.terms().len(), 1);
        assert_eq!(nf.terms()[&vec![1, 1, 0]], linalg::ONE);
    }

    #[test]
    fn commutator_normalizes_to_bracket() {
        let so3 = fixtures::so3();
        let e = EnvElement::from_terms([
            (Word(vec![0, 1]), linalg::ONE),
            (Word(vec![1, 0]), re(-1.0)),
        ]);
        let nf = pbw_normal_form(&so3, &e).unwrap();
        assert_eq!(nf.order(), 1);
        assert_eq!(nf.terms().len(), 1);
        assert_eq!(nf.terms()[&vec![0, 0, 1]], linalg::ONE);
    }

    #[test]
    fn ad_word_examples() {
        let ab = LieAlgebra::abelian(3);
        assert!(expand_ad_word(&ab, &Word(vec![0]), &Word(vec![1])).unwrap().is_empty());
        let h = fixtures::heisenberg();
        let e = expand_ad_word(&h, &Word(vec![0]), &Word(vec![1])).unwrap();
        assert_eq!(e, EnvElement::monomial(&[2], linalg::ONE));

        let so3 = fixtures::so3();
        let rep = fixtures::so3_spin(2).unwrap();
        let (u, v) = (Word(vec![0, 0]), Word(vec![1]));
        let e = expand_ad_word(&so3, &u, &v).unwrap();
        assert!(e.len() <= 3 * 2);
        assert!(e.size() <= 2);
        let b1 = rep.matrix(0);
        let b2 = rep.matrix(1);
        let direct = b1 * b1 * b2 - b2 * b1 * b1;
        let got = word_eval(&rep, &e).unwrap();
        assert!(linalg::frobenius(&(got - direct)) < 1e-13);
    }

    #[test]
    fn word_eval_examples() {
        let rep = fixtures::heisenberg_rep3();
        let id = word_eval(&rep, &EnvElement::monomial(&[], linalg::ONE)).unwrap();
        assert_eq!(id, linalg::identity(3));
        let e13 = word_eval(&rep, &EnvElement::monomial(&[0, 1], linalg::ONE)).unwrap();
        assert_eq!(e13, rep.matrix(2).clone());
    }

    #[test]
    fn ellipticity_examples() {
        let lap = OrderedPoly::minus_laplacian(2);
        let r = ellipticity_check(&lap, 256);
        assert!(r.elliptic && r.strongly_elliptic && r.exact);
        assert!(r.witness.is_none());

        let plus = OrderedPoly::from_terms(2, [(vec![2, 0], linalg::ONE), (vec![0, 2], linalg::ONE)]).unwrap();
        let r = ellipticity_check(&plus, 256);
        assert!(r.elliptic);
        assert!(!r.strongly_elliptic);

        let half = OrderedPoly::from_terms(2, [(vec![2, 0], re(-1.0))]).unwrap();
        let r = ellipticity_check(&half, 256);
        assert!(!r.elliptic && !r.strongly_elliptic);
        assert_eq!(r.witness, Some(vec![0.0, 1.0]));
    }

    #[test]
    fn fourth_order_by_sampling() {
        // (B1²+B2²)² is strongly elliptic: (−1)² |ξ|⁴ > 0
        let p = OrderedPoly::from_terms(
            2,
            [(vec![4, 0], linalg::ONE), (vec![2, 2], re(2.0)), (vec![0, 4], linalg::ONE)],
        )
        .unwrap();
        let r = ellipticity_check(&p, 512);
        assert!(r.strongly_elliptic && !r.exact);
        let odd = OrderedPoly::from_terms(2, [(vec![3, 0], linalg::ONE)]).unwrap();
        let r = ellipticity_check(&odd, 64);
        assert!(!r.strongly_elliptic);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn zero_polynomial_is_not_elliptic() {
        let r = ellipticity_check(&OrderedPoly::new(3), 16);
        assert!(!r.elliptic);
        assert!(r.witness.is_some());
    }
}
