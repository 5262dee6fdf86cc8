//! From Lie algebra representations to group representations: the
//! Baker–Campbell–Hausdorff series, group elements in coordinates of the
//! second kind, the two-sided exponentiability pipeline, and the
//! derivation and C*-seminorm checks on associative algebras.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::enveloping::{self, OrderedPoly, DEFAULT_SPHERE_SAMPLES};
use crate::error::{Error, Result};
use crate::lie::{AlgElement, LieAlgebra};
use crate::linalg::{self, CMat, CVec};
use crate::report::{Check, Outcome};
use crate::repspace::{
    self, DissipativityMode, MatrixRep, Seminorm, SeminormFamily, DEFAULT_SATURATION_DEPTH,
};
use crate::semigroup::{self, EquicontinuityMode};

pub const BCH_MAX_ORDER: usize = 6;
pub const HOMOMORPHISM_CONSTANT: f64 = 50.0;
pub const MAX_BCH_SCALE: f64 = 0.5;
pub const ASSOC_TOL: f64 = 1e-12;
pub const LEIBNIZ_TOL: f64 = 1e-10;
pub const AUTOMORPHISM_TOL: f64 = 1e-8;
pub const CSTAR_TOL: f64 = 1e-10;
pub const DEFAULT_CSTAR_SAMPLES: usize = 256;

type FreeElement = BTreeMap<Vec<u8>, f64>;

fn free_mul(a: &FreeElement, b: &FreeElement, max_degree: usize) -> FreeElement {
    let mut out = FreeElement::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_degree {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// Coefficients of `log(e^x e^y)` on words in `x = 0`, `y = 1`, through
/// degree [`BCH_MAX_ORDER`].
fn bch_words() -> &'static Vec<(Vec<u8>, f64)> {
    static WORDS: OnceLock<Vec<(Vec<u8>, f64)>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let n = BCH_MAX_ORDER;
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        // e^x e^y − 1
        let mut p = FreeElement::new();
        for a in 0..=n {
            for b in 0..=(n - a) {
                if a + b > 0 {
                    let mut w = vec![0u8; a];
                    w.extend(std::iter::repeat_n(1u8, b));
                    p.insert(w, 1.0 / (fact(a) * fact(b)));
                }
            }
        }
        let mut log = FreeElement::new();
        let mut power = p.clone();
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            for (w, c) in &power {
                *log.entry(w.clone()).or_insert(0.0) += sign * c / k as f64;
            }
            power = free_mul(&power, &p, n);
        }
        log.into_iter().filter(|(_, c)| c.abs() > 1e-15).collect()
    })
}

/// `Z(x, y) = log(e^x e^y)` truncated at `order`, each homogeneous part
/// mapped into the algebra by `w ↦ [..[[w_1, w_2], w_3].., w_n] / n`.
pub fn bch(alg: &LieAlgebra, x: &AlgElement, y: &AlgElement, order: usize) -> Result<AlgElement> {
    if !(2..=BCH_MAX_ORDER).contains(&order) {
        return Err(Error::Precondition(format!(
            "BCH order must lie in 2..={BCH_MAX_ORDER}, got {order}"
        )));
    }
    let d = alg.dim();
    for e in [x, y] {
        if e.dim() != d {
            return Err(Error::DimensionMismatch {
                what: "BCH argument".into(),
                expected: d,
                got: e.dim(),
            });
        }
    }
    let letters = [x, y];
    let mut z = AlgElement::zero(d);
    for (w, c) in bch_words() {
        if w.len() > order {
            continue;
        }
        let mut acc = letters[w[0] as usize].clone();
        for &l in &w[1..] {
            acc = alg.bracket(&acc, letters[l as usize])?;
        }
        z = &z + &(&acc * (c / w.len() as f64));
    }
    Ok(z)
}

/// `exp(t_1 B_1) ⋯ exp(t_d B_d)`.
pub fn group_element(rep: &MatrixRep, t: &[f64]) -> Result<CMat> {
    if t.len() != rep.dim() {
        return Err(Error::DimensionMismatch {
            what: "group coordinates".into(),
            expected: rep.dim(),
            got: t.len(),
        });
    }
    let mut g = linalg::identity(rep.space_dim());
    for (b, &tk) in rep.matrices().iter().zip(t) {
        g *= semigroup::expm(b, tk)?;
    }
    Ok(g)
}

/// Checks `e^X e^Y = e^{Z(X,Y)}` with the order-6 BCH series on random
/// pairs with coefficients in `[−scale, scale]`.
pub fn homomorphism_check(rep: &MatrixRep, samples: usize, scale: f64, seed: u64) -> Check {
    let name = "group_law";
    if !(scale > 0.0 && scale <= MAX_BCH_SCALE) {
        return Check::rejected(name, format!("BCH scale must lie in (0, {MAX_BCH_SCALE}], got {scale}"));
    }
    let bound = HOMOMORPHISM_CONSTANT * scale.powi(BCH_MAX_ORDER as i32 + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rep.dim();
    let mut worst: f64 = 0.0;
    let mut check = Check::new(name, Outcome::Pass).constant("bound", bound).constant("scale", scale);
    for s in 0..samples {
        let mut draw = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-scale..=scale)).collect() };
        let x = AlgElement::from_real(&draw());
        let y = AlgElement::from_real(&draw());
        let result = (|| -> Result<f64> {
            let z = bch(rep.algebra(), &x, &y, BCH_MAX_ORDER)?;
            let lhs = semigroup::expm(&rep.eval(&x)?, 1.0)? * semigroup::expm(&rep.eval(&y)?, 1.0)?;
            let rhs = semigroup::expm(&rep.eval(&z)?, 1.0)?;
            Ok(linalg::frobenius(&(lhs - rhs)))
        })();
        match result {
            Ok(r) => {
                if r > bound && check.witnesses.len() < 4 {
                    check = check.witness(json!({"sample": s, "residual": r}));
                }
                worst = worst.max(r);
            }
            Err(e) => return Check::rejected(name, e),
        }
    }
    check.outcome = Outcome::from_bool(worst <= bound);
    check.residual("max_residual", worst).constant("samples", samples as f64)
}

/// Knobs of [`check_exponentiability`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mu_grid: Vec<f64>,
    /// Times `[0, t_max]` for the contractive and isometric checks.
    pub t_max: f64,
    pub smoothing_grid: Vec<f64>,
    pub sphere_samples: usize,
    pub analytic_terms: usize,
    pub saturation_depth: usize,
    pub bch_samples: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mu_grid: repspace::default_mu_grid(),
            t_max: 4.0,
            smoothing_grid: semigroup::default_smoothing_grid(),
            sphere_samples: DEFAULT_SPHERE_SAMPLES,
            analytic_terms: 16,
            saturation_depth: DEFAULT_SATURATION_DEPTH,
            bch_samples: 16,
            seed: 0,
        }
    }
}

/// Outcome of the two-sided exponentiability check.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Standing hypotheses: strong ellipticity of `H_m`, dissipativity of `−H_m`.
    pub hypotheses: Vec<Check>,
    /// Conservativity of each `B_k`, contractive `S`, smoothing constants.
    pub condition2: Vec<Check>,
    /// Isometric one-parameter groups `e^{tB_k}` and the group law.
    pub condition1: Vec<Check>,
    /// Positive analytic radius on a spanning set.
    pub analytic: Check,
    pub hypotheses_hold: bool,
    pub condition1_holds: bool,
    pub condition2_holds: bool,
    /// The two conditions agree, or the hypotheses fail and nothing is claimed.
    pub consistent: bool,
}

fn all_pass(checks: &[Check]) -> bool {
    checks
        .iter()
        .all(|c| matches!(c.outcome, Outcome::Pass | Outcome::Skipped))
}

impl PipelineReport {
    pub fn to_check(&self) -> Check {
        let group = |name: &str, ok: bool, checks: &[Check]| {
            let mut c = Check::new(name, Outcome::from_bool(ok));
            c.children = checks.to_vec();
            c
        };
        let ok = self.hypotheses_hold && self.condition1_holds && self.condition2_holds;
        let mut top = Check::new("exponentiability", Outcome::from_bool(ok));
        if !self.consistent {
            top = top.note("condition (1) and condition (2) disagree although the hypotheses hold");
        }
        top.children = vec![
            group("hypotheses", self.hypotheses_hold, &self.hypotheses),
            group("condition_2", self.condition2_holds, &self.condition2),
            group("condition_1", self.condition1_holds, &self.condition1),
            self.analytic.clone(),
        ];
        top.constant("consistent", if self.consistent { 1.0 } else { 0.0 })
    }
}

/// Runs both sides of the characterization of exponentiable representations
/// with a strongly elliptic `H_m` on a saturated seminorm family.
pub fn check_exponentiability(
    rep: &MatrixRep,
    family: &SeminormFamily,
    hm_spec: &OrderedPoly,
    config: &PipelineConfig,
) -> Result<PipelineReport> {
    if family.space_dim() != rep.space_dim() {
        return Err(Error::DimensionMismatch {
            what: "seminorm family".into(),
            expected: rep.space_dim(),
            got: family.space_dim(),
        });
    }
    if hm_spec.dim() != rep.dim() {
        return Err(Error::DimensionMismatch {
            what: "elliptic operator".into(),
            expected: rep.dim(),
            got: hm_spec.dim(),
        });
    }
    let m = hm_spec.order();
    if m < 2 {
        return Err(Error::Precondition(format!("elliptic operator must have order >= 2, got {m}")));
    }
    let family = if family.saturated {
        family.clone()
    } else {
        repspace::saturate(family, config.saturation_depth)
    };
    let hm = enveloping::ordered_eval(rep, hm_spec)?;
    let minus_h = -&hm;
    let label = |k: usize| rep.labels().get(k).cloned().unwrap_or_else(|| format!("B{}", k + 1));

    let mut hypotheses = Vec::new();
    let ell = enveloping::ellipticity_check(hm_spec, config.sphere_samples);
    let mut ell_check = Check::new("strong_ellipticity", Outcome::from_bool(ell.strongly_elliptic))
        .constant("order", ell.order as f64)
        .constant("min_re_symbol", ell.min_re_symbol)
        .constant("min_abs_symbol", ell.min_abs_symbol);
    if let Some(w) = &ell.witness {
        ell_check = ell_check.witness(json!({ "xi": w }));
    }
    if !ell.exact {
        ell_check = ell_check.note("symbol sampled on the unit sphere");
    }
    for w in &ell.warnings {
        ell_check = ell_check.note(w.clone());
    }
    hypotheses.push(ell_check);
    if hm_spec.is_minus_laplacian() {
        hypotheses.push(
            Check::new("dissipativity_of_minus_h", Outcome::Skipped)
                .note("H is minus the sum of squares; dissipativity follows from conservativity"),
        );
    } else {
        let mut c = repspace::dissipativity_check(&minus_h, &family, DissipativityMode::Dissipative, &config.mu_grid);
        c.name = "dissipativity_of_minus_h".into();
        hypotheses.push(c);
    }

    let mut condition2 = Vec::new();
    for (k, b) in rep.matrices().iter().enumerate() {
        let mut c = repspace::dissipativity_check(b, &family, DissipativityMode::Conservative, &config.mu_grid);
        c.name = format!("conservativity[{}]", label(k));
        condition2.push(c);
    }
    let mut contractive = semigroup::equicontinuity_check(
        &minus_h,
        &family,
        (0.0, config.t_max),
        EquicontinuityMode::Contractive,
        None,
    );
    contractive.name = "contractive_semigroup".into();
    condition2.push(contractive);
    let smoothing = match semigroup::smoothing_fit(&hm, rep, &family, (m - 1) as usize, m, &config.smoothing_grid) {
        Ok(fit) => {
            let mut ok = true;
            let mut c = Check::new("smoothing_constants", Outcome::Pass).grid("t", &fit.t_grid);
            for (pi, cs) in fit.constants.iter().enumerate() {
                for (n, value) in cs.iter().enumerate().skip(1) {
                    ok &= value.is_finite();
                    c = c.constant(&format!("C[{pi}][{n}]"), *value);
                }
            }
            c.outcome = Outcome::from_bool(ok);
            c
        }
        Err(e) => Check::rejected("smoothing_constants", e),
    };
    condition2.push(smoothing);

    let mut condition1 = Vec::new();
    for (k, b) in rep.matrices().iter().enumerate() {
        let mut c = semigroup::equicontinuity_check(b, &family, (0.0, config.t_max), EquicontinuityMode::Isometric, None);
        c.name = format!("isometric_group[{}]", label(k));
        condition1.push(c);
    }
    condition1.push(homomorphism_check(rep, config.bch_samples, 0.2, config.seed));

    let mut analytic = Check::new("analytic_vectors", Outcome::Pass)
        .note("every vector is analytic in finite dimension; radii are recorded on a basis");
    let n = rep.space_dim();
    let mut min_radius = f64::INFINITY;
    for (k, b) in rep.matrices().iter().enumerate() {
        for i in 0..n {
            let mut x = CVec::zeros(n);
            x[i] = linalg::ONE;
            let r = repspace::analytic_radius(b, &x, &family, config.analytic_terms)?;
            for est in &r.per_seminorm {
                min_radius = min_radius.min(est.radius);
            }
            if !r.projective_analytic {
                analytic.outcome = Outcome::Fail;
                analytic = analytic.witness(json!({"operator": label(k), "basis_vector": i}));
            }
        }
    }
    analytic = analytic.constant("min_radius", min_radius);

    let hypotheses_hold = all_pass(&hypotheses);
    let condition1_holds = all_pass(&condition1);
    let condition2_holds = all_pass(&condition2);
    Ok(PipelineReport {
        hypotheses,
        condition2,
        condition1,
        analytic,
        hypotheses_hold,
        condition1_holds,
        condition2_holds,
        consistent: !hypotheses_hold || condition1_holds == condition2_holds,
    })
}

/// Finite-dimensional associative algebra with optional conjugate-linear
/// involution `a* = J·conj(a)`.
#[derive(Debug, Clone)]
pub struct AssocAlgebra {
    dim: usize,
    /// `m[(i·M + j)·M + k]`: coefficient of `e_k` in `e_i e_j`.
    mult: Vec<Complex64>,
    involution: Option<CMat>,
    unit: Option<usize>,
}

impl AssocAlgebra {
    pub fn new(dim: usize, mult: Vec<Complex64>, involution: Option<CMat>, unit: Option<usize>) -> Result<Self> {
        if mult.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                what: "multiplication tensor".into(),
                expected: dim * dim * dim,
                got: mult.len(),
            });
        }
        if let Some(j) = &involution {
            if j.nrows() != dim || j.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    what: "involution matrix".into(),
                    expected: dim,
                    got: j.nrows(),
                });
            }
        }
        if unit.is_some_and(|u| u >= dim) {
            return Err(Error::Invalid("unit index out of range".into()));
        }
        let alg = AssocAlgebra {
            dim,
            mult,
            involution,
            unit,
        };
        let v = alg.validate();
        if !v.passed() {
            return Err(Error::Invalid(format!(
                "associative algebra axioms fail: {:?}",
                v.residuals
            )));
        }
        Ok(alg)
    }

    /// `M_n(ℂ)` with basis `E_ij ↦ i·n + j` and `a* = conjugate transpose`.
    pub fn matrix_algebra(n: usize) -> Self {
        let dim = n * n;
        let mut mult = vec![linalg::ZERO; dim * dim * dim];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    // E_ij E_jl = E_il
                    let a = i * n + j;
                    let b = j * n + l;
                    mult[(a * dim + b) * dim + i * n + l] = linalg::ONE;
                }
            }
        }
        let involution = CMat::from_fn(dim, dim, |r, c| {
            let (i, j) = (c / n, c % n);
            if r == j * n + i {
                linalg::ONE
            } else {
                linalg::ZERO
            }
        });
        AssocAlgebra {
            dim,
            mult,
            involution: Some(involution),
            unit: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_involution(&self) -> bool {
        self.involution.is_some()
    }

    pub fn unit(&self) -> Option<usize> {
        self.unit
    }

    pub fn mul(&self, a: &CVec, b: &CVec) -> CVec {
        let m = self.dim;
        let mut out = CVec::zeros(m);
        for i in 0..m {
            if a[i] == linalg::ZERO {
                continue;
            }
            for j in 0..m {
                if b[j] == linalg::ZERO {
                    continue;
                }
                let ab = a[i] * b[j];
                let base = (i * m + j) * m;
                for k in 0..m {
                    let c = self.mult[base + k];
                    if c != linalg::ZERO {
                        out[k] += ab * c;
                    }
                }
            }
        }
        out
    }

    pub fn star(&self, a: &CVec) -> Option<CVec> {
        self.involution.as_ref().map(|j| j * a.map(|z| z.conj()))
    }

    fn basis(&self, k: usize) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[k] = linalg::ONE;
        v
    }

    pub fn validate(&self) -> Check {
        let m = self.dim;
        let mut assoc: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let ij = self.mul(&self.basis(i), &self.basis(j));
                for k in 0..m {
                    let left = self.mul(&ij, &self.basis(k));
                    let right = self.mul(&self.basis(i), &self.mul(&self.basis(j), &self.basis(k)));
                    assoc = assoc.max((left - right).norm());
                }
            }
        }
        let mut c = Check::new("associative_algebra", Outcome::Pass).residual("associativity", assoc);
        let mut ok = assoc <= ASSOC_TOL;
        if let Some(j) = &self.involution {
            let sq = j * j.map(|z| z.conj()) - linalg::identity(m);
            let invol = linalg::frobenius(&sq);
            let mut anti: f64 = 0.0;
            for a in 0..m {
                for b in 0..m {
                    let (ea, eb) = (self.basis(a), self.basis(b));
                    let lhs = self.star(&self.mul(&ea, &eb)).expect("involution present");
                    let rhs = self.mul(&self.star(&eb).expect("involution"), &self.star(&ea).expect("involution"));
                    anti = anti.max((lhs - rhs).norm());
                }
            }
            ok &= invol <= ASSOC_TOL && anti <= ASSOC_TOL;
            c = c.residual("involution_square", invol).residual("star_antimultiplicative", anti);
        }
        c.outcome = Outcome::from_bool(ok);
        c
    }

    /// Coordinate matrix of `a ↦ h a − a h`.
    pub fn inner_derivation(&self, h: &CVec) -> CMat {
        let m = self.dim;
        let mut out = linalg::zeros(m, m);
        for k in 0..m {
            let e = self.basis(k);
            let col = self.mul(h, &e) - self.mul(&e, h);
            out.set_column(k, &col);
        }
        out
    }

    /// Coordinate matrix of a linear map given on basis elements.
    pub fn linear_map(&self, f: impl Fn(&CVec) -> CVec) -> CMat {
        let m = self.dim;
        let mut out = linalg::zeros(m, m);
        for k in 0..m {
            out.set_column(k, &f(&self.basis(k)));
        }
        out
    }
}

/// Leibniz rule of `δ` and the automorphism property of `α_t = e^{tδ}`
/// (with the involution when `with_star`).
pub fn derivation_report(alg: &AssocAlgebra, delta: &CMat, t_grid: &[f64], with_star: bool) -> Check {
    let name = "derivation";
    let m = alg.dim();
    if delta.nrows() != m || delta.ncols() != m {
        return Check::rejected(name, format!("derivation must be {m}x{m}"));
    }
    if with_star && !alg.has_involution() {
        return Check::rejected(name, "star checks need an involution");
    }
    let basis: Vec<CVec> = (0..m).map(|k| alg.basis(k)).collect();
    // conjugate-linear maps are not determined by a real basis alone
    let star_probes: Vec<CVec> = basis
        .iter()
        .flat_map(|e| [e.clone(), e * linalg::I])
        .collect();

    let mut leibniz: f64 = 0.0;
    for a in &basis {
        for b in &basis {
            let lhs = delta * alg.mul(a, b);
            let rhs = alg.mul(&(delta * a), b) + alg.mul(a, &(delta * b));
            leibniz = leibniz.max((lhs - rhs).norm());
        }
    }
    let mut star_delta: f64 = 0.0;
    if with_star {
        for a in &star_probes {
            let lhs = delta * alg.star(a).expect("involution");
            let rhs = alg.star(&(delta * a)).expect("involution");
            star_delta = star_delta.max((lhs - rhs).norm());
        }
    }
    let leibniz_ok = leibniz <= LEIBNIZ_TOL && star_delta <= LEIBNIZ_TOL;
    let mut leibniz_check = Check::new("leibniz", Outcome::from_bool(leibniz_ok)).residual("leibniz", leibniz);
    if with_star {
        leibniz_check = leibniz_check.residual("star_commutation", star_delta);
    }

    let mut auto_check = Check::new("automorphism", Outcome::Pass).grid("t", t_grid);
    let mut worst: f64 = 0.0;
    let mut worst_star: f64 = 0.0;
    for &t in t_grid {
        let alpha = match semigroup::expm(delta, t) {
            Ok(a) => a,
            Err(e) => return Check::rejected(name, e),
        };
        for a in &basis {
            let aa = &alpha * a;
            for b in &basis {
                let ab = &alpha * alg.mul(a, b);
                let prod = alg.mul(&aa, &(&alpha * b));
                let scale = ab.norm().max(prod.norm()).max(1.0);
                let r = (&ab - &prod).norm() / scale;
                if r > worst {
                    worst = r;
                }
            }
        }
        if with_star {
            for a in &star_probes {
                let lhs = &alpha * alg.star(a).expect("involution");
                let rhs = alg.star(&(&alpha * a)).expect("involution");
                let scale = lhs.norm().max(rhs.norm()).max(1.0);
                worst_star = worst_star.max((lhs - rhs).norm() / scale);
            }
        }
    }
    auto_check = auto_check.residual("automorphism", worst);
    if with_star {
        auto_check = auto_check.residual("star_automorphism", worst_star);
    }
    auto_check.outcome = Outcome::from_bool(worst <= AUTOMORPHISM_TOL && worst_star <= AUTOMORPHISM_TOL);

    let outcome = if !leibniz_ok {
        Outcome::Rejected
    } else {
        auto_check.outcome
    };
    let mut top = Check::new(name, outcome);
    if !leibniz_ok {
        top = top.note("not a derivation: the Leibniz rule fails");
    }
    top.children = vec![leibniz_check, auto_check];
    top
}

/// Seminorms on an associative algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraSeminorm {
    /// Operator norm of the `n×n` matrix whose row-major entries are the coordinates.
    Operator { size: usize },
    /// A coordinate seminorm (Frobenius is `Seminorm::l2(n²)`).
    Coordinate(Seminorm),
}

impl AlgebraSeminorm {
    pub fn eval(&self, a: &CVec) -> f64 {
        match self {
            AlgebraSeminorm::Operator { size } => {
                let m = CMat::from_fn(*size, *size, |i, j| a[i * size + j]);
                linalg::spectral_norm(&m)
            }
            AlgebraSeminorm::Coordinate(p) => p.eval(a),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgebraSeminorm::Operator { .. } => "operator",
            AlgebraSeminorm::Coordinate(p) => p.kind_name(),
        }
    }
}

/// Checks `p(ab) ≤ p(a)p(b)`, `p(a*) = p(a)` and `p(a*a) = p(a)²` on basis
/// elements, sums of basis pairs and random elements.
pub fn cstar_seminorm_check(alg: &AssocAlgebra, family: &[AlgebraSeminorm], samples: usize, seed: u64) -> Check {
    let name = "cstar_seminorms";
    if !alg.has_involution() {
        return Check::rejected(name, "C*-seminorm axioms need an involution");
    }
    let m = alg.dim();
    let mut elements: Vec<CVec> = Vec::new();
    for i in 0..m {
        elements.push(alg.basis(i));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            elements.push(alg.basis(i) + alg.basis(j));
        }
    }
    let structured = elements.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    elements.extend(repspace::random_vectors(&mut rng, m, samples));
    let mut top = Check::new(name, Outcome::Pass);
    for (pi, p) in family.iter().enumerate() {
        let mut worst = [0.0f64; 3];
        let mut worst_at = [0usize; 3];
        // the first failing basis element or basis-pair sum is the cleanest witness
        let mut first_structured: [Option<usize>; 3] = [None; 3];
        let pairs = elements.len();
        for (idx, a) in elements.iter().enumerate() {
            let pa = p.eval(a);
            let a_star = alg.star(a).expect("involution");
            let b = &elements[(idx * 7 + 3) % pairs];
            let pb = p.eval(b);
            let scale = (pa * pb).max(1.0);
            let viol = [
                ((p.eval(&alg.mul(a, b)) - pa * pb) / scale).max(0.0),
                (p.eval(&a_star) - pa).abs() / pa.max(1.0),
                (p.eval(&alg.mul(&a_star, a)) - pa * pa).abs() / (pa * pa).max(1.0),
            ];
            for k in 0..3 {
                if viol[k] > worst[k] {
                    worst[k] = viol[k];
                    worst_at[k] = idx;
                }
                if idx < structured && viol[k] > CSTAR_TOL && first_structured[k].is_none() {
                    first_structured[k] = Some(idx);
                }
            }
        }
        let witness: Vec<usize> = (0..3).map(|k| first_structured[k].unwrap_or(worst_at[k])).collect();
        let mut child = Check::new(format!("{}[{pi}]", p.name()), Outcome::Pass);
        for (k, axiom) in ["submultiplicative", "star_isometric", "cstar_identity"].iter().enumerate() {
            let ok = worst[k] <= CSTAR_TOL;
            let mut ax = Check::new(*axiom, Outcome::from_bool(ok)).residual("worst_violation", worst[k]);
            if !ok {
                let w = witness[k];
                let a = &elements[w];
                ax = ax.witness(json!({
                    "element": a.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "structured": w < structured,
                }));
            }
            if !ok {
                child.outcome = Outcome::Fail;
            }
            child.children.push(ax);
        }
        if child.outcome != Outcome::Pass {
            top.outcome = Outcome::Fail;
        }
        top.children.push(child);
    }
    top.constant("elements", elements.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn so3_elem(v: [f64; 3]) -> AlgElement {
        AlgElement::from_real(&v)
    }

    #[test]
    fn bch_low_order_coefficients() {
        let words = bch_words();
        let coef = |w: &[u8]| words.iter().find(|(x, _)| x == w).map_or(0.0, |(_, c)| *c);
        assert_eq!(coef(&[0]), 1.0);
        assert_eq!(coef(&[1]), 1.0);
        assert!((coef(&[0, 1]) - 0.5).abs() < 1e-15);
        assert!((coef(&[1, 0]) + 0.5).abs() < 1e-15);
        // degree 3: [x,[x,y]]/12 − [y,[x,y]]/12 gives x²y coefficient 1/12
        assert!((coef(&[0, 0, 1]) - 1.0 / 12.0).abs() < 1e-15);
        assert!((coef(&[0, 1, 0]) + 1.0 / 6.0).abs() < 1e-15);

        // the mapped series in so(3) against the classical terms through order 4
        let alg = fixtures::so3();
        let x = so3_elem([0.3, -0.1, 0.2]);
        let y = so3_elem([-0.2, 0.25, 0.1]);
        let br = |a: &AlgElement, b: &AlgElement| alg.bracket(a, b).unwrap();
        let xy = br(&x, &y);
        let want = &(&(&x + &y) + &(&xy * 0.5))
            + &(&(&(&br(&x, &xy) * (1.0 / 12.0)) - &(&br(&y, &xy) * (1.0 / 12.0)))
                - &(&br(&y, &br(&x, &xy)) * (1.0 / 24.0)));
        let got = bch(&alg, &x, &y, 4).unwrap();
        assert!((got.0 - want.0).norm() < 1e-15);
    }

    #[test]
    fn bch_examples() {
        let alg = fixtures::so3();
        let x = so3_elem([0.1, 0.2, 0.3]);
        let zero = AlgElement::zero(3);
        assert_eq!(bch(&alg, &x, &zero, 6).unwrap(), x);
        let ab = LieAlgebra::abelian(2);
        let (u, v) = (AlgElement::from_real(&[1.0, 2.0]), AlgElement::from_real(&[-0.5, 0.7]));
        for order in 2..=6 {
            assert_eq!(bch(&ab, &u, &v, order).unwrap(), &u + &v);
        }
        let h = fixtures::heisenberg();
        let (s, t) = (0.7, -1.3);
        let z = bch(&h, &so3_elem([s, 0.0, 0.0]), &so3_elem([0.0, t, 0.0]), 6).unwrap();
        assert!((z.0 - so3_elem([s, t, s * t / 2.0]).0).norm() < 1e-15);
        assert!(bch(&alg, &x, &x, 7).is_err());
    }

    #[test]
    fn bch_truncation_order() {
        let alg = fixtures::so3();
        let dir_x = so3_elem([0.6, -0.3, 0.5]);
        let dir_y = so3_elem([-0.4, 0.7, 0.2]);
        for k in 2..6 {
            let scales = [0.05, 0.1, 0.2];
            let diffs: Vec<f64> = scales
                .iter()
                .map(|&s| {
                    let (x, y) = (&dir_x * s, &dir_y * s);
                    let a = bch(&alg, &x, &y, k).unwrap();
                    let b = bch(&alg, &x, &y, k + 1).unwrap();
                    (a.0 - b.0).norm()
                })
                .collect();
            if diffs.iter().all(|d| *d < 1e-17) {
                continue;
            }
            let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
            let ys: Vec<f64> = diffs.iter().map(|d| d.ln()).collect();
            let (_, slope, _) = linalg::linear_fit(&xs, &ys).unwrap();
            assert!(slope >= k as f64 + 0.5, "order {k}: slope {slope}");
        }
    }

    #[test]
    fn group_element_examples() {
        let h = fixtures::heisenberg_rep3();
        assert_eq!(group_element(&h, &[0.0; 3]).unwrap(), linalg::identity(3));
        let g = group_element(&h, &[1.0, 1.0, 0.0]).unwrap();
        let want = linalg::from_real(3, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(linalg::frobenius(&(g - want)) < 1e-14);
        let so3 = fixtures::so3_spin(2).unwrap();
        let t = [0.3, -0.8, 1.1];
        let g = group_element(&so3, &t).unwrap();
        let mut inv = linalg::identity(3);
        for k in (0..3).rev() {
            inv *= semigroup::expm(so3.matrix(k), -t[k]).unwrap();
        }
        assert!(linalg::frobenius(&(g * inv - linalg::identity(3))) < 1e-10);
        assert!(group_element(&so3, &[1.0]).is_err());
    }

    #[test]
    fn homomorphism_examples() {
        let ab = fixtures::abelian_diag_skew(3, 4);
        let c = homomorphism_check(&ab, 20, 0.5, 1);
        assert!(c.passed() && c.residuals["max_residual"] <= 1e-12);
        let h = fixtures::heisenberg_rep3();
        let c = homomorphism_check(&h, 20, 0.5, 2);
        assert!(c.residuals["max_residual"] <= 1e-12, "{c:?}");
        let so3 = fixtures::so3_spin(2).unwrap();
        let c = homomorphism_check(&so3, 20, 0.2, 3);
        assert!(c.passed());
        assert!(c.residuals["max_residual"] <= 1e-5);
        assert_eq!(homomorphism_check(&so3, 4, 0.8, 3).outcome, Outcome::Rejected);
    }

    #[test]
    fn pipeline_so3_passes() {
        for two_j in [1, 2, 4, 6] {
            let rep = fixtures::so3_spin(two_j).unwrap();
            let fam = SeminormFamily::single(Seminorm::l2(two_j + 1));
            let r = check_exponentiability(&rep, &fam, &OrderedPoly::minus_laplacian(3), &PipelineConfig::default()).unwrap();
            assert!(r.condition1_holds && r.condition2_holds && r.hypotheses_hold, "{:#?}", r.to_check());
            assert!(r.consistent);
            assert!(r.to_check().passed());
        }
    }

    #[test]
    fn pipeline_non_skew_fails_both() {
        let b = linalg::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let rep = MatrixRep::new(LieAlgebra::abelian(1), vec![b]).unwrap();
        let fam = SeminormFamily::single(Seminorm::l2(2));
        let r = check_exponentiability(&rep, &fam, &OrderedPoly::minus_laplacian(1), &PipelineConfig::default()).unwrap();
        assert!(!r.condition1_holds && !r.condition2_holds);
        assert!(r.consistent);
        let failing: Vec<_> = r.condition2.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
        assert!(failing.iter().any(|n| n.starts_with("conservativity")), "{failing:?}");
        assert_eq!(r.condition1[0].outcome, Outcome::Fail);
    }

    #[test]
    fn pipeline_abelian_passes() {
        let rep = fixtures::abelian_diag_skew(2, 4);
        let fam = SeminormFamily::single(Seminorm::l2(4));
        let r = check_exponentiability(&rep, &fam, &OrderedPoly::minus_laplacian(2), &PipelineConfig::default()).unwrap();
        assert!(r.to_check().passed());
    }

    #[test]
    fn matrix_algebra_is_valid() {
        for n in 1..=3 {
            let a = AssocAlgebra::matrix_algebra(n);
            assert!(a.validate().passed());
        }
        assert!(AssocAlgebra::new(2, vec![linalg::ZERO; 7], None, None).is_err());
    }

    #[test]
    fn derivation_examples() {
        let m2 = AssocAlgebra::matrix_algebra(2);
        let grid = linalg::linspace(-2.0, 2.0, 9);
        let zero = derivation_report(&m2, &linalg::zeros(4, 4), &grid, true);
        assert!(zero.passed());
        assert_eq!(zero.children[1].residuals["automorphism"], 0.0);

        let h = CVec::from_vec(vec![linalg::ONE, linalg::ZERO, linalg::ZERO, -linalg::ONE]);
        let inner = m2.inner_derivation(&h);
        let r = derivation_report(&m2, &inner, &grid, false);
        assert!(r.passed(), "{r:?}");
        assert!(r.children[0].residuals["leibniz"] <= 1e-12);
        assert!(r.children[1].residuals["automorphism"] <= 1e-10);
        // a Hermitian h gives a derivation that is not a *-derivation
        let r = derivation_report(&m2, &inner, &grid, true);
        assert_eq!(r.outcome, Outcome::Rejected);
        let ih = h * linalg::I;
        let r = derivation_report(&m2, &m2.inner_derivation(&ih), &grid, true);
        assert!(r.passed(), "{r:?}");

        let transpose = m2.linear_map(|a| CVec::from_vec(vec![a[0], a[2], a[1], a[3]]));
        let r = derivation_report(&m2, &transpose, &grid, false);
        assert_eq!(r.outcome, Outcome::Rejected);
        assert!(r.children[0].residuals["leibniz"] > 0.5);
        assert!(r.children[1].residuals["automorphism"] > 1e-3);
    }

    #[test]
    fn cstar_examples() {
        let m2 = AssocAlgebra::matrix_algebra(2);
        let op = cstar_seminorm_check(&m2, &[AlgebraSeminorm::Operator { size: 2 }], 64, 1);
        assert!(op.passed(), "{op:?}");
        let fro = cstar_seminorm_check(&m2, &[AlgebraSeminorm::Coordinate(Seminorm::l2(4))], 64, 1);
        assert_eq!(fro.outcome, Outcome::Fail);
        let axioms = &fro.children[0].children;
        assert!(axioms[0].passed() && axioms[1].passed());
        assert_eq!(axioms[2].outcome, Outcome::Fail);
        assert_eq!(axioms[2].witnesses[0]["structured"], true);
        // E11 + E12 and E11 + E21 are rank one and satisfy (iii); the identity does not
        assert_eq!(axioms[2].witnesses[0]["element"], json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]));
        // a = 0 satisfies every axiom
        let zero = CVec::zeros(4);
        let p = AlgebraSeminorm::Coordinate(Seminorm::l2(4));
        assert_eq!(p.eval(&m2.mul(&m2.star(&zero).unwrap(), &zero)), 0.0);
    }

    #[test]
    fn rank_one_frobenius_element_satisfies_cstar_identity() {
        let m2 = AssocAlgebra::matrix_algebra(2);
        let p = AlgebraSeminorm::Coordinate(Seminorm::l2(4));
        let a = CVec::from_vec(vec![linalg::ONE, linalg::ONE, linalg::ZERO, linalg::ZERO]);
        let lhs = p.eval(&m2.mul(&m2.star(&a).unwrap(), &a));
        assert!((lhs - p.eval(&a).powi(2)).abs() < 1e-14);
        let id = CVec::from_vec(vec![linalg::ONE, linalg::ZERO, linalg::ZERO, linalg::ONE]);
        let lhs = p.eval(&m2.mul(&m2.star(&id).unwrap(), &id));
        assert!((lhs - 2f64.sqrt()).abs() < 1e-14);
    }
}
