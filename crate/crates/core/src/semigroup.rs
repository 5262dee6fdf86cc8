//! One-parameter semigroups of matrices and their estimates: exponentials,
//! resolvents, the Yosida approximation, semigroup type, equicontinuity,
//! and the smoothing and graph estimates of strongly elliptic generators.
//!
//! Every supremum over a continuous parameter is taken over an explicit
//! grid that is echoed back in the result.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::report::{Check, Outcome};
use crate::repspace::{self, GaugeNorm, MatrixRep, SeminormFamily};

/// Above this size of `‖tA‖` the exponential is refused unless a
/// logarithmic norm shows the result stays bounded.
pub const EXPM_RANGE_LIMIT: f64 = 700.0;
pub const EQUICONTINUITY_TOL: f64 = 1e-9;
pub const LAPLACE_MARGIN: f64 = 0.1;
pub const DIRECT_SINGULAR_TOL: f64 = 1e-10;
pub const CONDITION_WARNING: f64 = 1e12;
pub const GRAPH_ESTIMATE_CAP: f64 = 1e6;
pub const DEFAULT_GRAPH_SAMPLES: usize = 256;
const LAPLACE_NODES: usize = 16;
const LAPLACE_MAX_PANELS: usize = 2_000_000;

/// `e^{tA}` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMat, t: f64) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "generator (rows vs columns)".into(),
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if !t.is_finite() || a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Invalid("matrix exponential needs finite entries".into()));
    }
    let ta = a * linalg::re(t);
    let norm = linalg::one_norm(&ta);
    if norm > EXPM_RANGE_LIMIT {
        let log_norm = linalg::log_norm_one(&ta).min(log_norm_two(&ta));
        if log_norm > EXPM_RANGE_LIMIT {
            return Err(Error::ExpRange { norm, log_norm });
        }
    }
    linalg::expm_pade13(&ta)
}

/// Logarithmic norm for the spectral norm: the top eigenvalue of `(A + A*)/2`.
pub fn log_norm_two(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let h = (a + a.adjoint()) * linalg::re(0.5);
    h.symmetric_eigenvalues().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Group,
}

/// `t ↦ e^{tA}` with cached unitary diagonalization for normal `A`.
#[derive(Debug, Clone)]
pub struct SemigroupHandle {
    generator: CMat,
    direction: Direction,
    eigen: Option<(CMat, Vec<Complex64>)>,
}

impl SemigroupHandle {
    pub fn new(generator: CMat, direction: Direction) -> Result<Self> {
        if !generator.is_square() {
            return Err(Error::DimensionMismatch {
                what: "generator (rows vs columns)".into(),
                expected: generator.nrows(),
                got: generator.ncols(),
            });
        }
        let eigen = if generator.nrows() > 0 && linalg::is_normal(&generator, 1e-12) {
            linalg::schur(&generator)
                .ok()
                .map(|(q, t)| (q, t.diagonal().iter().copied().collect()))
        } else {
            None
        };
        Ok(SemigroupHandle {
            generator,
            direction,
            eigen,
        })
    }

    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    pub fn is_normal(&self) -> bool {
        self.eigen.is_some()
    }

    pub fn evaluate(&self, t: f64) -> Result<CMat> {
        if self.direction == Direction::Forward && t < 0.0 {
            return Err(Error::Precondition(format!(
                "semigroup evaluated at negative time {t}"
            )));
        }
        match &self.eigen {
            Some((q, lambdas)) => {
                let mut scaled = q.clone();
                for (j, l) in lambdas.iter().enumerate() {
                    let e = (l * t).exp();
                    if !e.re.is_finite() || !e.im.is_finite() {
                        return Err(Error::ExpRange {
                            norm: l.norm() * t.abs(),
                            log_norm: l.re * t,
                        });
                    }
                    let mut col = scaled.column_mut(j);
                    col *= e;
                }
                Ok(scaled * q.adjoint())
            }
            None => expm(&self.generator, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventMethod {
    Direct,
    Laplace,
}

#[derive(Debug, Clone)]
pub struct Resolvent {
    pub matrix: CMat,
    /// Spectral condition number of `λI − A` (direct method only).
    pub condition: Option<f64>,
    pub panels: usize,
    pub warnings: Vec<String>,
}

/// `R(λ, A) = (λI − A)^{-1}`, directly or as the Laplace transform of `e^{tA}`.
pub fn resolvent(a: &CMat, lambda: Complex64, method: ResolventMethod) -> Result<Resolvent> {
    let n = a.nrows();
    let shifted = linalg::identity(n) * lambda - a;
    match method {
        ResolventMethod::Direct => {
            let spectrum = linalg::eigenvalues(a)?;
            let dist = linalg::distance_to_spectrum(&spectrum, lambda);
            if dist <= DIRECT_SINGULAR_TOL {
                return Err(Error::Singular(format!(
                    "lambda = {lambda} lies within {dist:e} of the spectrum"
                )));
            }
            let inv = linalg::inverse(&shifted).ok_or_else(|| {
                Error::Singular(format!("lambda I - A is not invertible at lambda = {lambda}"))
            })?;
            let condition = linalg::spectral_norm(&shifted) * linalg::spectral_norm(&inv);
            let mut warnings = Vec::new();
            if condition > CONDITION_WARNING {
                warnings.push(format!("ill-conditioned resolvent: condition number {condition:e}"));
            }
            Ok(Resolvent {
                matrix: inv,
                condition: Some(condition),
                panels: 0,
                warnings,
            })
        }
        ResolventMethod::Laplace => laplace_resolvent(a, lambda),
    }
}

/// Compound Gauss–Legendre quadrature of `∫₀^∞ e^{t(A−λ)} dt`. Every panel
/// has the same width `h`, so the panel integral `P` is computed once and
/// the sum is `Σ_k e^{kh(A−λ)} P`.
fn laplace_resolvent(a: &CMat, lambda: Complex64) -> Result<Resolvent> {
    let n = a.nrows();
    let abscissa = linalg::spectral_abscissa(a)?;
    if lambda.re <= abscissa + LAPLACE_MARGIN {
        return Err(Error::Precondition(format!(
            "Laplace resolvent needs Re lambda > type bound {abscissa} + {LAPLACE_MARGIN}, got {}",
            lambda.re
        )));
    }
    let m = a - linalg::identity(n) * lambda;
    let h = 2.0 / linalg::one_norm(&m).max(1.0);
    let (nodes, weights) = linalg::gauss_legendre(LAPLACE_NODES);
    let mut panel = linalg::zeros(n, n);
    for (x, w) in nodes.iter().zip(&weights) {
        panel += expm(&m, 0.5 * h * (x + 1.0))? * linalg::re(0.5 * h * w);
    }
    let step = expm(&m, h)?;
    let mut power = linalg::identity(n);
    let mut sum = linalg::zeros(n, n);
    let mut panels = 0;
    // transient growth can precede decay, so a small contribution only
    // ends the sum once the propagator itself is negligible
    loop {
        let contribution = &power * &panel;
        sum += &contribution;
        panels += 1;
        power = &power * &step;
        let scale = linalg::frobenius(&sum).max(1e-300);
        if linalg::frobenius(&power) * linalg::frobenius(&panel) < 1e-18 * scale {
            break;
        }
        if panels >= LAPLACE_MAX_PANELS {
            return Err(Error::Internal("Laplace quadrature did not reach its tail".into()));
        }
    }
    Ok(Resolvent {
        matrix: sum,
        condition: None,
        panels,
        warnings: Vec::new(),
    })
}

/// `exp(t·n·((I − A/n)^{-1} − I))`, the exponential of the Yosida approximant.
pub fn yosida_approx(a: &CMat, t: f64, n: usize) -> Result<CMat> {
    if n == 0 {
        return Err(Error::Precondition("Yosida index must be positive".into()));
    }
    let size = a.nrows();
    let nf = n as f64;
    let m = linalg::identity(size) - a * linalg::re(1.0 / nf);
    let singular = || -> Error {
        let spectrum = linalg::eigenvalues(a).unwrap_or_default();
        let worst = spectrum
            .iter()
            .copied()
            .min_by(|x, y| (x - nf).norm().total_cmp(&(y - nf).norm()))
            .unwrap_or(linalg::ZERO);
        Error::Singular(format!(
            "I - A/{n} is singular: eigenvalue {worst} of A sits at {n}"
        ))
    };
    if linalg::min_singular(&m) <= 1e-12 * linalg::spectral_norm(&m).max(1.0) {
        return Err(singular());
    }
    let inv = linalg::inverse(&m).ok_or_else(singular)?;
    let gen = (inv - linalg::identity(size)) * linalg::re(nf);
    expm(&gen, t)
}

/// Per-seminorm types `w_p` and the bounded type `w = max_p w_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeData {
    pub per_seminorm: Vec<f64>,
    /// Whether `w_p` is the exact spectral value rather than a grid minimum.
    pub exact: Vec<bool>,
    pub bounded_type: f64,
    pub t_grid: Vec<f64>,
}

pub fn default_type_grid() -> Vec<f64> {
    linalg::log_spaced(1e-2, 1e2, 8)
}

/// `w_p = inf_t (1/t) log ‖e^{tA}‖_p` over `t_grid`, exact for normal
/// quotient generators under ℓ2 gauges.
pub fn semigroup_type(a: &CMat, family: &SeminormFamily, t_grid: &[f64]) -> Result<TypeData> {
    let ts: Vec<f64> = t_grid.iter().copied().filter(|t| *t > 0.0).collect();
    if ts.is_empty() {
        return Err(Error::Precondition("type grid needs a positive time".into()));
    }
    let handle = SemigroupHandle::new(a.clone(), Direction::Forward)?;
    let mut per_seminorm = Vec::new();
    let mut exact = Vec::new();
    for p in &family.entries {
        p.kip(a).map_err(|(kernel_index, residual)| Error::Kip {
            kernel_index,
            residual,
        })?;
        if let Some(g) = p.gauge().filter(|g| g.norm == GaugeNorm::L2) {
            let q = g.conjugate(a);
            if q.nrows() == 0 {
                per_seminorm.push(f64::NEG_INFINITY);
                exact.push(true);
                continue;
            }
            if linalg::is_normal(&q, 1e-12) {
                per_seminorm.push(linalg::spectral_abscissa(&q)?);
                exact.push(true);
                continue;
            }
        }
        let mut w = f64::INFINITY;
        for &t in &ts {
            let norm = p.induced_norm(&handle.evaluate(t)?)?.value;
            w = w.min(norm.ln() / t);
        }
        per_seminorm.push(w);
        exact.push(false);
    }
    let bounded_type = per_seminorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TypeData {
        per_seminorm,
        exact,
        bounded_type,
        t_grid: ts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquicontinuityMode {
    Equicontinuous,
    Contractive,
    Isometric,
}

/// 32 log-spaced plus 32 evenly spaced times in `[lo, hi]`, sorted.
pub fn default_time_grid(lo: f64, hi: f64) -> Vec<f64> {
    let log_lo = if lo > 0.0 { lo } else { hi * 1e-3 };
    let mut ts: Vec<f64> = Vec::with_capacity(64);
    if hi > log_lo {
        let ratio = (hi / log_lo).ln();
        ts.extend((0..31).map(|i| log_lo * (ratio * i as f64 / 31.0).exp()));
        ts.push(hi);
    }
    ts.extend(linalg::linspace(lo, hi, 32));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));
    ts
}

/// Checks `p(e^{tA}x) ≤ M_p q(x)` (or the contractive and isometric special
/// cases) for every seminorm on a time grid.
pub fn equicontinuity_check(
    a: &CMat,
    family: &SeminormFamily,
    t_range: (f64, f64),
    mode: EquicontinuityMode,
    t_grid: Option<&[f64]>,
) -> Check {
    let name = match mode {
        EquicontinuityMode::Equicontinuous => "equicontinuity",
        EquicontinuityMode::Contractive => "contractive_equicontinuity",
        EquicontinuityMode::Isometric => "isometric_equicontinuity",
    };
    let ts: Vec<f64> = match t_grid {
        Some(g) => g.to_vec(),
        None => default_time_grid(t_range.0.max(0.0), t_range.1),
    };
    if ts.is_empty() || ts.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Check::rejected(name, "time grid must be nonempty, finite and nonnegative");
    }
    let handle = match SemigroupHandle::new(a.clone(), Direction::Group) {
        Ok(h) => h,
        Err(e) => return Check::rejected(name, e),
    };
    let mut times: Vec<f64> = ts.clone();
    if mode == EquicontinuityMode::Isometric {
        times.extend(ts.iter().map(|t| -t));
    }
    let ops: Vec<Result<CMat>> = times.par_iter().map(|&t| handle.evaluate(t)).collect();
    let mut ops_ok = Vec::with_capacity(ops.len());
    for (t, op) in times.iter().zip(ops) {
        match op {
            Ok(m) => ops_ok.push(m),
            Err(e) => return Check::rejected(name, format!("t = {t}: {e}")),
        }
    }
    let mut check = Check::new(name, Outcome::Pass)
        .grid("t", &ts)
        .note("continuum over t replaced by the listed grid");
    let mut all_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for (pi, p) in family.entries.iter().enumerate() {
        match mode {
            EquicontinuityMode::Contractive | EquicontinuityMode::Isometric => {
                let mut sup: f64 = 0.0;
                let mut inexact = false;
                for (t, op) in times.iter().zip(&ops_ok) {
                    let v = match p.induced_norm(op) {
                        Ok(v) => v,
                        Err(e) => {
                            all_ok = false;
                            check = check.witness(json!({"seminorm": pi, "t": t, "error": e.to_string()}));
                            sup = f64::INFINITY;
                            break;
                        }
                    };
                    inexact |= !v.exact;
                    sup = sup.max(v.value);
                    if v.value > 1.0 + EQUICONTINUITY_TOL {
                        all_ok = false;
                        if check.witnesses.len() < 8 {
                            check = check.witness(json!({"seminorm": pi, "t": t, "norm": v.value}));
                        }
                    }
                }
                worst_excess = worst_excess.max(sup - 1.0);
                check = check.constant(&format!("sup_norm[{pi}]"), sup);
                if inexact {
                    check = check.note(format!("seminorm {pi}: norms are upper bounds"));
                }
            }
            EquicontinuityMode::Equicontinuous => {
                let mut order: Vec<usize> = vec![pi];
                order.extend((0..family.len()).filter(|&q| q != pi));
                let mut found = None;
                for qi in order {
                    let q = &family.entries[qi];
                    let mut sup: f64 = 0.0;
                    let mut finite = true;
                    for op in &ops_ok {
                        match p.mixed_norm(op, q) {
                            Some(v) => sup = sup.max(v.value),
                            None => {
                                finite = false;
                                break;
                            }
                        }
                    }
                    if finite && sup.is_finite() {
                        found = Some((qi, sup));
                        break;
                    }
                }
                match found {
                    Some((qi, m)) => {
                        check = check
                            .constant(&format!("M[{pi}]"), m)
                            .constant(&format!("partner[{pi}]"), qi as f64);
                    }
                    None => {
                        all_ok = false;
                        check = check.witness(json!({"seminorm": pi, "partner": null}));
                    }
                }
            }
        }
    }
    if mode != EquicontinuityMode::Equicontinuous {
        check = check.residual("worst_excess_over_one", worst_excess);
    }
    check.outcome = Outcome::from_bool(all_ok);
    check
}

/// Smoothing constants `C_{p,n}` and the fitted form `K·Lⁿ·n!`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingFit {
    /// `constants[p][n]` for `n = 0..=n_max`.
    pub constants: Vec<Vec<f64>>,
    /// Grid time at which each constant is attained.
    pub argmax_t: Vec<Vec<f64>>,
    pub fit: Vec<Option<FactorialFit>>,
    pub t_grid: Vec<f64>,
}

/// `ln(C_n/n!) = ln K + n ln L`, with the R² of that regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorialFit {
    pub k: f64,
    pub l: f64,
    pub r2: f64,
}

pub fn default_smoothing_grid() -> Vec<f64> {
    linalg::log_spaced(1e-3, 1.0, 32)
}

fn words(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..d).map(move |k| {
                    let mut v = w.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// `C_{p,n} = max_t t^{n/m} max_{|w| = n} ‖B^w S(t)‖_{p→p}` with
/// `S(t) = e^{−t H_m}`. The maximum runs over words of exact length `n` in
/// the basis letters; the empty word gives `‖S(t)‖`.
pub fn smoothing_fit(
    hm: &CMat,
    rep: &MatrixRep,
    family: &SeminormFamily,
    n_max: usize,
    m: u32,
    t_grid: &[f64],
) -> Result<SmoothingFit> {
    if m == 0 {
        return Err(Error::Precondition("operator order must be positive".into()));
    }
    let ts: Vec<f64> = t_grid.iter().copied().filter(|t| *t > 0.0 && *t <= 1.0).collect();
    if ts.is_empty() {
        return Err(Error::Precondition("smoothing grid needs points in (0, 1]".into()));
    }
    for p in &family.entries {
        p.kip(hm).map_err(|(kernel_index, residual)| Error::Kip {
            kernel_index,
            residual,
        })?;
    }
    let handle = SemigroupHandle::new(-hm, Direction::Forward)?;
    let semigroup: Vec<CMat> = ts
        .par_iter()
        .map(|&t| handle.evaluate(t))
        .collect::<Result<Vec<_>>>()?;
    let monomials: Vec<Vec<CMat>> = (0..=n_max)
        .map(|n| words(rep.dim(), n).iter().map(|w| rep.monomial(w)).collect())
        .collect();
    let mut constants = Vec::new();
    let mut argmax_t = Vec::new();
    let mut fit = Vec::new();
    for p in &family.entries {
        let mut cs = Vec::with_capacity(n_max + 1);
        let mut am = Vec::with_capacity(n_max + 1);
        for (n, words_n) in monomials.iter().enumerate() {
            let per_t: Vec<f64> = semigroup
                .par_iter()
                .zip(&ts)
                .map(|(s, &t)| {
                    let worst = words_n
                        .iter()
                        .map(|w| p.mixed_norm(&(w * s), p).map_or(f64::INFINITY, |v| v.value))
                        .fold(0.0, f64::max);
                    t.powf(n as f64 / m as f64) * worst
                })
                .collect();
            let (idx, c) = per_t
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            cs.push(c);
            am.push(ts[idx]);
        }
        fit.push(factorial_fit(&cs));
        constants.push(cs);
        argmax_t.push(am);
    }
    Ok(SmoothingFit {
        constants,
        argmax_t,
        fit,
        t_grid: ts,
    })
}

/// Least-squares fit of `C_n ≈ K Lⁿ n!` over `n = 1..` (needs two finite,
/// positive constants).
pub fn factorial_fit(constants: &[f64]) -> Option<FactorialFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ln_fact = 0.0;
    for (n, &c) in constants.iter().enumerate().skip(1) {
        ln_fact += (n as f64).ln();
        if c > 0.0 && c.is_finite() {
            xs.push(n as f64);
            ys.push(c.ln() - ln_fact);
        }
    }
    if xs.len() < 2 {
        return None;
    }
    let (a, b, r2) = linalg::linear_fit(&xs, &ys)?;
    Some(FactorialFit {
        k: a.exp(),
        l: b.exp(),
        r2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphOutcome {
    Satisfied,
    NotSatisfiable,
}

/// Graph-norm constant for one seminorm.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEntry {
    pub outcome: GraphOutcome,
    /// Smallest `E` valid on the fitting sample.
    pub e: f64,
    /// Worst relative slack `(RHS − LHS)/max(1, LHS)` on the fresh sample.
    pub verify_worst_residual: f64,
    /// `(ε, y)` realizing the largest requirement when the cap is exceeded.
    pub violating: Option<(f64, CVec)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEstimate {
    pub per_seminorm: Vec<GraphEntry>,
    pub eps_grid: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct GraphConfig {
    pub samples: usize,
    pub seed: u64,
    pub cap: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            samples: DEFAULT_GRAPH_SAMPLES,
            seed: 0,
            cap: GRAPH_ESTIMATE_CAP,
        }
    }
}

pub fn default_eps_grid() -> Vec<f64> {
    linalg::log_spaced(1e-2, 1.0, 16)
}

/// Fits the smallest `E` with `ρ_{p,n}(y) ≤ ε^{m−n} p(H_m y) + E ε^{−n} p(y)`
/// on a sample, then checks it on a fresh sample.
pub fn graph_estimate_fit(
    hm: &CMat,
    rep: &MatrixRep,
    family: &SeminormFamily,
    n: usize,
    m: usize,
    eps_grid: &[f64],
    config: &GraphConfig,
) -> Result<GraphEstimate> {
    if n == 0 || n >= m {
        return Err(Error::Precondition(format!("graph estimate needs 0 < n < m, got n = {n}, m = {m}")));
    }
    let eps: Vec<f64> = eps_grid.iter().copied().filter(|e| *e > 0.0 && *e <= 1.0).collect();
    if eps.is_empty() {
        return Err(Error::Precondition("eps grid needs points in (0, 1]".into()));
    }
    let size = rep.space_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut per_seminorm = Vec::new();
    for p in &family.entries {
        let mut fitting: Vec<CVec> = Vec::new();
        let gauge = p.gauge();
        if let Some(g) = &gauge {
            let lift = g.lift();
            for c in 0..lift.ncols() {
                fitting.push(lift.column(c).into_owned());
            }
            // kernel directions ride on a unit-p vector; if some word moves
            // them out of the kernel, no finite E exists
            if lift.ncols() > 0 {
                let base = lift.column(0).into_owned();
                for c in 0..g.kernel.ncols() {
                    let z = g.kernel.column(c).into_owned();
                    fitting.push(&base + z * linalg::re(10.0 * config.cap));
                }
            }
        }
        let random = repspace::random_vectors(&mut rng, size, config.samples);
        fitting.extend(random.iter().filter_map(|y| repspace::normalize_in(p, y)));
        let mut e_req: f64 = 0.0;
        let mut arg: Option<(f64, CVec)> = None;
        for y in &fitting {
            let py = p.eval(y);
            if py <= 0.0 {
                continue;
            }
            let rho = repspace::rho_eval_limited(rep, p, n, y, n.max(repspace::DEFAULT_RHO_N_MAX))?;
            let ph = p.eval(&(hm * y));
            for &e in &eps {
                let need = e.powi(n as i32) * (rho - e.powi((m - n) as i32) * ph) / py;
                if need > e_req {
                    e_req = need;
                    arg = Some((e, y.clone()));
                }
            }
        }
        if e_req > config.cap {
            per_seminorm.push(GraphEntry {
                outcome: GraphOutcome::NotSatisfiable,
                e: e_req,
                verify_worst_residual: f64::NEG_INFINITY,
                violating: arg,
            });
            continue;
        }
        let fresh = repspace::random_vectors(&mut rng, size, config.samples);
        let mut worst = f64::INFINITY;
        for y in fresh.iter().filter_map(|y| repspace::normalize_in(p, y)) {
            let rho = repspace::rho_eval_limited(rep, p, n, &y, n.max(repspace::DEFAULT_RHO_N_MAX))?;
            let ph = p.eval(&(hm * &y));
            let py = p.eval(&y);
            for &e in &eps {
                let rhs = e.powi((m - n) as i32) * ph + e_req / e.powi(n as i32) * py;
                worst = worst.min((rhs - rho) / rho.max(1.0));
            }
        }
        per_seminorm.push(GraphEntry {
            outcome: GraphOutcome::Satisfied,
            e: e_req,
            verify_worst_residual: worst,
            violating: None,
        });
    }
    Ok(GraphEstimate {
        per_seminorm,
        eps_grid: eps,
        samples: config.samples,
    })
}
