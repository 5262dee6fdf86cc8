//! Finite seminorm families standing in for a locally convex space.
//!
//! Every base seminorm is a *gauge*: `p(x) = ‖W·E†x‖` with `E†` either a
//! coordinate selection or the adjoint of an orthonormal range basis, `W`
//! a positive diagonal, and the outer norm ℓ2 or ℓ∞. Kernels, quotient
//! operators and induced operator norms are computed exactly from that
//! form. `Max` seminorms (produced by saturation) only admit bounds.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::lie::{AlgElement, LieAlgebra};
use crate::linalg::{self, CMat, CVec};
use crate::report::{Check, Outcome};

/// Relative homomorphism residual tolerated by [`MatrixRep::new`].
pub const HOMOMORPHISM_TOL: f64 = 1e-10;
pub const KIP_TOL: f64 = 1e-10;
pub const DEFAULT_RHO_N_MAX: usize = 5;
pub const DISSIPATIVITY_SLACK: f64 = -1e-9;

/// `d` matrices realizing a Lie algebra on `ℂ^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    algebra: LieAlgebra,
    matrices: Vec<CMat>,
    labels: Vec<String>,
    residual: f64,
}

impl MatrixRep {
    pub fn new(algebra: LieAlgebra, matrices: Vec<CMat>) -> Result<Self> {
        let d = algebra.dim();
        if matrices.len() != d {
            return Err(Error::DimensionMismatch {
                what: "number of representation matrices".into(),
                expected: d,
                got: matrices.len(),
            });
        }
        let n = matrices[0].nrows();
        for m in &matrices {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: "representation matrix shape".into(),
                    expected: n,
                    got: m.ncols().max(m.nrows()),
                });
            }
        }
        let max_norm = matrices.iter().map(linalg::frobenius).fold(0.0, f64::max);
        let residual = homomorphism_residual(&algebra, &matrices);
        let bound = HOMOMORPHISM_TOL * (1.0 + max_norm);
        if residual > bound {
            return Err(Error::NotARepresentation { residual, bound });
        }
        let labels = (1..=d).map(|k| format!("B{k}")).collect();
        Ok(MatrixRep {
            algebra,
            matrices,
            labels,
            residual,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        if labels.len() == self.matrices.len() {
            self.labels = labels;
        }
        self
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn space_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrix(&self, k: usize) -> &CMat {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn homomorphism_residual(&self) -> f64 {
        self.residual
    }

    /// `Σ a_k B_k`.
    pub fn eval(&self, a: &AlgElement) -> Result<CMat> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "algebra element".into(),
                expected: self.dim(),
                got: a.dim(),
            });
        }
        let n = self.space_dim();
        let mut out = linalg::zeros(n, n);
        for (k, b) in self.matrices.iter().enumerate() {
            if a.0[k] != linalg::ZERO {
                out += b * a.0[k];
            }
        }
        Ok(out)
    }

    /// `B_{u_1} ⋯ B_{u_n}`; the empty word is the identity.
    pub fn monomial(&self, letters: &[usize]) -> CMat {
        let n = self.space_dim();
        let mut out = linalg::identity(n);
        for &l in letters {
            out *= &self.matrices[l];
        }
        out
    }
}

fn homomorphism_residual(algebra: &LieAlgebra, mats: &[CMat]) -> f64 {
    let d = algebra.dim();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut r = linalg::commutator(&mats[i], &mats[j]);
            for (k, m) in mats.iter().enumerate() {
                let c = algebra.c(i, j, k);
                if c != 0.0 {
                    r -= m * linalg::re(c);
                }
            }
            worst = worst.max(linalg::frobenius(&r));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeNorm {
    L2,
    Linf,
}

/// A seminorm on `ℂ^N`.
#[derive(Debug, Clone, PartialEq)]
pub enum Seminorm {
    /// `(Σ w_i² |x_i|²)^{1/2}`; zero weights span the kernel.
    WeightedL2 { weights: Vec<f64> },
    /// `max_i w_i |x_i|`.
    WeightedLinf { weights: Vec<f64> },
    /// `‖Q x‖₂` for an orthogonal projection `Q`.
    QuotientL2 { projection: CMat },
    /// Pointwise maximum of the members.
    Max { members: Vec<Seminorm> },
}

/// Exact gauge data of a base seminorm.
#[derive(Debug, Clone)]
pub struct Gauge {
    /// r×N map to quotient coordinates (selection or `U*`).
    pub select: CMat,
    /// N×r embedding of quotient coordinates back into the space.
    pub embed: CMat,
    /// Diagonal weights on quotient coordinates.
    pub weights: Vec<f64>,
    /// N×k orthonormal kernel basis.
    pub kernel: CMat,
    pub norm: GaugeNorm,
    /// Coordinate indices when `select` is a plain coordinate selection.
    pub support: Option<Vec<usize>>,
}

impl Gauge {
    pub(crate) fn coords(&self) -> CMat {
        let mut c = self.select.clone();
        for (i, w) in self.weights.iter().enumerate() {
            let mut row = c.row_mut(i);
            row *= linalg::re(*w);
        }
        c
    }

    pub(crate) fn lift(&self) -> CMat {
        let mut l = self.embed.clone();
        for (i, w) in self.weights.iter().enumerate() {
            let mut col = l.column_mut(i);
            col /= linalg::re(*w);
        }
        l
    }

    /// `W E† T`; coordinate gauges scale rows instead of multiplying.
    pub(crate) fn left(&self, t: &CMat) -> CMat {
        match &self.support {
            Some(idx) => {
                let mut m = t.select_rows(idx.iter());
                for (r, w) in self.weights.iter().enumerate() {
                    let mut row = m.row_mut(r);
                    row *= linalg::re(*w);
                }
                m
            }
            None => self.coords() * t,
        }
    }

    /// `T E W⁻¹`.
    pub(crate) fn right(&self, t: &CMat) -> CMat {
        match &self.support {
            Some(idx) => {
                let mut m = t.select_columns(idx.iter());
                for (c, w) in self.weights.iter().enumerate() {
                    let mut col = m.column_mut(c);
                    col /= linalg::re(*w);
                }
                m
            }
            None => t * self.lift(),
        }
    }

    /// The operator `W E† T E W⁻¹` whose gauge norm is the induced seminorm norm.
    pub(crate) fn conjugate(&self, t: &CMat) -> CMat {
        self.right(&self.left(t))
    }

    pub(crate) fn norm_of(&self, m: &CMat) -> f64 {
        match self.norm {
            GaugeNorm::L2 => linalg::spectral_norm(m),
            GaugeNorm::Linf => linalg::inf_norm(m),
        }
    }
}

/// An induced operator norm, exact or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub exact: bool,
}

impl Seminorm {
    pub fn l2(n: usize) -> Self {
        Seminorm::WeightedL2 {
            weights: vec![1.0; n],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Seminorm::WeightedL2 { .. } => "weighted_l2",
            Seminorm::WeightedLinf { .. } => "weighted_linf",
            Seminorm::QuotientL2 { .. } => "quotient_l2",
            Seminorm::Max { .. } => "max",
        }
    }

    pub fn space_dim(&self) -> usize {
        match self {
            Seminorm::WeightedL2 { weights } | Seminorm::WeightedLinf { weights } => weights.len(),
            Seminorm::QuotientL2 { projection } => projection.nrows(),
            Seminorm::Max { members } => members.first().map_or(0, |m| m.space_dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Seminorm::WeightedL2 { weights } | Seminorm::WeightedLinf { weights } => {
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                    return Err(Error::Invalid(format!("seminorm weight {w} must be finite and nonnegative")));
                }
                Ok(())
            }
            Seminorm::QuotientL2 { projection } => {
                let n = projection.nrows();
                if projection.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        what: "quotient projection".into(),
                        expected: n,
                        got: projection.ncols(),
                    });
                }
                let idem = linalg::frobenius(&(projection * projection - projection));
                let herm = linalg::frobenius(&(projection - projection.adjoint()));
                if idem > 1e-9 || herm > 1e-9 {
                    return Err(Error::Invalid(format!(
                        "quotient_l2 needs an orthogonal projection (idempotence residual {idem:e}, hermiticity residual {herm:e})"
                    )));
                }
                Ok(())
            }
            Seminorm::Max { members } => {
                if members.is_empty() {
                    return Err(Error::Invalid("max seminorm with no members".into()));
                }
                let n = members[0].space_dim();
                for m in members {
                    m.validate()?;
                    if m.space_dim() != n {
                        return Err(Error::DimensionMismatch {
                            what: "max seminorm member".into(),
                            expected: n,
                            got: m.space_dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &CVec) -> f64 {
        match self {
            Seminorm::WeightedL2 { weights } => weights
                .iter()
                .zip(x.iter())
                .map(|(w, z)| (w * z.norm()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Seminorm::WeightedLinf { weights } => weights
                .iter()
                .zip(x.iter())
                .map(|(w, z)| w * z.norm())
                .fold(0.0, f64::max),
            Seminorm::QuotientL2 { projection } => (projection * x).norm(),
            Seminorm::Max { members } => members.iter().map(|m| m.eval(x)).fold(0.0, f64::max),
        }
    }

    /// Gauge data for base seminorms; `None` for `Max`.
    pub fn gauge(&self) -> Option<Gauge> {
        match self {
            Seminorm::WeightedL2 { weights } | Seminorm::WeightedLinf { weights } => {
                let n = weights.len();
                let support: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
                let kern: Vec<usize> = (0..n).filter(|&i| weights[i] == 0.0).collect();
                let mut select = linalg::zeros(support.len(), n);
                let mut embed = linalg::zeros(n, support.len());
                for (r, &i) in support.iter().enumerate() {
                    select[(r, i)] = linalg::ONE;
                    embed[(i, r)] = linalg::ONE;
                }
                let mut kernel = linalg::zeros(n, kern.len());
                for (c, &i) in kern.iter().enumerate() {
                    kernel[(i, c)] = linalg::ONE;
                }
                Some(Gauge {
                    select,
                    embed,
                    weights: support.iter().map(|&i| weights[i]).collect(),
                    kernel,
                    norm: if matches!(self, Seminorm::WeightedL2 { .. }) {
                        GaugeNorm::L2
                    } else {
                        GaugeNorm::Linf
                    },
                    support: Some(support),
                })
            }
            Seminorm::QuotientL2 { projection } => {
                let u = linalg::range_basis(projection, 0.5);
                let kernel = linalg::null_basis(projection, 0.5);
                Some(Gauge {
                    select: u.adjoint(),
                    weights: vec![1.0; u.ncols()],
                    embed: u,
                    kernel,
                    norm: GaugeNorm::L2,
                    support: None,
                })
            }
            Seminorm::Max { .. } => None,
        }
    }

    /// Base seminorms underlying this one.
    pub fn leaves(&self) -> Vec<&Seminorm> {
        match self {
            Seminorm::Max { members } => members.iter().flat_map(|m| m.leaves()).collect(),
            other => vec![other],
        }
    }

    /// Kernel invariance of `t`: returns the first offending kernel vector.
    pub fn kip(&self, t: &CMat) -> std::result::Result<(), (usize, f64)> {
        match self.gauge() {
            Some(g) => {
                let scale = linalg::frobenius(t).max(1.0);
                let image = &g.select * (t * &g.kernel);
                for c in 0..image.ncols() {
                    let r = image.column(c).norm();
                    if r > KIP_TOL * scale {
                        return Err((c, r));
                    }
                }
                Ok(())
            }
            None => {
                for leaf in self.leaves() {
                    leaf.kip(t)?;
                }
                Ok(())
            }
        }
    }

    /// Norm of the quotient operator induced by `t`: `sup p(Tx)/p(x)`.
    pub fn induced_norm(&self, t: &CMat) -> Result<NormValue> {
        self.kip(t).map_err(kip_error)?;
        match self.gauge() {
            Some(g) => Ok(NormValue {
                value: g.norm_of(&g.conjugate(t)),
                exact: true,
            }),
            None => {
                let mut worst: f64 = 0.0;
                for leaf in self.leaves() {
                    worst = worst.max(leaf.induced_norm(t)?.value);
                }
                Ok(NormValue {
                    value: worst,
                    exact: false,
                })
            }
        }
    }

    /// `inf p(Tx)/p(x)` over the quotient (a lower bound for `Max`).
    pub fn min_gain(&self, t: &CMat) -> Result<NormValue> {
        self.kip(t).map_err(kip_error)?;
        match self.gauge() {
            Some(g) => {
                let m = g.conjugate(t);
                if m.nrows() == 0 {
                    return Ok(NormValue {
                        value: f64::INFINITY,
                        exact: true,
                    });
                }
                let value = match g.norm {
                    GaugeNorm::L2 => linalg::min_singular(&m),
                    GaugeNorm::Linf => match linalg::inverse(&m) {
                        Some(inv) => 1.0 / linalg::inf_norm(&inv),
                        None => 0.0,
                    },
                };
                Ok(NormValue { value, exact: true })
            }
            None => {
                let mut low = f64::INFINITY;
                for leaf in self.leaves() {
                    low = low.min(leaf.min_gain(t)?.value);
                }
                Ok(NormValue {
                    value: low,
                    exact: false,
                })
            }
        }
    }

    /// `sup_x p(Tx)/q(x)` where `self = p`; `None` when `T` maps part of
    /// `ker q` outside `ker p` (the supremum is infinite).
    pub fn mixed_norm(&self, t: &CMat, q: &Seminorm) -> Option<NormValue> {
        match (self.gauge(), q.gauge()) {
            (Some(gp), Some(gq)) => {
                let scale = linalg::frobenius(t).max(1.0);
                let leak = &gp.select * (t * &gq.kernel);
                if (0..leak.ncols()).any(|c| leak.column(c).norm() > KIP_TOL * scale) {
                    return None;
                }
                let m = gq.right(&gp.left(t));
                let (value, exact) = match (gq.norm, gp.norm) {
                    (GaugeNorm::L2, GaugeNorm::L2) => (linalg::spectral_norm(&m), true),
                    (GaugeNorm::Linf, GaugeNorm::Linf) => (linalg::inf_norm(&m), true),
                    (GaugeNorm::L2, GaugeNorm::Linf) => (
                        m.row_iter().map(|r| r.norm()).fold(0.0, f64::max),
                        true,
                    ),
                    (GaugeNorm::Linf, GaugeNorm::L2) => {
                        let cols = m.ncols().max(1) as f64;
                        (linalg::spectral_norm(&m) * cols.sqrt(), false)
                    }
                };
                Some(NormValue { value, exact })
            }
            _ => {
                // sup max_i p_i(Tx) / max_j q_j(x) ≤ max_i min_j ‖T‖_{q_j → p_i}
                let mut worst: f64 = 0.0;
                for pi in self.leaves() {
                    let best = q
                        .leaves()
                        .iter()
                        .filter_map(|qj| pi.mixed_norm(t, qj))
                        .map(|v| v.value)
                        .fold(f64::INFINITY, f64::min);
                    if !best.is_finite() {
                        return None;
                    }
                    worst = worst.max(best);
                }
                Some(NormValue {
                    value: worst,
                    exact: false,
                })
            }
        }
    }
}

fn kip_error((kernel_index, residual): (usize, f64)) -> Error {
    Error::Kip {
        kernel_index,
        residual,
    }
}

/// Finite family Γ of seminorms on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormFamily {
    pub entries: Vec<Seminorm>,
    pub saturated: bool,
}

impl SeminormFamily {
    pub fn new(entries: Vec<Seminorm>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("seminorm family must be nonempty".into()));
        }
        let n = entries[0].space_dim();
        for e in &entries {
            e.validate()?;
            if e.space_dim() != n {
                return Err(Error::DimensionMismatch {
                    what: "seminorm length".into(),
                    expected: n,
                    got: e.space_dim(),
                });
            }
        }
        // one seminorm is closed under finite maxima
        let saturated = entries.len() == 1;
        Ok(SeminormFamily { entries, saturated })
    }

    pub fn single(p: Seminorm) -> Self {
        SeminormFamily {
            entries: vec![p],
            saturated: true,
        }
    }

    pub fn space_dim(&self) -> usize {
        self.entries[0].space_dim()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub const DEFAULT_SATURATION_DEPTH: usize = 3;

/// Closes the family under pointwise maxima of up to `depth` base members.
pub fn saturate(family: &SeminormFamily, depth: usize) -> SeminormFamily {
    let mut bases: Vec<Seminorm> = Vec::new();
    let mut extras: Vec<Seminorm> = Vec::new();
    for e in &family.entries {
        for leaf in e.leaves() {
            if !bases.contains(leaf) {
                bases.push(leaf.clone());
            }
        }
    }
    for e in &family.entries {
        if let Seminorm::Max { members } = e {
            if members.len() > depth {
                let flat = Seminorm::Max {
                    members: e.leaves().into_iter().cloned().collect(),
                };
                if !extras.contains(&flat) {
                    extras.push(flat);
                }
            }
        }
    }
    let depth = depth.max(1);
    let mut out: Vec<Seminorm> = bases.clone();
    let n = bases.len();
    for size in 2..=depth.min(n) {
        for subset in combinations(n, size) {
            out.push(Seminorm::Max {
                members: subset.iter().map(|&i| bases[i].clone()).collect(),
            });
        }
    }
    for e in extras {
        if !out.contains(&e) {
            out.push(e);
        }
    }
    SeminormFamily {
        entries: out,
        saturated: true,
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            extend(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Quotient operator data returned by [`quotient_op`].
#[derive(Debug, Clone)]
pub struct QuotientOp {
    pub kip: bool,
    /// Compression `E† T E` to quotient coordinates, present when `kip`.
    pub induced: Option<CMat>,
    pub violating_kernel_vector: Option<CVec>,
    pub residual: f64,
}

pub fn quotient_op(p: &Seminorm, t: &CMat) -> Result<QuotientOp> {
    let g = p.gauge().ok_or_else(|| {
        Error::Invalid("quotient_op needs a base seminorm with an explicit kernel".into())
    })?;
    if t.nrows() != p.space_dim() || t.ncols() != p.space_dim() {
        return Err(Error::DimensionMismatch {
            what: "operator for quotient".into(),
            expected: p.space_dim(),
            got: t.nrows(),
        });
    }
    match p.kip(t) {
        Ok(()) => Ok(QuotientOp {
            kip: true,
            induced: Some(&g.select * t * &g.embed),
            violating_kernel_vector: None,
            residual: 0.0,
        }),
        Err((c, r)) => Ok(QuotientOp {
            kip: false,
            induced: None,
            violating_kernel_vector: Some(g.kernel.column(c).into_owned()),
            residual: r,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipativityMode {
    Dissipative,
    Conservative,
}

/// Default μ grid: 24 log-spaced points per decade over [1e-2, 1e2].
pub fn default_mu_grid() -> Vec<f64> {
    linalg::log_spaced(1e-2, 1e2, 24)
}

/// Checks `p((μI − T)x) ≥ |μ| p(x)` on a μ grid for every seminorm.
pub fn dissipativity_check(
    t: &CMat,
    family: &SeminormFamily,
    mode: DissipativityMode,
    mu_grid: &[f64],
) -> Check {
    let name = match mode {
        DissipativityMode::Dissipative => "dissipativity",
        DissipativityMode::Conservative => "conservativity",
    };
    let n = t.nrows();
    let mut mus: Vec<f64> = mu_grid.iter().copied().filter(|m| *m > 0.0).collect();
    if mode == DissipativityMode::Conservative {
        let neg: Vec<f64> = mus.iter().map(|m| -m).collect();
        mus.extend(neg);
    }
    let mut check = Check::new(name, Outcome::Pass)
        .grid("mu", &mus)
        .note("continuum over mu replaced by the listed grid");
    if mus.is_empty() {
        return Check::rejected(name, "empty mu grid");
    }
    for (pi, p) in family.entries.iter().enumerate() {
        if let Err((k, r)) = p.kip(t) {
            return Check::rejected(
                name,
                format!("seminorm {pi}: kernel invariance fails at kernel vector {k} (residual {r:e})"),
            )
            .witness(json!({"seminorm": pi, "kernel_vector": k, "residual": r}));
        }
    }
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    let mut inexact = false;
    for (pi, p) in family.entries.iter().enumerate() {
        for &mu in &mus {
            let shifted = linalg::identity(n) * linalg::re(mu) - t;
            let gain = match p.min_gain(&shifted) {
                Ok(g) => g,
                Err(e) => return Check::rejected(name, e),
            };
            inexact |= !gain.exact;
            // relative slack of p((μ−T)x) ≥ |μ| p(x)
            let slack = gain.value / mu.abs() - 1.0;
            worst = worst.min(slack);
            if slack < DISSIPATIVITY_SLACK {
                failures += 1;
                if check.witnesses.len() < 8 {
                    check = check.witness(json!({"seminorm": pi, "mu": mu, "slack": slack}));
                }
            }
        }
    }
    check.outcome = Outcome::from_bool(failures == 0);
    if inexact {
        check = check.note("max seminorms checked through their members (sufficient condition)");
    }
    check
        .residual("worst_relative_slack", worst)
        .constant("failures", failures as f64)
}

/// `ρ_{p,n}(x) = max p(B_{i_1}⋯B_{i_n} x)` over words in `{0..d}^n`, `B_0 = I`.
pub fn rho_eval(rep: &MatrixRep, p: &Seminorm, n: usize, x: &CVec) -> Result<f64> {
    rho_eval_limited(rep, p, n, x, DEFAULT_RHO_N_MAX)
}

pub fn rho_eval_limited(
    rep: &MatrixRep,
    p: &Seminorm,
    n: usize,
    x: &CVec,
    n_max: usize,
) -> Result<f64> {
    if n > n_max {
        return Err(Error::Precondition(format!("rho order {n} exceeds configured maximum {n_max}")));
    }
    if x.len() != rep.space_dim() {
        return Err(Error::DimensionMismatch {
            what: "vector".into(),
            expected: rep.space_dim(),
            got: x.len(),
        });
    }
    // words containing B_0 = I reduce to shorter words, so the maximum runs
    // over all non-identity words of length ≤ n; each level extends the
    // previous level's vectors (prefix memoization)
    let mut best = p.eval(x);
    let mut level = vec![x.clone()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * rep.dim());
        for v in &level {
            for b in rep.matrices() {
                let w = b * v;
                best = best.max(p.eval(&w));
                next.push(w);
            }
        }
        level = next;
    }
    Ok(best)
}

/// Per-seminorm output of [`analytic_radius`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub nilpotent: bool,
    /// Fitted exponent of `n!` in the term model; ≤ −½ means entire.
    pub factorial_exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRadius {
    pub per_seminorm: Vec<RadiusEstimate>,
    pub projective_analytic: bool,
}

/// Estimates the radius of `Σ p(Tⁿx)/n! rⁿ` for each `p`.
pub fn analytic_radius(
    t: &CMat,
    x: &CVec,
    family: &SeminormFamily,
    n_max: usize,
) -> Result<AnalyticRadius> {
    if n_max < 8 {
        return Err(Error::Precondition(format!("analytic_radius needs n_max >= 8, got {n_max}")));
    }
    // v_n = Tⁿx / n!
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut v = x.clone();
    terms.push(v.clone());
    for k in 1..=n_max {
        v = (t * &v) / linalg::re(k as f64);
        terms.push(v.clone());
    }
    let mut out = Vec::new();
    for p in &family.entries {
        let a: Vec<f64> = terms.iter().map(|v| p.eval(v)).collect();
        out.push(radius_from_terms(&a));
    }
    let projective_analytic = out.iter().all(|r| r.radius > 0.0);
    Ok(AnalyticRadius {
        per_seminorm: out,
        projective_analytic,
    })
}

const TERM_FLOOR: f64 = 1e-300;

fn radius_from_terms(a: &[f64]) -> RadiusEstimate {
    let n_max = a.len() - 1;
    let last_nonzero = a.iter().rposition(|&v| v > TERM_FLOOR);
    let nilpotent = match last_nonzero {
        None => true,
        Some(i) => i < n_max,
    };
    if nilpotent {
        return RadiusEstimate {
            radius: f64::INFINITY,
            nilpotent: true,
            factorial_exponent: f64::NEG_INFINITY,
        };
    }
    let start = n_max - n_max / 2;
    let pts: Vec<(f64, f64)> = (start..=n_max)
        .filter(|&k| a[k] > TERM_FLOOR)
        .map(|k| (k as f64, a[k].ln()))
        .collect();
    let ln_fact = |k: f64| (1..=(k as usize)).map(|i| (i as f64).ln()).sum::<f64>();
    let gamma = if pts.len() >= 3 {
        let design =
            nalgebra::DMatrix::from_fn(pts.len(), 3, |i, j| match j {
                0 => 1.0,
                1 => pts[i].0,
                _ => ln_fact(pts[i].0),
            });
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        linalg::least_squares(&design, &y).map_or(0.0, |(c, _)| c[2])
    } else {
        0.0
    };
    let radius = if gamma <= -0.5 {
        f64::INFINITY
    } else if gamma >= 0.5 {
        0.0
    } else {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        match linalg::linear_fit(&xs, &ys) {
            Some((_, slope, _)) => (-slope).exp(),
            None => f64::INFINITY,
        }
    };
    RadiusEstimate {
        radius,
        nilpotent: false,
        factorial_exponent: gamma,
    }
}

/// Random unit vectors (uniform direction in ℂ^N), reproducible from the rng.
pub fn random_vectors(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<CVec> {
    use rand_distr::{Distribution, StandardNormal};
    (0..count)
        .map(|_| {
            let v = CVec::from_fn(n, |_, _| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex64::new(a, b)
            });
            let norm = v.norm();
            if norm > 0.0 {
                v / linalg::re(norm)
            } else {
                v
            }
        })
        .collect()
}

/// Rescales `x` so that `p(x) = 1`; `None` when `x ∈ ker p`.
pub fn normalize_in(p: &Seminorm, x: &CVec) -> Option<CVec> {
    let v = p.eval(x);
    (v > 0.0).then(|| x / linalg::re(v))
}

/// Distinct leaf seminorms in a family (used for reporting).
pub fn leaf_count(family: &SeminormFamily) -> usize {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for e in &family.entries {
        for l in e.leaves() {
            seen.insert(format!("{l:?}"));
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{from_real, re};
    use rand::SeedableRng;

    fn diag(v: &[f64]) -> CMat {
        let n = v.len();
        CMat::from_fn(n, n, |i, j| if i == j { re(v[i]) } else { linalg::ZERO })
    }

    #[test]
    fn saturation_examples() {
        let p = Seminorm::l2(2);
        let q = Seminorm::WeightedLinf {
            weights: vec![1.0, 2.0],
        };
        let single = saturate(&SeminormFamily::new(vec![p.clone()]).unwrap(), 3);
        assert_eq!(single.entries, vec![p.clone()]);
        let pq = saturate(&SeminormFamily::new(vec![p.clone(), q.clone()]).unwrap(), 3);
        assert_eq!(pq.entries.len(), 3);
        assert_eq!(
            pq.entries[2],
            Seminorm::Max {
                members: vec![p.clone(), q.clone()]
            }
        );
        assert_eq!(saturate(&pq, 3), pq);
    }

    #[test]
    fn combinations_enumerates_all_subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn quotient_op_examples() {
        let t = from_real(3, 3, &[1.0, 2.0, 0.0, 3.0, 4.0, 5.0, 0.5, 0.0, 1.0]);
        let q = quotient_op(&Seminorm::l2(3), &t).unwrap();
        assert!(q.kip);
        assert_eq!(q.induced.unwrap(), t);

        let d = diag(&[1.0, 2.0, 3.0]);
        let p = Seminorm::WeightedL2 {
            weights: vec![0.0, 1.0, 1.0],
        };
        let q = quotient_op(&p, &d).unwrap();
        assert!(q.kip);
        assert_eq!(q.induced.unwrap(), diag(&[2.0, 3.0]));

        let swap = from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = Seminorm::WeightedL2 {
            weights: vec![0.0, 1.0],
        };
        let q = quotient_op(&p, &swap).unwrap();
        assert!(!q.kip);
        assert!(q.induced.is_none());
        assert_eq!(q.violating_kernel_vector.unwrap()[0], linalg::ONE);
    }

    #[test]
    fn dissipativity_examples() {
        let fam = SeminormFamily::single(Seminorm::l2(2));
        let grid = default_mu_grid();
        let rot = from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(dissipativity_check(&rot, &fam, DissipativityMode::Conservative, &grid).passed());
        let id = linalg::identity(2);
        let c = dissipativity_check(&id, &fam, DissipativityMode::Dissipative, &[1.0]);
        assert!(!c.passed());
        let neg = -linalg::identity(2);
        assert!(dissipativity_check(&neg, &fam, DissipativityMode::Dissipative, &grid).passed());
    }

    #[test]
    fn conservative_svd_oracle() {
        // σ_min(μI − T) = √(μ²+1) for the rotation generator
        let rot = from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        for &mu in &[0.1, 1.0, 7.0] {
            let g = Seminorm::l2(2)
                .min_gain(&(linalg::identity(2) * re(mu) - &rot))
                .unwrap();
            assert!((g.value - (mu * mu + 1.0f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_examples() {
        let rep = fixtures::heisenberg_rep3();
        let p = Seminorm::l2(3);
        let e3 = CVec::from_fn(3, |i, _| if i == 2 { linalg::ONE } else { linalg::ZERO });
        let x = CVec::from_fn(3, |i, _| re(i as f64 + 1.0));
        assert_eq!(rho_eval(&rep, &p, 0, &x).unwrap(), p.eval(&x));
        // B_k e3 has only the (1,3) entry of B3 acting on e3
        let direct = [p.eval(&e3)]
            .into_iter()
            .chain(rep.matrices().iter().map(|b| p.eval(&(b * &e3))))
            .fold(0.0, f64::max);
        assert_eq!(rho_eval(&rep, &p, 1, &e3).unwrap(), direct);

        let b = from_real(2, 2, &[0.0, 2.0, 1.0, 0.5]);
        let rep1 = MatrixRep::new(LieAlgebra::abelian(1), vec![b.clone()]).unwrap();
        let y = CVec::from_fn(2, |i, _| re(1.0 - i as f64 * 3.0));
        let want = p.eval(&y).max(p.eval(&(&b * &y))).max(p.eval(&(&b * &b * &y)));
        assert!((rho_eval(&rep1, &p, 2, &y).unwrap() - want).abs() < 1e-15);
        assert!(rho_eval(&rep1, &p, 6, &y).is_err());
    }

    #[test]
    fn analytic_radius_examples() {
        let fam = SeminormFamily::single(Seminorm::l2(3));
        let nil = from_real(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let x = CVec::from_fn(3, |_, _| linalg::ONE);
        let r = analytic_radius(&nil, &x, &fam, 10).unwrap();
        assert!(r.per_seminorm[0].radius.is_infinite() && r.per_seminorm[0].nilpotent);
        let two = linalg::identity(3) * re(2.0);
        let r = analytic_radius(&two, &x, &fam, 12).unwrap();
        assert!(r.per_seminorm[0].radius.is_infinite());
        assert!(r.projective_analytic);
        assert!(analytic_radius(&two, &x, &fam, 4).is_err());
    }

    #[test]
    fn weighted_shift_radius_near_one() {
        // T e_k = k e_{k+1}: p(Tⁿ e_1) = n! exactly, so every term is 1
        let n = 32;
        let mut t = linalg::zeros(n, n);
        for k in 0..n - 1 {
            t[(k + 1, k)] = re(k as f64 + 1.0);
        }
        let x = CVec::from_fn(n, |i, _| if i == 0 { linalg::ONE } else { linalg::ZERO });
        let fam = SeminormFamily::single(Seminorm::l2(n));
        let r = analytic_radius(&t, &x, &fam, 24).unwrap();
        let rad = r.per_seminorm[0].radius;
        assert!((rad - 1.0).abs() < 0.1, "radius {rad}");
    }

    #[test]
    fn max_seminorm_norms_are_bounds() {
        let p = Seminorm::l2(2);
        let q = Seminorm::WeightedLinf {
            weights: vec![1.0, 3.0],
        };
        let m = Seminorm::Max {
            members: vec![p.clone(), q.clone()],
        };
        let t = from_real(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let bound = m.induced_norm(&t).unwrap();
        assert!(!bound.exact);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in random_vectors(&mut rng, 2, 200) {
            assert!(m.eval(&(&t * &x)) <= bound.value * m.eval(&x) + 1e-12);
        }
    }

    #[test]
    fn quotient_l2_gauge_matches_projection() {
        let q = from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let p = Seminorm::QuotientL2 { projection: q };
        p.validate().unwrap();
        let g = p.gauge().unwrap();
        assert_eq!(g.select.nrows(), 1);
        assert_eq!(g.kernel.ncols(), 1);
        let x = CVec::from_fn(2, |i, _| re(1.0 + 2.0 * i as f64));
        assert!(((g.select.clone() * &x).norm() - p.eval(&x)).abs() < 1e-14);
    }
}
