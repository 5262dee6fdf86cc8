//! Residual checks of exact operator identities on matrix representations:
//! resolvent commutation relations and their series form, the adjoint
//! conjugation formula, the Duhamel formula, the commutator bound for
//! monomials, and the growth bound for derivatives along a group.
//!
//! Residuals are relative: the discrepancy divided by
//! `max(1, ‖LHS‖, ‖RHS‖)` in the Frobenius norm.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::enveloping::{self, Word};
use crate::error::{Error, Result};
use crate::lie::AlgElement;
use crate::linalg::{self, CMat};
use crate::report::{complex_json, IdentityResult};
use crate::repspace::{self, MatrixRep, SeminormFamily};
use crate::semigroup::{self, Direction, EquicontinuityMode, ResolventMethod, SemigroupHandle};

pub const IDENTITY_TOL: f64 = 1e-9;
pub const SPECTRAL_GAP: f64 = 1e-8;
pub const DUHAMEL_TOL: f64 = 1e-7;
pub const DEFAULT_QUAD_NODES: usize = 64;
pub const SERIES_MAX_TERMS: usize = 500;
/// Consecutive non-decreasing term norms that count as divergence.
pub const DIVERGENCE_WINDOW: usize = 25;
pub const BOUND_SLACK: f64 = 1e-9;
pub const MIN_BOUND_SAMPLES: usize = 32;
const EXPANSION_TOL: f64 = 1e-10;

fn relative(diff: &CMat, lhs: &CMat, rhs: &CMat) -> f64 {
    linalg::frobenius(diff) / linalg::frobenius(lhs).max(linalg::frobenius(rhs)).max(1.0)
}

fn resolvent(a: &CMat, lambda: Complex64) -> Result<CMat> {
    Ok(semigroup::resolvent(a, lambda, ResolventMethod::Direct)?.matrix)
}

/// Spectra used by the resolvent checks: `σ(A)` in the representation and
/// `σ(ad A)` on the complexified algebra.
#[derive(Debug, Clone)]
pub struct SpectralContext {
    pub spectrum: Vec<Complex64>,
    pub ad_spectrum: Vec<Complex64>,
    pub a_matrix: CMat,
}

impl SpectralContext {
    pub fn new(rep: &MatrixRep, a: &AlgElement) -> Result<Self> {
        let a_matrix = rep.eval(a)?;
        let spectrum = linalg::eigenvalues(&a_matrix)?;
        let ad_spectrum = linalg::eigenvalues(&rep.algebra().ad_matrix(a)?)?;
        Ok(SpectralContext {
            spectrum,
            ad_spectrum,
            a_matrix,
        })
    }

    /// Rejects `λ` in `σ(A) ∪ (σ(A) − σ(ad A))`, naming the nearest point.
    pub fn check_diminished_resolvent(&self, lambda: Complex64) -> Result<()> {
        self.check_point(lambda, "lambda")?;
        for &a in &self.spectrum {
            for &mu in &self.ad_spectrum {
                let point = a - mu;
                if (lambda - point).norm() <= SPECTRAL_GAP {
                    return Err(Error::Precondition(format!(
                        "lambda = {lambda} lies in the augmented spectrum: {point} = {a} - {mu}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_point(&self, z: Complex64, what: &str) -> Result<()> {
        for &a in &self.spectrum {
            if (z - a).norm() <= SPECTRAL_GAP {
                return Err(Error::Precondition(format!(
                    "{what} = {z} lies in the spectrum of A (eigenvalue {a})"
                )));
            }
        }
        Ok(())
    }
}

/// `(ad A − μ)^k (B)` for `k = 0..=n`, computed in the algebra.
fn shifted_ad_powers(rep: &MatrixRep, a: &AlgElement, mu: Complex64, b: &AlgElement, n: usize) -> Result<Vec<AlgElement>> {
    let d = rep.dim();
    let shifted = rep.algebra().ad_matrix(a)? - linalg::identity(d) * mu;
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = b.clone();
    out.push(cur.clone());
    for _ in 0..n {
        cur = AlgElement(&shifted * &cur.0);
        out.push(cur.clone());
    }
    Ok(out)
}

/// `B R(λ) = Σ_{k≤n} (−1)^k R(λ+μ)^{k+1} (ad A − μ)^k(B)
///          + (−1)^{n+1} R(λ+μ)^{n+1} (ad A − μ)^{n+1}(B) R(λ)`.
pub fn resolvent_commutation(
    rep: &MatrixRep,
    a: &AlgElement,
    b: &AlgElement,
    lambda: Complex64,
    mu: Complex64,
    n: usize,
) -> Result<IdentityResult> {
    let ctx = SpectralContext::new(rep, a)?;
    ctx.check_diminished_resolvent(lambda)?;
    ctx.check_point(lambda + mu, "lambda + mu")?;
    let r = resolvent(&ctx.a_matrix, lambda)?;
    let r_shift = resolvent(&ctx.a_matrix, lambda + mu)?;
    let powers = shifted_ad_powers(rep, a, mu, b, n + 1)?;
    let lhs = rep.eval(b)? * &r;
    let size = rep.space_dim();
    let mut rhs = linalg::zeros(size, size);
    // r_pow holds R(λ+μ)^{k+1} while term k is added
    let mut r_pow = r_shift.clone();
    let mut sign = 1.0;
    for (k, ck) in powers.iter().take(n + 1).enumerate() {
        rhs += &r_pow * rep.eval(ck)? * linalg::re(sign);
        if k < n {
            r_pow = &r_pow * &r_shift;
        }
        sign = -sign;
    }
    rhs += &r_pow * rep.eval(&powers[n + 1])? * &r * linalg::re(sign);
    let residual = relative(&(&lhs - &rhs), &lhs, &rhs);
    Ok(IdentityResult::new(residual, IDENTITY_TOL, n + 2)
        .with("lambda", complex_json(lambda))
        .with("mu", complex_json(mu))
        .with("n", n))
}

/// `B R(λ) = Σ_j Σ_{k≤s_j} (−1)^k R(λ+μ_j)^{k+1} (ad A − μ_j)^k (P_j B)`
/// over the primary decomposition of `ad A`.
pub fn resolvent_primary_decomposition(
    rep: &MatrixRep,
    a: &AlgElement,
    b: &AlgElement,
    lambda: Complex64,
) -> Result<IdentityResult> {
    let ctx = SpectralContext::new(rep, a)?;
    ctx.check_diminished_resolvent(lambda)?;
    let data = rep.algebra().ad_spectral_data(a)?;
    let r = resolvent(&ctx.a_matrix, lambda)?;
    let lhs = rep.eval(b)? * &r;
    let size = rep.space_dim();
    let mut rhs = linalg::zeros(size, size);
    let mut terms = 0;
    for (j, &mu) in data.eigenvalues.iter().enumerate() {
        ctx.check_point(lambda + mu, "lambda + mu_j")?;
        let r_shift = resolvent(&ctx.a_matrix, lambda + mu)?;
        let pb = AlgElement(&data.projections[j] * &b.0);
        let s = data.indices[j];
        let powers = shifted_ad_powers(rep, a, mu, &pb, s)?;
        let mut r_pow = r_shift.clone();
        let mut sign = 1.0;
        for ck in &powers {
            rhs += &r_pow * rep.eval(ck)? * linalg::re(sign);
            r_pow = &r_pow * &r_shift;
            sign = -sign;
            terms += 1;
        }
    }
    let residual = relative(&(&lhs - &rhs), &lhs, &rhs);
    let clusters: Vec<_> = data
        .eigenvalues
        .iter()
        .zip(&data.indices)
        .map(|(mu, s)| json!({"mu": complex_json(*mu), "s": s}))
        .collect();
    Ok(IdentityResult::new(residual, IDENTITY_TOL, terms)
        .with("lambda", complex_json(lambda))
        .with("clusters", clusters)
        .with("approximate", data.ambiguous))
}

/// Partial sums of `Σ_k (−1)^k R(λ)^{k+1} (ad A)^k (B)` against `B R(λ)`.
/// Convergence is certified when `ν(R(λ))·ν(ad A) < 1` (spectral radii);
/// otherwise the sum still runs and divergence is reported, not raised.
pub fn resolvent_series(
    rep: &MatrixRep,
    a: &AlgElement,
    b: &AlgElement,
    lambda: Complex64,
    tol: f64,
) -> Result<IdentityResult> {
    let ctx = SpectralContext::new(rep, a)?;
    ctx.check_point(lambda, "lambda")?;
    let ad = rep.algebra().ad_matrix(a)?;
    let nu_r = 1.0 / linalg::distance_to_spectrum(&ctx.spectrum, lambda);
    let nu_ad = linalg::spectral_radius(&ad)?;
    let certificate = nu_r * nu_ad;
    let r = resolvent(&ctx.a_matrix, lambda)?;
    let lhs = rep.eval(b)? * &r;
    let scale = linalg::frobenius(&lhs).max(1.0);
    let size = rep.space_dim();
    let mut sum = linalg::zeros(size, size);
    let mut coeffs = b.clone();
    let mut r_pow = r.clone();
    let mut sign = 1.0;
    let mut norms: Vec<f64> = Vec::new();
    let mut rising = 0usize;
    let mut stopped_by_tol = false;
    let mut diverged = false;
    for _ in 0..SERIES_MAX_TERMS {
        let term = &r_pow * rep.eval(&coeffs)? * linalg::re(sign);
        let tn = linalg::frobenius(&term);
        sum += &term;
        if let Some(&prev) = norms.last() {
            rising = if tn >= prev && tn > 0.0 { rising + 1 } else { 0 };
        }
        norms.push(tn);
        if tn < tol * scale {
            stopped_by_tol = true;
            break;
        }
        if rising >= DIVERGENCE_WINDOW || !tn.is_finite() {
            diverged = true;
            break;
        }
        coeffs = AlgElement(&ad * &coeffs.0);
        r_pow = &r_pow * &r;
        sign = -sign;
    }
    let residual = relative(&(&lhs - &sum), &lhs, &sum);
    let mut result = IdentityResult::new(residual, IDENTITY_TOL, norms.len());
    result.converged = stopped_by_tol && residual <= IDENTITY_TOL.max(tol);
    Ok(result
        .with("certificate", certificate)
        .with("certified", certificate < 1.0)
        .with("nu_resolvent", nu_r)
        .with("nu_ad", nu_ad)
        .with("diverged", diverged)
        .with("last_term_norm", norms.last().copied().unwrap_or(0.0)))
}

/// `B e^{tA} = e^{tA} · exp(−t ad A)(B)`.
pub fn adjoint_conjugation(rep: &MatrixRep, a: &AlgElement, b: &AlgElement, t: f64) -> Result<IdentityResult> {
    let am = rep.eval(a)?;
    let e = semigroup::expm(&am, t)?;
    let conj = rep.algebra().exp_ad(t, a, b, 1e-15)?;
    let lhs = rep.eval(b)? * &e;
    let rhs = &e * rep.eval(&conj)?;
    let residual = relative(&(&lhs - &rhs), &lhs, &rhs);
    Ok(IdentityResult::new(residual, IDENTITY_TOL, 1).with("t", t))
}

/// `∫₀ˢ B^v S_r [(ad B^u)(H)] S_{t−r} dr = B^v (S_s B^u − B^u S_s) S_{t−s}`
/// with `S_r = e^{−rH}`, the integral by Gauss–Legendre quadrature.
pub fn duhamel(
    rep: &MatrixRep,
    hm: &CMat,
    u: &Word,
    v: &Word,
    s: f64,
    t: f64,
    quad_nodes: usize,
) -> Result<IdentityResult> {
    if !(0.0..=t).contains(&s) {
        return Err(Error::Precondition(format!("Duhamel formula needs 0 <= s <= t, got s = {s}, t = {t}")));
    }
    if quad_nodes == 0 {
        return Err(Error::Precondition("quadrature needs at least one node".into()));
    }
    for w in [u, v] {
        check_letters(w, rep.dim())?;
    }
    let bu = rep.monomial(&u.0);
    let bv = rep.monomial(&v.0);
    let handle = SemigroupHandle::new(-hm, Direction::Forward)?;
    let comm = &bu * hm - hm * &bu;
    let size = rep.space_dim();
    let mut lhs = linalg::zeros(size, size);
    if s > 0.0 {
        let (nodes, weights) = linalg::gauss_legendre(quad_nodes);
        for (x, w) in nodes.iter().zip(&weights) {
            let r = 0.5 * s * (x + 1.0);
            let integrand = &bv * handle.evaluate(r)? * &comm * handle.evaluate(t - r)?;
            lhs += integrand * linalg::re(0.5 * s * w);
        }
    }
    let ss = handle.evaluate(s)?;
    let rhs = &bv * (&ss * &bu - &bu * &ss) * handle.evaluate(t - s)?;
    let residual = relative(&(&lhs - &rhs), &lhs, &rhs);
    Ok(IdentityResult::new(residual, DUHAMEL_TOL, quad_nodes)
        .with("s", s)
        .with("t", t)
        .with("hm_norm_times_t", linalg::spectral_norm(hm) * t)
        .with("rhs_norm", linalg::frobenius(&rhs)))
}

fn check_letters(w: &Word, dim: usize) -> Result<()> {
    match w.0.iter().find(|&&l| l >= dim) {
        Some(&letter) => Err(Error::LetterOutOfRange { letter, dim }),
        None => Ok(()),
    }
}

/// Smallest `k̂` with `p((ad B^u)(B^v)x) ≤ k̂ |u||v| ρ_{p,|u|+|v|−1}(x)` over
/// sampled vectors, plus the structural claims of the word expansion.
pub fn commutator_bound(
    rep: &MatrixRep,
    family: &SeminormFamily,
    u: &Word,
    v: &Word,
    sample: usize,
    seed: u64,
) -> Result<IdentityResult> {
    if sample < MIN_BOUND_SAMPLES {
        return Err(Error::Precondition(format!(
            "commutator bound needs at least {MIN_BOUND_SAMPLES} samples, got {sample}"
        )));
    }
    let alg = rep.algebra();
    let expansion = enveloping::expand_ad_word(alg, u, v)?;
    let bu = rep.monomial(&u.0);
    let bv = rep.monomial(&v.0);
    let direct = &bu * &bv - &bv * &bu;
    let expanded = enveloping::word_eval(rep, &expansion)?;
    let expansion_residual = relative(&(&direct - &expanded), &direct, &expanded);
    let term_bound = rep.dim() * u.size() * v.size();
    let order = u.size() + v.size() - 1;
    let size_ok = expansion.terms().keys().all(|w| w.size() == order);
    let count_ok = expansion.len() <= term_bound;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = repspace::random_vectors(&mut rng, rep.space_dim(), sample);
    let uv = (u.size() * v.size()) as f64;
    let mut k_hat: f64 = 0.0;
    for p in &family.entries {
        for x in &xs {
            let lhs = p.eval(&(&direct * x));
            let rho = repspace::rho_eval_limited(rep, p, order, x, order.max(repspace::DEFAULT_RHO_N_MAX))?;
            let k = if rho > 0.0 {
                lhs / (uv * rho)
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            k_hat = k_hat.max(k);
        }
    }
    let mut result = IdentityResult::new(expansion_residual, EXPANSION_TOL, expansion.len());
    result.converged &= size_ok && count_ok && k_hat.is_finite();
    Ok(result
        .with("k_hat", k_hat)
        .with("term_count", expansion.len())
        .with("term_bound", term_bound)
        .with("expansion_size", order)
        .with("size_ok", size_ok))
}

/// `ρ_{p,n}(V(t)x) ≤ exp(n ‖ad A‖ |t|) ρ_{p,n}(x)` for `V(t) = e^{tA}`,
/// where `A` must generate a group isometric for every seminorm.
pub fn derivative_growth_bound(
    rep: &MatrixRep,
    family: &SeminormFamily,
    a: &AlgElement,
    n: usize,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<IdentityResult> {
    if t_grid.is_empty() {
        return Err(Error::Precondition("growth bound needs a nonempty time grid".into()));
    }
    let am = rep.eval(a)?;
    let abs_grid: Vec<f64> = {
        let mut g: Vec<f64> = t_grid.iter().map(|t| t.abs()).collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let t_max = abs_grid.last().copied().unwrap_or(0.0);
    let iso = semigroup::equicontinuity_check(&am, family, (0.0, t_max), EquicontinuityMode::Isometric, Some(&abs_grid));
    if !iso.passed() {
        return Err(Error::Precondition(format!(
            "A does not generate an isometric group for the family: {}",
            iso.notes.join("; ")
        )));
    }
    let ad_norm = rep.algebra().norms(a)?.ad_op_norm;
    let handle = SemigroupHandle::new(am, Direction::Group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = repspace::random_vectors(&mut rng, rep.space_dim(), samples.max(1));
    let n_max = n.max(repspace::DEFAULT_RHO_N_MAX);
    let mut worst_slack = f64::INFINITY;
    let mut worst_violation: f64 = 0.0;
    for &t in t_grid {
        let v = handle.evaluate(t)?;
        let factor = (n as f64 * ad_norm * t.abs()).exp();
        for p in &family.entries {
            for x in &xs {
                let lhs = repspace::rho_eval_limited(rep, p, n, &(&v * x), n_max)?;
                let rhs = factor * repspace::rho_eval_limited(rep, p, n, x, n_max)?;
                let slack = (rhs - lhs) / rhs.max(1.0);
                worst_slack = worst_slack.min(slack);
                worst_violation = worst_violation.max(-slack);
            }
        }
    }
    let mut result = IdentityResult::new(worst_violation, BOUND_SLACK, t_grid.len() * xs.len());
    result.converged = worst_slack >= -BOUND_SLACK;
    Ok(result
        .with("worst_slack", worst_slack)
        .with("ad_op_norm", ad_norm)
        .with("n", n))
}
