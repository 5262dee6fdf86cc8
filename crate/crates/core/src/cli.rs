//! Suite orchestration and report assembly behind the `liexp` binary.

use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::enveloping::{self, Word};
use crate::error::{Error, Result};
use crate::exponentiate::{self, PipelineConfig};
use crate::identities::{self, SpectralContext};
use crate::lie::AlgElement;
use crate::linalg::{self, CMat};
use crate::report::{Check, IdentityResult, Outcome, REPORT_SCHEMA};
use crate::semigroup::{self, EquicontinuityMode, GraphConfig, GraphOutcome, ResolventMethod};
use crate::spec::ProblemSpec;

/// Distance kept between sampled spectral parameters and the augmented spectrum.
pub const DRAW_MARGIN: f64 = 0.25;
pub const GROWTH_SAMPLES: usize = 128;
pub const COMMUTATOR_SAMPLES: usize = 64;
pub const LAPLACE_TOL: f64 = 1e-8;
pub const GRAPH_VERIFY_TOL: f64 = 1e-9;
const MAX_DRAW_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Estimates,
    Pipeline,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Estimates => "estimates",
            Suite::Pipeline => "pipeline",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "estimates" => Ok(Suite::Estimates),
            "pipeline" => Ok(Suite::Pipeline),
            "all" => Ok(Suite::All),
            _ => Err(Error::Invalid(format!(
                "unknown suite {s:?}; expected identities, estimates, pipeline or all"
            ))),
        }
    }
}

/// The versioned report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub suite: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub spec: Value,
    pub defaulted: Vec<String>,
    pub outcome: Outcome,
    pub failing: Vec<String>,
    pub checks: Vec<Check>,
    pub wall_time_ms: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Report JSON with timing fields removed, for determinism comparisons.
pub fn strip_timing(v: &Value) -> Value {
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("wall_time_ms");
    }
    v
}

pub fn inputs_digest(spec: &ProblemSpec, suite: Suite) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&spec.to_value()).expect("spec serializes").as_bytes());
    h.update(b"\n");
    h.update(suite.name().as_bytes());
    hex::encode(h.finalize())
}

fn failing_paths(c: &Check, prefix: &str, out: &mut Vec<String>) {
    let path = if prefix.is_empty() {
        c.name.clone()
    } else {
        format!("{prefix}/{}", c.name)
    };
    if c.outcome.is_failure() {
        let before = out.len();
        for child in &c.children {
            failing_paths(child, &path, out);
        }
        if out.len() == before {
            out.push(path);
        }
    }
}

pub fn run(spec: &ProblemSpec, suite: Suite) -> Report {
    let start = Instant::now();
    let groups: Vec<Suite> = match suite {
        Suite::All => vec![Suite::Identities, Suite::Estimates, Suite::Pipeline],
        s => vec![s],
    };
    let checks: Vec<Check> = groups
        .par_iter()
        .map(|g| match g {
            Suite::Identities => identities_suite(spec),
            Suite::Estimates => estimates_suite(spec),
            _ => pipeline_suite(spec),
        })
        .collect();
    let mut failing = Vec::new();
    for c in &checks {
        failing_paths(c, "", &mut failing);
    }
    let outcome = Outcome::from_bool(checks.iter().all(|c| !c.outcome.is_failure()));
    Report {
        schema: REPORT_SCHEMA.to_string(),
        suite: suite.name().to_string(),
        inputs_digest: inputs_digest(spec, suite),
        seed: spec.seed,
        spec: spec.to_value(),
        defaulted: spec.defaulted.clone(),
        outcome,
        failing,
        checks,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

fn group(name: &str, children: Vec<Check>) -> Check {
    let ok = children.iter().all(|c| !c.outcome.is_failure());
    let worst = children
        .iter()
        .filter_map(|c| c.residuals.get("residual").copied())
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let mut c = Check::new(name, Outcome::from_bool(ok));
    if let Some(w) = worst {
        c = c.residual("max_residual", w);
    }
    c.children = children;
    c
}

/// Identity outcome against the spec tolerance rather than the library default.
fn graded(name: String, r: Result<IdentityResult>, tol: f64) -> Check {
    match r {
        Ok(r) => {
            let mut c = r.to_check(&name);
            c.outcome = Outcome::from_bool(r.residual <= tol);
            c.constant("tolerance", tol)
        }
        Err(e) => Check::rejected(name, e),
    }
}

fn random_element(rng: &mut ChaCha8Rng, d: usize) -> AlgElement {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    AlgElement::from_real(&v)
}

fn random_word(rng: &mut ChaCha8Rng, d: usize, lengths: std::ops::RangeInclusive<usize>) -> Word {
    let len = rng.random_range(lengths);
    Word((0..len).map(|_| rng.random_range(0..d)).collect())
}

/// Draws `λ` at distance at least [`DRAW_MARGIN`] from `σ(A) ∪ (σ(A) − σ(ad A))`
/// and from `σ(A) − μ`.
pub fn draw_lambda(ctx: &SpectralContext, mu: Complex64, rng: &mut ChaCha8Rng) -> Option<Complex64> {
    let radius = ctx
        .spectrum
        .iter()
        .chain(&ctx.ad_spectrum)
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        * 2.0
        + mu.norm()
        + 1.0;
    if !radius.is_finite() {
        return None;
    }
    let mut avoid: Vec<Complex64> = ctx.spectrum.clone();
    for &a in &ctx.spectrum {
        avoid.push(a - mu);
        for &m in &ctx.ad_spectrum {
            avoid.push(a - m);
        }
    }
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let z = Complex64::new(rng.random_range(-radius..=radius), rng.random_range(-radius..=radius));
        if linalg::distance_to_spectrum(&avoid, z) >= DRAW_MARGIN {
            return Some(z);
        }
    }
    None
}

fn identities_suite(spec: &ProblemSpec) -> Check {
    let rep = &spec.representation;
    let d = rep.dim();
    let tol = spec.tolerances;
    let hm = enveloping::ordered_eval(rep, &spec.elliptic_operator);
    let draws: Vec<Vec<Check>> = (0..spec.draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x1de7_0000 + k as u64));
            let a = random_element(&mut rng, d);
            let b = random_element(&mut rng, d);
            let mu = Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let n = rng.random_range(0..=4usize);
            let t = spec.grids.t[rng.random_range(0..spec.grids.t.len())];
            let label = format!("draw[{k}]");
            let mut out = Vec::new();
            let ctx = match SpectralContext::new(rep, &a) {
                Ok(c) => c,
                Err(e) => return vec![Check::rejected(label, e)],
            };
            match draw_lambda(&ctx, mu, &mut rng) {
                Some(lambda) => {
                    out.push(graded(
                        label.clone(),
                        identities::resolvent_commutation(rep, &a, &b, lambda, mu, n),
                        tol.identity,
                    ));
                    out.push(graded(
                        label.clone(),
                        identities::resolvent_primary_decomposition(rep, &a, &b, lambda),
                        tol.identity,
                    ));
                }
                None => {
                    let c = Check::rejected(label.clone(), "no admissible lambda found");
                    out.push(c.clone());
                    out.push(c);
                }
            }
            out.push(graded(label.clone(), identities::adjoint_conjugation(rep, &a, &b, t), tol.identity));

            // a point outside the certified radius, so the series must converge
            let nu_a = linalg::spectral_radius(&ctx.a_matrix).unwrap_or(0.0);
            let nu_ad = ctx.ad_spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let r = 2.0 * (nu_a + nu_ad) + 1.0;
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let lambda = Complex64::from_polar(r, angle);
            let series = identities::resolvent_series(rep, &a, &b, lambda, tol.series);
            out.push(match series {
                Ok(s) => {
                    let mut c = s.to_check(&label);
                    c.outcome = Outcome::from_bool(s.converged && s.residual <= tol.series);
                    c
                }
                Err(e) => Check::rejected(label.clone(), e),
            });

            let u = random_word(&mut rng, d, 1..=2);
            let v = random_word(&mut rng, d, 0..=1);
            out.push(match &hm {
                Ok(h) => graded(
                    label.clone(),
                    identities::duhamel(rep, h, &u, &v, 0.5, 1.0, identities::DEFAULT_QUAD_NODES),
                    tol.duhamel,
                ),
                Err(e) => Check::rejected(label.clone(), e),
            });

            let u = random_word(&mut rng, d, 1..=2);
            let v = random_word(&mut rng, d, 1..=2);
            let cb = identities::commutator_bound(rep, &spec.seminorms, &u, &v, COMMUTATOR_SAMPLES, spec.seed + k as u64);
            out.push(match cb {
                Ok(r) => {
                    let mut c = r.to_check(&label);
                    c.outcome = Outcome::from_bool(r.converged);
                    c
                }
                Err(e) => Check::rejected(label, e),
            });
            out
        })
        .collect();
    let names = [
        "resolvent_commutation",
        "resolvent_primary_decomposition",
        "adjoint_conjugation",
        "resolvent_series",
        "duhamel",
        "commutator_expansion",
    ];
    let children = names
        .iter()
        .enumerate()
        .map(|(i, name)| group(name, draws.iter().map(|d| d[i].clone()).collect()))
        .collect();
    let mut top = group("identities", children);
    top.residuals.clear();
    top
}

fn estimates_suite(spec: &ProblemSpec) -> Check {
    let rep = &spec.representation;
    let fam = &spec.seminorms;
    let m = spec.elliptic_operator.order() as usize;
    let mut children = Vec::new();
    let hm = match enveloping::ordered_eval(rep, &spec.elliptic_operator) {
        Ok(h) => h,
        Err(e) => return Check::rejected("estimates", e),
    };
    let minus_h = -&hm;

    children.push(match semigroup::semigroup_type(&minus_h, fam, &semigroup::default_type_grid()) {
        Ok(ty) => {
            let mut c = Check::new("semigroup_type", Outcome::Pass)
                .constant("bounded_type", ty.bounded_type)
                .grid("t", &ty.t_grid);
            for (i, (w, exact)) in ty.per_seminorm.iter().zip(&ty.exact).enumerate() {
                c = c.constant(&format!("w[{i}]"), *w);
                if !exact {
                    c = c.note(format!("w[{i}] is a grid minimum"));
                }
            }
            c
        }
        Err(e) => Check::rejected("semigroup_type", e),
    });

    let mut contractive = semigroup::equicontinuity_check(&minus_h, fam, (0.0, 4.0), EquicontinuityMode::Contractive, None);
    contractive.name = "contractive_semigroup".into();
    children.push(contractive);

    if m >= 2 {
        let smoothing = match semigroup::smoothing_fit(&hm, rep, fam, m + 1, m as u32, &semigroup::default_smoothing_grid()) {
            Ok(fit) => {
                let mut c = Check::new("smoothing_constants", Outcome::Pass).grid("t", &fit.t_grid);
                let mut ok = true;
                for (pi, cs) in fit.constants.iter().enumerate() {
                    for (n, v) in cs.iter().enumerate() {
                        ok &= v.is_finite();
                        c = c.constant(&format!("C[{pi}][{n}]"), *v);
                    }
                    if let Some(f) = &fit.fit[pi] {
                        c = c
                            .constant(&format!("K[{pi}]"), f.k)
                            .constant(&format!("L[{pi}]"), f.l)
                            .constant(&format!("r2[{pi}]"), f.r2);
                    }
                }
                c.outcome = Outcome::from_bool(ok);
                c
            }
            Err(e) => Check::rejected("smoothing_constants", e),
        };
        children.push(smoothing);

        let config = GraphConfig {
            seed: spec.seed,
            ..GraphConfig::default()
        };
        let mut graph = Check::new("graph_estimate", Outcome::Pass).grid("eps", &spec.grids.eps);
        for n in 1..m {
            match semigroup::graph_estimate_fit(&hm, rep, fam, n, m, &spec.grids.eps, &config) {
                Ok(ge) => {
                    for (pi, entry) in ge.per_seminorm.iter().enumerate() {
                        graph = graph
                            .constant(&format!("E[{pi}][{n}]"), entry.e)
                            .residual(&format!("verify[{pi}][{n}]"), entry.verify_worst_residual);
                        let ok = entry.outcome == GraphOutcome::Satisfied
                            && entry.verify_worst_residual >= -GRAPH_VERIFY_TOL;
                        if !ok {
                            graph.outcome = Outcome::Fail;
                            let mut w = json!({"seminorm": pi, "n": n});
                            if let Some((eps, _)) = &entry.violating {
                                w["eps"] = json!(eps);
                            }
                            graph = graph.witness(w);
                        }
                    }
                }
                Err(e) => {
                    graph.outcome = Outcome::Rejected;
                    graph = graph.note(format!("n = {n}: {e}"));
                }
            }
        }
        children.push(graph);
    } else {
        children.push(Check::new("smoothing_constants", Outcome::Skipped).note("operator order below 2"));
    }

    let d = rep.dim();
    let growth: Vec<Check> = (0..d)
        .into_par_iter()
        .flat_map_iter(|k| {
            (0..=2usize).map(move |n| (k, n))
        })
        .map(|(k, n)| {
            let name = format!("B{}[n={n}]", k + 1);
            let r = identities::derivative_growth_bound(
                rep,
                fam,
                &AlgElement::basis(d, k),
                n,
                &spec.grids.t,
                GROWTH_SAMPLES,
                spec.seed,
            );
            match r {
                Ok(r) => {
                    let mut c = r.to_check(&name);
                    c.outcome = Outcome::from_bool(r.converged);
                    c
                }
                Err(e) => Check::rejected(name, e),
            }
        })
        .collect();
    let mut g = group("derivative_growth", growth);
    g.residuals.clear();
    children.push(g);

    children.push(yosida_convergence(&minus_h));
    children.push(laplace_agreement(&minus_h));

    let mut top = Check::new("estimates", Outcome::Pass);
    top.outcome = Outcome::from_bool(children.iter().all(|c| !c.outcome.is_failure()));
    top.children = children;
    top
}

pub const YOSIDA_ORDERS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// `‖yosida(n) − e^{A}‖` over [`YOSIDA_ORDERS`] with the fitted log-log slope.
pub fn yosida_convergence(a: &CMat) -> Check {
    let name = "yosida_convergence";
    let exact = match semigroup::expm(a, 1.0) {
        Ok(e) => e,
        Err(e) => return Check::rejected(name, e),
    };
    let mut errs = Vec::new();
    for &n in &YOSIDA_ORDERS {
        match semigroup::yosida_approx(a, 1.0, n) {
            Ok(y) => errs.push(linalg::spectral_norm(&(y - &exact))),
            Err(e) => return Check::rejected(name, e),
        }
    }
    let mut c = Check::new(name, Outcome::Pass).grid("n", &YOSIDA_ORDERS.map(|n| n as f64));
    for (n, e) in YOSIDA_ORDERS.iter().zip(&errs) {
        c = c.residual(&format!("error[{n}]"), *e);
    }
    if errs.iter().all(|e| *e <= 1e-12) {
        return c.note("approximation exact to roundoff");
    }
    let xs: Vec<f64> = YOSIDA_ORDERS.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    match linalg::linear_fit(&xs, &ys) {
        Some((_, slope, _)) => {
            c.outcome = Outcome::from_bool((-1.3..=-0.7).contains(&slope));
            c.constant("slope", slope)
        }
        None => Check::rejected(name, "log-log fit failed"),
    }
}

/// Laplace-transform resolvent against the direct inverse right of the spectrum.
pub fn laplace_agreement(a: &CMat) -> Check {
    let name = "laplace_resolvent";
    let abscissa = match linalg::spectral_abscissa(a) {
        Ok(x) => x,
        Err(e) => return Check::rejected(name, e),
    };
    let lambda = Complex64::new(abscissa + 1.0, 0.5);
    let direct = semigroup::resolvent(a, lambda, ResolventMethod::Direct);
    let laplace = semigroup::resolvent(a, lambda, ResolventMethod::Laplace);
    match (direct, laplace) {
        (Ok(d), Ok(l)) => {
            let scale = linalg::frobenius(&d.matrix).max(1.0);
            let r = linalg::frobenius(&(&d.matrix - &l.matrix)) / scale;
            Check::new(name, Outcome::from_bool(r <= LAPLACE_TOL))
                .residual("residual", r)
                .constant("lambda_re", lambda.re)
                .constant("lambda_im", lambda.im)
                .constant("panels", l.panels as f64)
        }
        (Err(e), _) | (_, Err(e)) => Check::rejected(name, e),
    }
}

fn pipeline_suite(spec: &ProblemSpec) -> Check {
    let config = PipelineConfig {
        mu_grid: spec.grids.mu.clone(),
        seed: spec.seed,
        ..PipelineConfig::default()
    };
    match exponentiate::check_exponentiability(
        &spec.representation,
        &spec.seminorms,
        &spec.elliptic_operator,
        &config,
    ) {
        Ok(r) => r.to_check(),
        Err(e) => Check::rejected("exponentiability", e),
    }
}
