//! Problem specifications: JSON ingestion with fixture expansion and
//! recorded defaults, and the canonical emitted form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::enveloping::OrderedPoly;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::lie::LieAlgebra;
use crate::linalg::{self, CMat};
use crate::repspace::{MatrixRep, Seminorm, SeminormFamily};

pub const SPEC_SCHEMA: &str = "liexp-spec/1";
/// Size limits that keep adversarial inputs from exhausting memory.
pub const MAX_ALGEBRA_DIM: usize = crate::fixtures::MAX_FIXTURE_ALGEBRA_DIM;
pub const MAX_SPACE_DIM: usize = crate::fixtures::MAX_FIXTURE_SPACE_DIM;
pub const MAX_GRID_LEN: usize = 4096;
/// Bound on the modulus of any matrix entry, structure constant or coefficient.
pub const MAX_ENTRY_ABS: f64 = 1e6;

fn bounded(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite() && z.norm() <= MAX_ENTRY_ABS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexJson {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexJson {
    fn value(self) -> Complex64 {
        match self {
            ComplexJson::Real(x) => Complex64::new(x, 0.0),
            ComplexJson::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn complex_out(z: Complex64) -> ComplexJson {
    ComplexJson::Pair([z.re, z.im])
}

type MatrixJson = Vec<Vec<ComplexJson>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AlgebraJson {
    Fixture(String),
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        structure: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RepresentationJson {
    Fixture(String),
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        matrices: Vec<MatrixJson>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SeminormJson {
    WeightedL2 { weights: Vec<f64> },
    WeightedLinf { weights: Vec<f64> },
    QuotientL2 { projection: MatrixJson },
    Max { members: Vec<SeminormJson> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    alpha: Vec<u32>,
    coeff: ComplexJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OperatorJson {
    Named(String),
    Terms { terms: Vec<TermJson> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    identity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duhamel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    series: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    algebra: AlgebraJson,
    representation: RepresentationJson,
    #[serde(default)]
    seminorms: Vec<SeminormJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elliptic_operator: Option<OperatorJson>,
    #[serde(default)]
    grids: GridsJson,
    #[serde(default)]
    tolerances: TolerancesJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    defaulted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    /// Times for conjugation identities and group growth bounds.
    pub t: Vec<f64>,
    /// Scales `ε ∈ (0, 1]` for the graph estimate.
    pub eps: Vec<f64>,
    /// Real `μ` for dissipativity checks.
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub identity: f64,
    pub duhamel: f64,
    pub series: f64,
}

/// A validated problem with every fixture expanded and every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub algebra_name: Option<String>,
    pub algebra: LieAlgebra,
    pub representation_name: Option<String>,
    pub representation: MatrixRep,
    pub seminorms: SeminormFamily,
    pub elliptic_operator: OrderedPoly,
    pub grids: Grids,
    pub tolerances: Tolerances,
    /// Random draws per identity in the identities suite.
    pub draws: usize,
    pub seed: u64,
    /// Fields filled in from defaults, in the order they were applied.
    pub defaulted: Vec<String>,
}

fn spec_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec {
        field: field.into(),
        message: message.into(),
    }
}

fn matrix_from_json(field: &str, m: &MatrixJson) -> Result<CMat> {
    let rows = m.len();
    if rows == 0 || rows > MAX_SPACE_DIM {
        return Err(spec_err(field, format!("matrix must have 1..={MAX_SPACE_DIM} rows, got {rows}")));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != rows {
            return Err(spec_err(
                format!("{field}[{i}]"),
                format!("matrix must be square: row has {} entries, expected {rows}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|z| !bounded(z.value())) {
            return Err(spec_err(
                format!("{field}[{i}][{j}]"),
                format!("entries must be finite with modulus at most {MAX_ENTRY_ABS:e}"),
            ));
        }
    }
    Ok(CMat::from_fn(rows, rows, |i, j| m[i][j].value()))
}

fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_out(m[(i, j)])).collect())
        .collect()
}

fn check_weights(field: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() || w.len() > MAX_SPACE_DIM {
        return Err(spec_err(field, format!("weights must have 1..={MAX_SPACE_DIM} entries")));
    }
    if let Some(i) = w.iter().position(|x| !(0.0..=MAX_ENTRY_ABS).contains(x)) {
        return Err(spec_err(
            format!("{field}[{i}]"),
            format!("weights must lie in [0, {MAX_ENTRY_ABS:e}]"),
        ));
    }
    Ok(())
}

fn seminorm_from_json(field: &str, s: &SeminormJson, depth: usize) -> Result<Seminorm> {
    if depth > 8 {
        return Err(spec_err(field, "seminorm nesting is too deep"));
    }
    let p = match s {
        SeminormJson::WeightedL2 { weights } => {
            check_weights(&format!("{field}.weights"), weights)?;
            Seminorm::WeightedL2 { weights: weights.clone() }
        }
        SeminormJson::WeightedLinf { weights } => {
            check_weights(&format!("{field}.weights"), weights)?;
            Seminorm::WeightedLinf { weights: weights.clone() }
        }
        SeminormJson::QuotientL2 { projection } => Seminorm::QuotientL2 {
            projection: matrix_from_json(&format!("{field}.projection"), projection)?,
        },
        SeminormJson::Max { members } => {
            if members.is_empty() {
                return Err(spec_err(format!("{field}.members"), "max needs at least one member"));
            }
            Seminorm::Max {
                members: members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| seminorm_from_json(&format!("{field}.members[{i}]"), m, depth + 1))
                    .collect::<Result<_>>()?,
            }
        }
    };
    p.validate().map_err(|e| spec_err(field, e.to_string()))?;
    Ok(p)
}

fn seminorm_to_json(p: &Seminorm) -> SeminormJson {
    match p {
        Seminorm::WeightedL2 { weights } => SeminormJson::WeightedL2 { weights: weights.clone() },
        Seminorm::WeightedLinf { weights } => SeminormJson::WeightedLinf { weights: weights.clone() },
        Seminorm::QuotientL2 { projection } => SeminormJson::QuotientL2 {
            projection: matrix_to_json(projection),
        },
        Seminorm::Max { members } => SeminormJson::Max {
            members: members.iter().map(seminorm_to_json).collect(),
        },
    }
}

fn check_grid(field: &str, g: &[f64], allow: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    if g.is_empty() || g.len() > MAX_GRID_LEN {
        return Err(spec_err(field, format!("grid must have 1..={MAX_GRID_LEN} points")));
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite() || !allow(*x)) {
        return Err(spec_err(format!("{field}[{i}]"), format!("grid points must be {what}")));
    }
    Ok(())
}

pub fn default_t_grid() -> Vec<f64> {
    linalg::linspace(-2.0, 2.0, 64)
}

pub fn default_eps_grid() -> Vec<f64> {
    crate::semigroup::default_eps_grid()
}

pub fn default_tolerances() -> Tolerances {
    Tolerances {
        identity: crate::identities::IDENTITY_TOL,
        duhamel: crate::identities::DUHAMEL_TOL,
        series: crate::identities::IDENTITY_TOL,
    }
}

pub const DEFAULT_DRAWS: usize = 8;

fn decode(text: &str) -> Result<SpecJson> {
    serde_json::from_str(text).map_err(|e| {
        spec_err(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Parses and validates a problem specification.
pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    let raw = decode(text)?;
    if let Some(s) = &raw.schema {
        if s != SPEC_SCHEMA {
            return Err(spec_err("schema", format!("expected {SPEC_SCHEMA:?}, got {s:?}")));
        }
    }
    let mut defaulted = raw.defaulted.clone();
    let mut note_default = |field: &str| {
        if !defaulted.iter().any(|d| d == field) {
            defaulted.push(field.to_string());
        }
    };

    let (algebra_name, algebra) = match &raw.algebra {
        AlgebraJson::Fixture(name) => (Some(name.clone()), fixtures::algebra(name)?),
        AlgebraJson::Explicit { name, structure } => {
            let d = structure.len();
            if d == 0 || d > MAX_ALGEBRA_DIM {
                return Err(spec_err(
                    "algebra.structure",
                    format!("dimension must lie in 1..={MAX_ALGEBRA_DIM}, got {d}"),
                ));
            }
            for (i, plane) in structure.iter().enumerate() {
                if plane.len() != d {
                    return Err(spec_err(
                        format!("algebra.structure[{i}]"),
                        format!("expected {d} rows, got {}", plane.len()),
                    ));
                }
                for (j, row) in plane.iter().enumerate() {
                    if row.len() != d {
                        return Err(spec_err(
                            format!("algebra.structure[{i}][{j}]"),
                            format!("expected {d} entries, got {}", row.len()),
                        ));
                    }
                    if row.iter().any(|x| !bounded(Complex64::new(*x, 0.0))) {
                        return Err(spec_err(
                            format!("algebra.structure[{i}][{j}]"),
                            format!("entries must be finite with modulus at most {MAX_ENTRY_ABS:e}"),
                        ));
                    }
                }
            }
            let alg = LieAlgebra::from_nested(structure).map_err(|e| spec_err("algebra.structure", e.to_string()))?;
            (name.clone(), alg)
        }
    };

    let (representation_name, representation) = match &raw.representation {
        RepresentationJson::Fixture(name) => {
            let alg_name = algebra_name.as_deref().ok_or_else(|| {
                spec_err("representation", "a named representation needs a named algebra")
            })?;
            let rep = fixtures::representation(alg_name, name)?;
            if rep.algebra() != &algebra {
                return Err(spec_err("representation", "fixture does not match the given algebra"));
            }
            (Some(name.clone()), rep)
        }
        RepresentationJson::Explicit { name, matrices } => {
            if matrices.len() != algebra.dim() {
                return Err(spec_err(
                    "representation.matrices",
                    format!("expected {} matrices, got {}", algebra.dim(), matrices.len()),
                ));
            }
            let mats = matrices
                .iter()
                .enumerate()
                .map(|(k, m)| matrix_from_json(&format!("representation.matrices[{k}]"), m))
                .collect::<Result<Vec<_>>>()?;
            let n = mats[0].nrows();
            if let Some(k) = mats.iter().position(|m| m.nrows() != n) {
                return Err(spec_err(
                    format!("representation.matrices[{k}]"),
                    format!("all matrices must be {n}x{n}"),
                ));
            }
            let rep = MatrixRep::new(algebra.clone(), mats)
                .map_err(|e| spec_err("representation.matrices", e.to_string()))?;
            (name.clone(), rep)
        }
    };
    let n = representation.space_dim();

    let seminorms = if raw.seminorms.is_empty() {
        note_default("seminorms");
        SeminormFamily::single(Seminorm::l2(n))
    } else {
        let ps = raw
            .seminorms
            .iter()
            .enumerate()
            .map(|(i, s)| seminorm_from_json(&format!("seminorms[{i}]"), s, 0))
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = ps.iter().position(|p| p.space_dim() != n) {
            return Err(spec_err(
                format!("seminorms[{i}]"),
                format!("seminorm acts on dimension {}, representation on {n}", ps[i].space_dim()),
            ));
        }
        SeminormFamily::new(ps).map_err(|e| spec_err("seminorms", e.to_string()))?
    };

    let d = algebra.dim();
    let elliptic_operator = match &raw.elliptic_operator {
        None => {
            note_default("elliptic_operator");
            OrderedPoly::minus_laplacian(d)
        }
        Some(OperatorJson::Named(name)) if name == "minus_laplacian" => OrderedPoly::minus_laplacian(d),
        Some(OperatorJson::Named(name)) => {
            return Err(spec_err(
                "elliptic_operator",
                format!("unknown operator {name:?}; known: minus_laplacian, or {{\"terms\": [...]}}"),
            ))
        }
        Some(OperatorJson::Terms { terms }) => {
            if terms.is_empty() {
                return Err(spec_err("elliptic_operator.terms", "operator needs at least one term"));
            }
            for (i, t) in terms.iter().enumerate() {
                if t.alpha.len() != d {
                    return Err(spec_err(
                        format!("elliptic_operator.terms[{i}].alpha"),
                        format!("multi-index must have {d} entries, got {}", t.alpha.len()),
                    ));
                }
                if t.alpha.iter().sum::<u32>() > 16 {
                    return Err(spec_err(format!("elliptic_operator.terms[{i}].alpha"), "order must not exceed 16"));
                }
                let c = t.coeff.value();
                if !bounded(c) {
                    return Err(spec_err(
                        format!("elliptic_operator.terms[{i}].coeff"),
                        format!("coefficient must be finite with modulus at most {MAX_ENTRY_ABS:e}"),
                    ));
                }
            }
            OrderedPoly::from_terms(d, terms.iter().map(|t| (t.alpha.clone(), t.coeff.value())))
                .map_err(|e| spec_err("elliptic_operator", e.to_string()))?
        }
    };

    let t = match &raw.grids.t {
        Some(g) => {
            check_grid("grids.t", g, |_| true, "finite")?;
            g.clone()
        }
        None => {
            note_default("grids.t");
            default_t_grid()
        }
    };
    let eps = match &raw.grids.eps {
        Some(g) => {
            check_grid("grids.eps", g, |x| x > 0.0 && x <= 1.0, "in (0, 1]")?;
            g.clone()
        }
        None => {
            note_default("grids.eps");
            default_eps_grid()
        }
    };
    let mu = match &raw.grids.mu {
        Some(g) => {
            check_grid("grids.mu", g, |x| x != 0.0, "finite and nonzero")?;
            g.clone()
        }
        None => {
            note_default("grids.mu");
            crate::repspace::default_mu_grid()
        }
    };

    let defaults = default_tolerances();
    let mut tol = |field: &str, v: Option<f64>, default: f64| -> Result<f64> {
        match v {
            Some(x) if x.is_finite() && x > 0.0 => Ok(x),
            Some(_) => Err(spec_err(format!("tolerances.{field}"), "tolerance must be positive and finite")),
            None => {
                note_default(&format!("tolerances.{field}"));
                Ok(default)
            }
        }
    };
    let tolerances = Tolerances {
        identity: tol("identity", raw.tolerances.identity, defaults.identity)?,
        duhamel: tol("duhamel", raw.tolerances.duhamel, defaults.duhamel)?,
        series: tol("series", raw.tolerances.series, defaults.series)?,
    };
    let draws = match raw.draws {
        Some(0) => return Err(spec_err("draws", "draws must be positive")),
        Some(k) if k > 1000 => return Err(spec_err("draws", "draws must not exceed 1000")),
        Some(k) => k,
        None => {
            note_default("draws");
            DEFAULT_DRAWS
        }
    };
    let seed = match raw.seed {
        Some(s) => s,
        None => {
            note_default("seed");
            0
        }
    };

    Ok(ProblemSpec {
        algebra_name,
        algebra,
        representation_name,
        representation,
        seminorms,
        elliptic_operator,
        grids: Grids { t, eps, mu },
        tolerances,
        draws,
        seed,
        defaulted,
    })
}

pub fn parse_spec_file(path: &std::path::Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| spec_err(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_spec(&text)
}

impl ProblemSpec {
    fn to_json(&self) -> SpecJson {
        SpecJson {
            schema: Some(SPEC_SCHEMA.to_string()),
            algebra: AlgebraJson::Explicit {
                name: self.algebra_name.clone(),
                structure: self.algebra.structure_nested(),
            },
            representation: RepresentationJson::Explicit {
                name: self.representation_name.clone(),
                matrices: self.representation.matrices().iter().map(matrix_to_json).collect(),
            },
            seminorms: self.seminorms.entries.iter().map(seminorm_to_json).collect(),
            elliptic_operator: Some(OperatorJson::Terms {
                terms: self
                    .elliptic_operator
                    .terms()
                    .iter()
                    .map(|(alpha, c)| TermJson {
                        alpha: alpha.clone(),
                        coeff: complex_out(*c),
                    })
                    .collect(),
            }),
            grids: GridsJson {
                t: Some(self.grids.t.clone()),
                eps: Some(self.grids.eps.clone()),
                mu: Some(self.grids.mu.clone()),
            },
            tolerances: TolerancesJson {
                identity: Some(self.tolerances.identity),
                duhamel: Some(self.tolerances.duhamel),
                series: Some(self.tolerances.series),
            },
            draws: Some(self.draws),
            seed: Some(self.seed),
            defaulted: self.defaulted.clone(),
        }
    }

    /// Canonical fully expanded JSON value; parsing it gives back `self`.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_json()).expect("spec serializes")
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("spec serializes")
    }

    /// Overrides the identity and series tolerances.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerances.identity = tol;
        self.tolerances.series = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.defaulted.retain(|d| d != "seed");
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_fixture_expands() {
        let s = parse_spec(r#"{"algebra": "heisenberg", "representation": "rep3"}"#).unwrap();
        assert_eq!(s.algebra.dim(), 3);
        assert_eq!(s.representation.space_dim(), 3);
        assert_eq!(s.seminorms.entries, vec![Seminorm::l2(3)]);
        assert!(s.defaulted.contains(&"seminorms".to_string()));
        assert!(s.elliptic_operator.is_minus_laplacian());
    }

    #[test]
    fn emit_parse_round_trip() {
        let text = r#"{"algebra": "so3", "representation": "spin-1", "seed": 7,
            "seminorms": [{"kind": "weighted_l2", "weights": [1, 2, 0]},
                          {"kind": "max", "members": [{"kind": "weighted_linf", "weights": [1, 1, 1]}]}],
            "elliptic_operator": {"terms": [{"alpha": [2, 0, 0], "coeff": -1},
                                            {"alpha": [0, 2, 0], "coeff": [-1, 0]},
                                            {"alpha": [0, 0, 2], "coeff": -2}]}}"#;
        let s = parse_spec(text).unwrap();
        let emitted = s.emit();
        let again = parse_spec(&emitted).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.emit(), emitted);
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn explicit_algebra_and_matrices() {
        let text = r#"{"algebra": {"structure": [[[0]]]},
                       "representation": {"matrices": [[[[0, 1], 0], [0, [0, -1]]]]}}"#;
        let s = parse_spec(text).unwrap();
        assert_eq!(s.representation.matrix(0)[(0, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(parse_spec(&s.emit()).unwrap(), s);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_tensor = r#"{"algebra": {"structure": [[[0, 0], [0]], [[0, 0], [0, 0]]]}, "representation": "x"}"#;
        match parse_spec(bad_tensor) {
            Err(Error::Spec { field, .. }) => assert_eq!(field, "algebra.structure[0][1]"),
            other => panic!("{other:?}"),
        }
        let bad_rep = r#"{"algebra": "so3", "representation": "spin-7/3"}"#;
        assert!(matches!(parse_spec(bad_rep), Err(Error::UnknownFixture { .. })));
        let bad_alg = r#"{"algebra": "e8", "representation": "adjoint"}"#;
        match parse_spec(bad_alg) {
            Err(Error::UnknownFixture { known, .. }) => assert!(known.contains("heisenberg")),
            other => panic!("{other:?}"),
        }
        let bad_json = "{\n  \"algebra\": \"so3\",\n  \"representation\": 3\n}";
        match parse_spec(bad_json) {
            Err(Error::Spec { field, .. }) => assert!(field.starts_with("line "), "{field}"),
            other => panic!("{other:?}"),
        }
        let unknown_field = r#"{"algebra": "so3", "representation": "spin-1", "sede": 3}"#;
        assert!(parse_spec(unknown_field).unwrap_err().to_string().contains("sede"));
        let wrong_dim = r#"{"algebra": "so3", "representation": "spin-1",
            "seminorms": [{"kind": "weighted_l2", "weights": [1, 1]}]}"#;
        match parse_spec(wrong_dim) {
            Err(Error::Spec { field, .. }) => assert_eq!(field, "seminorms[0]"),
            other => panic!("{other:?}"),
        }
        let not_rep = r#"{"algebra": "so3", "representation": {"matrices": [[[1]], [[1]], [[1]]]}}"#;
        assert!(parse_spec(not_rep).is_err());
    }
}
