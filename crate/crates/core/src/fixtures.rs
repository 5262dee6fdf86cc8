//! Built-in algebras and representations, addressable by name.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg::{self, CMat};
use crate::repspace::MatrixRep;

pub const ALGEBRA_FIXTURES: &[&str] = &["abelian-<n>", "heisenberg", "so3", "sl2"];

/// `(algebra, representation, description)` triples understood by [`representation`].
pub const REPRESENTATION_FIXTURES: &[(&str, &str, &str)] = &[
    ("abelian-<n>", "diag-skew", "B_k = i·diag(integers), N = 4"),
    ("abelian-<n>", "diag-skew-<N>", "B_k = i·diag(integers) on C^N"),
    ("abelian-1", "fourier-<M>", "B = diag(ik), k = -M..M"),
    ("heisenberg", "rep3", "B1 = E12, B2 = E23, B3 = E13"),
    ("so3", "spin-<j>", "B_k = -i J_k, j in {1/2, 1, 3/2, ...}"),
    ("sl2", "rep2", "defining representation on C^2"),
    ("sl2", "rep3", "three-dimensional irreducible representation"),
    ("<any>", "adjoint", "ad matrices of the basis"),
];

pub fn heisenberg() -> LieAlgebra {
    LieAlgebra::from_brackets(3, &[(0, 1, 2, 1.0)]).expect("heisenberg algebra")
}

pub fn so3() -> LieAlgebra {
    LieAlgebra::from_brackets(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
        .expect("so(3) algebra")
}

/// Basis (H, E, F) with `[H,E] = 2E`, `[H,F] = −2F`, `[E,F] = H`.
pub fn sl2() -> LieAlgebra {
    LieAlgebra::from_brackets(3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)])
        .expect("sl(2) algebra")
}

/// Largest abelian fixture dimension accepted by name.
pub const MAX_FIXTURE_ALGEBRA_DIM: usize = 16;
/// Largest representation space a named fixture may build.
pub const MAX_FIXTURE_SPACE_DIM: usize = 256;

fn too_large(name: &str, what: &str, got: usize, max: usize) -> Error {
    Error::Invalid(format!("fixture {name:?}: {what} {got} exceeds {max}"))
}

pub fn algebra(name: &str) -> Result<LieAlgebra> {
    match name {
        "heisenberg" => Ok(heisenberg()),
        "so3" => Ok(so3()),
        "sl2" => Ok(sl2()),
        _ => {
            if let Some(n) = name.strip_prefix("abelian-") {
                if let Ok(n) = n.parse::<usize>() {
                    if n > MAX_FIXTURE_ALGEBRA_DIM {
                        return Err(too_large(name, "dimension", n, MAX_FIXTURE_ALGEBRA_DIM));
                    }
                    if n > 0 {
                        return Ok(LieAlgebra::abelian(n));
                    }
                }
            }
            Err(Error::UnknownFixture {
                name: name.to_string(),
                known: ALGEBRA_FIXTURES.join(", "),
            })
        }
    }
}

fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = linalg::zeros(n, n);
    m[(i, j)] = linalg::ONE;
    m
}

pub fn heisenberg_rep3() -> MatrixRep {
    MatrixRep::new(heisenberg(), vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)])
        .expect("heisenberg 3x3 representation")
}

/// Spin-`two_j/2` representation of so(3): `B_k = −i J_k`.
pub fn so3_spin(two_j: usize) -> Result<MatrixRep> {
    if two_j == 0 {
        return Err(Error::Invalid("spin must be positive".into()));
    }
    let n = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut jz = linalg::zeros(n, n);
    let mut jp = linalg::zeros(n, n);
    for a in 0..n {
        let m = j - a as f64;
        jz[(a, a)] = linalg::re(m);
        if a > 0 {
            // J+ |m⟩ = √(j(j+1) − m(m+1)) |m+1⟩, |m+1⟩ sits at index a−1
            jp[(a - 1, a)] = linalg::re((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * linalg::re(0.5);
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    let mi = Complex64::new(0.0, -1.0);
    MatrixRep::new(so3(), vec![jx * mi, jy * mi, jz * mi])
}

pub fn sl2_rep2() -> MatrixRep {
    let h = linalg::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    MatrixRep::new(sl2(), vec![h, unit(2, 0, 1), unit(2, 1, 0)]).expect("sl(2) defining representation")
}

/// Highest-weight basis v0, v1, v2: `H v_k = (2−2k) v_k`, `F v_k = v_{k+1}`,
/// `E v_k = k(3−k) v_{k−1}`.
pub fn sl2_rep3() -> MatrixRep {
    let h = linalg::from_real(3, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -2.0]);
    let e = linalg::from_real(3, 3, &[0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
    let f = linalg::from_real(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    MatrixRep::new(sl2(), vec![h, e, f]).expect("sl(2) three-dimensional representation")
}

pub fn adjoint(alg: &LieAlgebra) -> Result<MatrixRep> {
    let d = alg.dim();
    let mats = (0..d)
        .map(|k| alg.ad_matrix(&crate::lie::AlgElement::basis(d, k)))
        .collect::<Result<Vec<_>>>()?;
    MatrixRep::new(alg.clone(), mats)
}

/// Commuting skew-Hermitian diagonals `B_k = i·diag(v_k)` on `ℂ^n`.
pub fn abelian_diag_skew(d: usize, n: usize) -> MatrixRep {
    let mats = (0..d)
        .map(|k| {
            CMat::from_fn(n, n, |a, b| {
                if a == b {
                    let v = ((k + 1) * (a + 1)) % 5;
                    Complex64::new(0.0, v as f64 - 2.0)
                } else {
                    linalg::ZERO
                }
            })
        })
        .collect();
    MatrixRep::new(LieAlgebra::abelian(d), mats).expect("commuting diagonals")
}

/// `B = diag(ik)`, `k = −m..m`, on `ℂ^{2m+1}`: the Fourier model of `d/dx`.
pub fn fourier(m: usize) -> MatrixRep {
    let n = 2 * m + 1;
    let b = CMat::from_fn(n, n, |a, c| {
        if a == c {
            Complex64::new(0.0, a as f64 - m as f64)
        } else {
            linalg::ZERO
        }
    });
    MatrixRep::new(LieAlgebra::abelian(1), vec![b]).expect("fourier model")
}

fn parse_spin(s: &str) -> Option<usize> {
    if let Some((num, den)) = s.split_once('/') {
        let num: usize = num.trim().parse().ok()?;
        (den.trim() == "2").then_some(num)
    } else {
        let j: f64 = s.trim().parse().ok()?;
        let two_j = (2.0 * j).round();
        ((2.0 * j - two_j).abs() < 1e-12 && two_j > 0.0).then_some(two_j as usize)
    }
}

/// Resolves a representation fixture for the named algebra.
pub fn representation(algebra_name: &str, rep_name: &str) -> Result<MatrixRep> {
    let alg = algebra(algebra_name)?;
    let unknown = || Error::UnknownFixture {
        name: format!("{algebra_name}/{rep_name}"),
        known: REPRESENTATION_FIXTURES
            .iter()
            .map(|(a, r, _)| format!("{a}/{r}"))
            .collect::<Vec<_>>()
            .join(", "),
    };
    if rep_name == "adjoint" {
        return adjoint(&alg);
    }
    match (algebra_name, rep_name) {
        ("heisenberg", "rep3") => Ok(heisenberg_rep3()),
        ("sl2", "rep2") => Ok(sl2_rep2()),
        ("sl2", "rep3") => Ok(sl2_rep3()),
        ("so3", r) => {
            let two_j = r
                .strip_prefix("spin-")
                .and_then(parse_spin)
                .ok_or_else(unknown)?;
            if two_j >= MAX_FIXTURE_SPACE_DIM {
                return Err(too_large(rep_name, "space dimension", two_j.saturating_add(1), MAX_FIXTURE_SPACE_DIM));
            }
            so3_spin(two_j)
        }
        (a, r) if a.starts_with("abelian-") => {
            if r == "diag-skew" {
                return Ok(abelian_diag_skew(alg.dim(), 4));
            }
            if let Some(n) = r.strip_prefix("diag-skew-").and_then(|s| s.parse::<usize>().ok()) {
                if n > MAX_FIXTURE_SPACE_DIM {
                    return Err(too_large(rep_name, "space dimension", n, MAX_FIXTURE_SPACE_DIM));
                }
                if n > 0 {
                    return Ok(abelian_diag_skew(alg.dim(), n));
                }
            }
            if let Some(m) = r.strip_prefix("fourier-").and_then(|s| s.parse::<usize>().ok()) {
                if alg.dim() == 1 {
                    if m >= MAX_FIXTURE_SPACE_DIM / 2 {
                        return Err(too_large(rep_name, "space dimension", m.saturating_mul(2).saturating_add(1), MAX_FIXTURE_SPACE_DIM));
                    }
                    return Ok(fourier(m));
                }
            }
            Err(unknown())
        }
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_reps_are_skew_hermitian_reps() {
        for two_j in 1..=6 {
            let rep = so3_spin(two_j).unwrap();
            assert_eq!(rep.space_dim(), two_j + 1);
            for b in rep.matrices() {
                assert!(linalg::frobenius(&(b + b.adjoint())) < 1e-14);
            }
            // Casimir −ΣB_k² = j(j+1) I
            let j = two_j as f64 / 2.0;
            let cas = rep.matrices().iter().fold(linalg::zeros(two_j + 1, two_j + 1), |acc, b| acc - b * b);
            let want = linalg::identity(two_j + 1) * linalg::re(j * (j + 1.0));
            assert!(linalg::frobenius(&(cas - want)) < 1e-12);
        }
    }

    #[test]
    fn named_fixtures_resolve() {
        assert_eq!(representation("heisenberg", "rep3").unwrap().space_dim(), 3);
        assert_eq!(representation("so3", "spin-1").unwrap().space_dim(), 3);
        assert_eq!(representation("so3", "spin-3/2").unwrap().space_dim(), 4);
        assert_eq!(representation("sl2", "rep3").unwrap().space_dim(), 3);
        assert_eq!(representation("abelian-3", "diag-skew").unwrap().dim(), 3);
        assert_eq!(representation("abelian-1", "fourier-8").unwrap().space_dim(), 17);
        assert_eq!(representation("heisenberg", "adjoint").unwrap().space_dim(), 3);
        assert!(matches!(algebra("su7"), Err(Error::UnknownFixture { .. })));
        assert!(representation("so3", "rep3").is_err());
    }
}
