use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liexp"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("liexp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn check(spec: &str, suite: &str, extra: &[&str]) -> Output {
    let path = scratch(&format!("{suite}-{:x}.json", fxhash(spec)), spec);
    bin()
        .args(["check", "--spec", path.to_str().unwrap(), "--suite", suite])
        .args(extra)
        .output()
        .unwrap()
}

fn fxhash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

const SO3: &str = r#"{"algebra": "so3", "representation": "spin-1", "seed": 5}"#;
const NON_SKEW: &str = r#"{"algebra": "abelian-1", "representation": {"matrices": [[[1, 0], [0, 0]]]}}"#;

#[test]
fn so3_all_exits_zero_with_versioned_report() {
    let out = check(SO3, "all", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], "liexp-report/1");
    assert_eq!(report["outcome"], "pass");
    assert_eq!(report["inputs_digest"].as_str().unwrap().len(), 64);
    assert!(report["defaulted"].as_array().unwrap().iter().any(|d| d == "seminorms"));
}

#[test]
fn non_skew_pipeline_exits_one_naming_failures() {
    let out = check(NON_SKEW, "pipeline", &[]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failing: Vec<String> = report["failing"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_string())
        .collect();
    assert!(failing.iter().any(|f| f.contains("conservativity[B1]")), "{failing:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("conservativity"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(check(SO3, "identites", &[]).status.code(), Some(2));
    assert_eq!(check("{\"algebra\": ", "all", &[]).status.code(), Some(2));
    let unknown = check(r#"{"algebra": "so3", "representation": "spin-0"}"#, "all", &[]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("known fixtures"));
    let shape = check(r#"{"algebra": {"structure": [[[0, 1]]]}, "representation": "x"}"#, "all", &[]);
    assert_eq!(shape.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&shape.stderr).contains("algebra.structure[0][0]"));
    assert_eq!(check(SO3, "all", &["--tol", "-1"]).status.code(), Some(2));
    let missing = bin().args(["check", "--spec", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn adversarial_inputs_never_crash() {
    let cases = [
        "",
        "null",
        "[]",
        r#"{"algebra": "so3", "representation": "spin-100000"}"#,
        r#"{"algebra": "so3", "representation": "spin-18446744073709551615/2"}"#,
        r#"{"algebra": "abelian-1", "representation": "fourier-9223372036854775807"}"#,
        r#"{"algebra": "abelian-99999999999", "representation": "diag-skew"}"#,
        r#"{"algebra": {"structure": []}, "representation": {"matrices": []}}"#,
        r#"{"algebra": "abelian-1", "representation": {"matrices": [[[1e308, 0], [0, -1e308]]]}}"#,
        r#"{"algebra": "abelian-1", "representation": {"matrices": [[[0, [0, 1]], [[0, 1], 0]]]}, "grids": {"t": []}}"#,
        r#"{"algebra": "so3", "representation": "spin-1", "elliptic_operator": {"terms": [{"alpha": [1, 0, 0], "coeff": 1}]}}"#,
        r#"{"algebra": "so3", "representation": "spin-1", "seminorms": [{"kind": "weighted_l2", "weights": [0, 0, 0]}]}"#,
    ];
    for (i, spec) in cases.iter().enumerate() {
        let out = check(spec, "all", &[]);
        let code = out.status.code();
        assert!(matches!(code, Some(0..=2)), "case {i}: {code:?} {}", String::from_utf8_lossy(&out.stderr));
        assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"), "case {i}");
    }
}

#[test]
fn reports_are_reproducible_and_verifiable() {
    let dir = std::env::temp_dir().join(format!("liexp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for path in [&a, &b] {
        let out = check(SO3, "all", &["--seed", "9", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let strip = |p: &PathBuf| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("wall_time_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    let verified = bin().args(["verify", "--report", a.to_str().unwrap()]).output().unwrap();
    assert_eq!(verified.status.code(), Some(0), "{}", String::from_utf8_lossy(&verified.stderr));

    let tampered = std::fs::read_to_string(&a).unwrap().replacen("\"pass\"", "\"fail\"", 1);
    let t = dir.join("tampered.json");
    std::fs::write(&t, tampered).unwrap();
    let out = bin().args(["verify", "--report", t.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threads_env_is_honored_and_validated() {
    let path = scratch("threads.json", SO3);
    let ok = bin()
        .env("LIEXP_THREADS", "1")
        .args(["check", "--spec", path.to_str().unwrap(), "--suite", "pipeline"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin()
        .env("LIEXP_THREADS", "many")
        .args(["check", "--spec", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fixtures_and_schemas_print() {
    let out = bin().arg("fixtures").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("spin-<j>"));
    for kind in ["spec", "report"] {
        let out = bin().args(["schema", kind]).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v["$id"].as_str().unwrap().starts_with("liexp-"));
    }
}
