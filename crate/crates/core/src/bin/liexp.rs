use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use liexp::cli::{self, Suite};
use liexp::fixtures;
use liexp::spec::{self, ProblemSpec};

const SPEC_SCHEMA_JSON: &str = include_str!("../../schema/spec.schema.json");
const REPORT_SCHEMA_JSON: &str = include_str!("../../schema/report.schema.json");

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "liexp", version, about = "Numerical checks for exponentiating Lie algebra representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite of checks on a problem specification.
    Check {
        #[arg(long)]
        spec: PathBuf,
        /// identities, estimates, pipeline or all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the identity and series tolerances.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Re-run the spec embedded in a report and compare, ignoring timing.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
    /// List the built-in algebras and representations.
    Fixtures,
    /// Print a JSON schema.
    Schema {
        #[arg(value_enum, default_value_t = SchemaKind::Report)]
        kind: SchemaKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaKind {
    Spec,
    Report,
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LIEXP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("LIEXP_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("LIEXP_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                _ => Ok(()),
            }
        }
    }
}

fn check(spec_path: &PathBuf, suite: &str, out: Option<&PathBuf>, seed: Option<u64>, tol: Option<f64>) -> ExitCode {
    let suite = match Suite::from_str(suite) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let mut spec: ProblemSpec = match spec::parse_spec_file(spec_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    if let Some(tol) = tol {
        if !(tol.is_finite() && tol > 0.0) {
            return input_error(format!("--tol must be positive and finite, got {tol}"));
        }
        spec = spec.with_tolerance(tol);
    }
    let report = cli::run(&spec, suite);
    if let Err(e) = emit(&report.to_json(), out) {
        return input_error(e);
    }
    for f in &report.failing {
        eprintln!("failed: {f}");
    }
    ExitCode::from(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn verify(path: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("{}: {e}", path.display())),
    };
    let stored: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return input_error(format!("report is not JSON: {e}")),
    };
    if stored.get("schema").and_then(|s| s.as_str()) != Some(liexp::report::REPORT_SCHEMA) {
        return input_error(format!("report schema must be {:?}", liexp::report::REPORT_SCHEMA));
    }
    let Some(suite) = stored.get("suite").and_then(|s| s.as_str()).map(Suite::from_str) else {
        return input_error("report has no suite");
    };
    let suite = match suite {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let Some(spec_value) = stored.get("spec") else {
        return input_error("report has no embedded spec");
    };
    let spec = match spec::parse_spec(&spec_value.to_string()) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let rerun = serde_json::to_value(cli::run(&spec, suite)).expect("report serializes");
    if cli::strip_timing(&rerun) == cli::strip_timing(&stored) {
        println!("report reproduced: {}", path.display());
        ExitCode::from(EXIT_PASS)
    } else {
        eprintln!("report differs from a fresh run: {}", path.display());
        ExitCode::from(EXIT_FAIL)
    }
}

fn list_fixtures() -> ExitCode {
    let mut text = String::from("algebras:\n");
    for a in fixtures::ALGEBRA_FIXTURES {
        text.push_str(&format!("  {a}\n"));
    }
    text.push_str("representations:\n");
    for (a, r, desc) in fixtures::REPRESENTATION_FIXTURES {
        text.push_str(&format!("  {a:<12} {r:<16} {desc}\n"));
    }
    print_quietly(&text)
}

/// Writes to stdout; a closed pipe is not an error.
fn print_quietly(text: &str) -> ExitCode {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    ExitCode::from(EXIT_PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return input_error(e);
    }
    let result = std::panic::catch_unwind(|| match &cli.command {
        Command::Check {
            spec,
            suite,
            out,
            seed,
            tol,
        } => check(spec, suite, out.as_ref(), *seed, *tol),
        Command::Verify { report } => verify(report),
        Command::Fixtures => list_fixtures(),
        Command::Schema { kind } => {
            let text = match kind {
                SchemaKind::Spec => SPEC_SCHEMA_JSON,
                SchemaKind::Report => REPORT_SCHEMA_JSON,
            };
            print_quietly(text)
        }
    });
    result.unwrap_or_else(|_| input_error("internal error while processing the input"))
}
