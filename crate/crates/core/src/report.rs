//! Machine-readable outcomes shared by every verifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA: &str = "liexp-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// A precondition or hypothesis was not met; the check did not run.
    Rejected,
    /// Not applicable to this input.
    Skipped,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Fail | Outcome::Rejected)
    }
}

/// One named check with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Check>,
}

impl Check {
    pub fn new(name: impl Into<String>, outcome: Outcome) -> Self {
        Check {
            name: name.into(),
            outcome,
            residuals: BTreeMap::new(),
            constants: BTreeMap::new(),
            witnesses: Vec::new(),
            grids: BTreeMap::new(),
            notes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn residual(mut self, key: &str, value: f64) -> Self {
        self.residuals.insert(key.to_string(), value);
        self
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn grid(mut self, key: &str, values: &[f64]) -> Self {
        self.grids.insert(key.to_string(), values.to_vec());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn witness(mut self, w: Value) -> Self {
        self.witnesses.push(w);
        self
    }

    pub fn rejected(name: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        Check::new(name, Outcome::Rejected).note(reason.to_string())
    }
}

/// Result of checking one exact formula on a representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub residual: f64,
    pub converged: bool,
    pub terms_used: usize,
    #[serde(default)]
    pub side_data: BTreeMap<String, Value>,
}

impl IdentityResult {
    pub fn new(residual: f64, tol: f64, terms_used: usize) -> Self {
        IdentityResult {
            residual,
            converged: residual <= tol,
            terms_used,
            side_data: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.side_data.insert(key.to_string(), value.into());
        self
    }

    pub fn to_check(&self, name: &str) -> Check {
        let mut c = Check::new(name, Outcome::from_bool(self.converged))
            .residual("residual", self.residual)
            .constant("terms_used", self.terms_used as f64);
        if !self.side_data.is_empty() {
            c = c.witness(Value::Object(
                self.side_data
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
            ));
        }
        c
    }
}

pub(crate) fn complex_json(z: num_complex::Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}
