//! Machine-readable run reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

/// One verified inequality or oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Gated checks decide the exit status; the others are diagnostics.
    pub gated: bool,
    pub value: f64,
    /// `"<="`, `">="`, `"<"`, `"in"`, `"=="` or `"finite"`.
    pub relation: String,
    pub threshold: Value,
    /// Input attaining the reported value.
    pub witness: Value,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value <= threshold, value, "<=", Value::from(threshold))
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value >= threshold, value, ">=", Value::from(threshold))
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value < threshold, value, "<", Value::from(threshold))
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value >= lo && value <= hi, value, "in", Value::from(vec![lo, hi]))
    }

    pub fn finite(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value.is_finite(), value, "finite", Value::Null)
    }

    /// A yes/no outcome, recorded as value 1 or 0.
    pub fn holds(name: impl Into<String>, pass: bool) -> Self {
        Self::new(name, pass, if pass { 1.0 } else { 0.0 }, "==", Value::from(1.0))
    }

    fn new(name: impl Into<String>, pass: bool, value: f64, relation: &str, threshold: Value) -> Self {
        Self {
            name: name.into(),
            pass: pass && !value.is_nan(),
            gated: true,
            value,
            relation: relation.to_string(),
            threshold,
            witness: Value::Null,
        }
    }

    pub fn witness(mut self, w: impl Serialize) -> Self {
        self.witness = serde_json::to_value(w).unwrap_or(Value::Null);
        self
    }

    /// Additionally requires `ok` for the check to pass.
    pub fn require(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.gated = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub data: Value,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checks: Vec::new(),
            data: Value::Object(Default::default()),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(m) = &mut self.data {
            m.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().filter(|c| c.gated).all(|c| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub gated_checks: usize,
    pub failed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub suites: Vec<SuiteReport>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(command: &str, config: ExperimentConfig, config_hash: String, suites: Vec<SuiteReport>) -> Self {
        let gated: Vec<(&SuiteReport, &Check)> = suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| c.gated).map(move |c| (s, c)))
            .collect();
        let failed = gated
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(s, c)| format!("{}/{}", s.name, c.name))
            .collect::<Vec<_>>();
        let summary = Summary {
            pass: failed.is_empty(),
            gated_checks: gated.len(),
            failed,
        };
        Self {
            command: command.to_string(),
            config_hash,
            seed: config.rng_seed,
            config,
            suites,
            summary,
        }
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
