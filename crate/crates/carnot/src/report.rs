//! Deterministic machine-readable reports for the CLI commands.
//!
//! A report is a command echo plus an ordered list of named checks and
//! named values.  Serialization is canonical: struct field order is fixed,
//! collections are vectors in insertion order, rationals are strings, and
//! nothing time- or locale-dependent is included, so two runs with the same
//! manifest, seed, and version produce byte-identical output.  Wall-clock
//! timing is measured but printed on stderr only.

use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ReportCheck {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ReportValue {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    pub manifest: String,
    pub seed: u64,
    pub checks: Vec<ReportCheck>,
    pub values: Vec<ReportValue>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: impl Into<String>, manifest: impl Into<String>, seed: u64) -> Report {
        Report {
            command: command.into(),
            manifest: manifest.into(),
            seed,
            checks: Vec::new(),
            values: Vec::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, witness: Option<String>) {
        if !passed {
            self.passed = false;
        }
        self.checks.push(ReportCheck {
            name: name.into(),
            passed,
            witness,
        });
    }

    pub fn value(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.push(ReportValue {
            key: key.into(),
            value: value.into(),
        });
    }

    /// Canonical JSON rendering (single line, fixed key order).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Canonical human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "command: {}\nmanifest: {}\nseed: {}\n",
            self.command, self.manifest, self.seed
        ));
        for v in &self.values {
            out.push_str(&format!("{} = {}\n", v.key, v.value));
        }
        for c in &self.checks {
            match &c.witness {
                None if c.passed => out.push_str(&format!("[pass] {}\n", c.name)),
                None => out.push_str(&format!("[FAIL] {}\n", c.name)),
                Some(w) if c.passed => out.push_str(&format!("[pass] {} ({w})\n", c.name)),
                Some(w) => out.push_str(&format!("[FAIL] {} ({w})\n", c.name)),
            }
        }
        out.push_str(&format!(
            "verdict: {}\n",
            if self.passed { "pass" } else { "FAIL" }
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_flips_verdict() {
        let mut r = Report::new("validate", "heisenberg3", 42);
        r.check("frame_invertible", true, None);
        assert!(r.passed);
        r.check("bracket_filtration", false, Some("pair (1,2)".to_string()));
        assert!(!r.passed);
        let text = r.to_text();
        assert!(text.contains("[FAIL] bracket_filtration (pair (1,2))"));
        assert!(text.ends_with("verdict: FAIL\n"));
    }

    #[test]
    fn json_is_stable() {
        let mut r = Report::new("bch", "engel4", 1);
        r.value("u", "(1, 0, 0, 0)");
        let a = r.to_json();
        let b = r.to_json();
        assert_eq!(a, b);
        assert!(a.starts_with("{\"command\":\"bch\""));
    }
}
