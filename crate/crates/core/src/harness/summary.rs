use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Pass/fail record of the properties asserted by one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub properties: Vec<PropertyCheck>,
    /// Reported values that are not asserted.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), properties: Vec::new(), notes: Vec::new() }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.properties.push(PropertyCheck { name: name.to_string(), passed, detail: detail.into() });
        passed
    }

    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One `PASS`/`FAIL` line per property.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for p in &self.properties {
            s.push_str(&format!("{} {}: {}\n", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail));
        }
        for n in &self.notes {
            s.push_str(&format!("NOTE {n}\n"));
        }
        s
    }
}
