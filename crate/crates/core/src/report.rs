//! Validation reports: violations are data, not failures.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    /// Entry the violation is about, e.g. `edge e3` or `covering c1`.
    pub subject: String,
    /// Short name of the broken condition.
    pub condition: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, subject: impl Into<String>, condition: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.into(),
            condition: condition.into(),
            detail: detail.into(),
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.violations.extend(other.violations);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn has_condition(&self, condition: &str) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    /// Turns a nonempty report into an error.
    pub fn into_result(self, what: &str) -> crate::Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Invalid { what: what.to_string(), report: self })
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: [{}] {}", v.subject, v.condition, v.detail)?;
        }
        Ok(())
    }
}
