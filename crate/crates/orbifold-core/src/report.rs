//! Report-style validation results shared by all modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Severity {
    Fail,
    /// The check could not be decided inside the fragment.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Issue {
    pub severity: Severity,
    pub check: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fail(&mut self, check: &str, detail: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Fail, check: check.into(), detail: detail.into() });
    }

    pub fn unknown(&mut self, check: &str, detail: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Unknown, check: check.into(), detail: detail.into() });
    }

    /// Appends another report, prefixing its check names.
    pub fn absorb(&mut self, prefix: &str, other: ValidationReport) {
        for mut i in other.issues {
            i.check = alloc::format!("{}{}", prefix, i.check);
            self.issues.push(i);
        }
    }

    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_failures(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Fail)
    }

    pub fn outcome(&self) -> Outcome {
        if self.has_failures() {
            Outcome::Fail
        } else if self.issues.is_empty() {
            Outcome::Pass
        } else {
            Outcome::Unknown
        }
    }

    pub fn failed(&self, check: &str) -> bool {
        self.issues.iter().any(|i| i.check == check)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        for (n, i) in self.issues.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            let tag = match i.severity {
                Severity::Fail => "",
                Severity::Unknown => "unknown ",
            };
            write!(f, "{}{}: {}", tag, i.check, i.detail)?;
        }
        Ok(())
    }
}
