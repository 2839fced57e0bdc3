//! Machine-readable reports. Every command emits one `Report` as JSON; the
//! shape is pinned by `schema/report.schema.json`.

use serde::Serialize;
use serde_json::Value;

/// Whether a check is mathematically exact at desk scale or consumes a
/// lower-bound desk norm (diagnostic). Diagnostics never affect the exit
/// code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Exact,
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One named comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// log2 of the constant used on the right, when it may overflow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_log2: Option<f64>,
    pub verdict: Verdict,
    pub tag: Tag,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, holds: bool, tag: Tag) -> Self {
        Check {
            name: name.into(),
            lhs,
            rhs,
            constant_log2: None,
            verdict: if holds { Verdict::Pass } else { Verdict::Fail },
            tag,
        }
    }

    pub fn with_log2(mut self, log2: f64) -> Self {
        self.constant_log2 = Some(log2);
        self
    }
}

/// The report every command prints.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    /// Echo of the effective configuration after merging flags and file.
    pub config_echo: Value,
    pub checks: Vec<Check>,
    /// Command-specific payload.
    pub result: Value,
    pub timing_ms: f64,
    pub versions: Versions,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub pjn_cli: &'static str,
    pub pjn_core: &'static str,
}

impl Report {
    pub fn new(command: &str, config_echo: Value) -> Self {
        Report {
            command: command.to_string(),
            config_echo,
            checks: Vec::new(),
            result: Value::Null,
            timing_ms: 0.0,
            versions: Versions {
                pjn_cli: env!("CARGO_PKG_VERSION"),
                pjn_core: env!("CARGO_PKG_VERSION"),
            },
        }
    }

    /// True when every exact check passes; diagnostics are ignored.
    pub fn exact_checks_pass(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.tag == Tag::Exact)
            .all(|c| c.verdict == Verdict::Pass)
    }
}
