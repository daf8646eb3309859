//! Versioned JSON reports wrapping certificates and enclosures.
//!
//! Interval endpoints serialize as shortest round-trip decimals together with
//! exact hexadecimal floats; only `wall_time_s` and `environment` vary between
//! identical runs.

use serde::Serialize;
use serde_json::{json, Value};

use crate::certificate::Verdict;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "conecert";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ellipse bounds on `|f|, |g|` and their first two derivatives as printed in
/// the source table, for side-by-side display only.
pub const TABLE1_PUBLISHED: [f64; 3] = [12402.0, 146200.0, 553380.0];

/// The main theorem is stated for `c <= 4.3`, which exceeds `c₀ ≈ 0.5884`;
/// the coefficient table reaches `0.43`, which is what gets certified.
pub const C_RANGE_NOTE: &str =
    "the main theorem states c <= 4.3 but the coefficient table stops at c = 0.43 < c0; 4.3 is treated as a typo for 0.43";

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub os: &'static str,
    pub arch: &'static str,
    pub available_parallelism: usize,
    pub threads: usize,
    pub debug_assertions: bool,
}

impl Environment {
    pub fn capture() -> Self {
        Environment {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            available_parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            threads: rayon::current_num_threads(),
            debug_assertions: cfg!(debug_assertions),
        }
    }
}

/// One verified (or refuted) statement inside a report.
#[derive(Clone, Debug, Serialize)]
pub struct Claim {
    pub name: String,
    pub verdict: Verdict,
    pub detail: Value,
}

impl Claim {
    pub fn new(name: impl Into<String>, verdict: Verdict, detail: impl Serialize) -> Self {
        let detail = serde_json::to_value(detail).unwrap_or_else(|e| json!({ "serialization_error": e.to_string() }));
        Claim { name: name.into(), verdict, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: Tool,
    pub command: String,
    pub config: Value,
    pub claims: Vec<Claim>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    pub environment: Environment,
}

impl Report {
    pub fn new(command: impl Into<String>, config: impl Serialize) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: Tool { name: TOOL_NAME, version: TOOL_VERSION },
            command: command.into(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            claims: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
            wall_time_s: 0.0,
            environment: Environment::capture(),
        }
    }

    pub fn push(&mut self, claim: Claim) {
        self.verdict = self.verdict.and(claim.verdict);
        self.claims.push(claim);
    }

    /// Report with run-dependent fields cleared, for determinism checks.
    pub fn canonical_json(&self) -> serde_json::Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_time_s");
            o.remove("environment");
        }
        serde_json::to_string_pretty(&v)
    }
}

/// JSON schema of [`Report`].
pub fn report_schema() -> Value {
    let interval = json!({
        "type": "object",
        "required": ["lo", "hi", "lo_hex", "hi_hex"],
        "properties": {
            "lo": { "type": ["number", "null"], "description": "shortest round-trip decimal of the lower endpoint" },
            "hi": { "type": ["number", "null"] },
            "lo_hex": { "type": "string", "description": "exact hexadecimal float, authoritative" },
            "hi_hex": { "type": "string" }
        }
    });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "conecert report",
        "type": "object",
        "required": ["schema_version", "tool", "command", "config", "claims", "verdict", "wall_time_s", "environment"],
        "properties": {
            "schema_version": { "const": SCHEMA_VERSION },
            "tool": {
                "type": "object",
                "properties": { "name": { "type": "string" }, "version": { "type": "string" } }
            },
            "command": { "enum": ["critical", "subsolution", "supersolution", "qs", "table1"] },
            "config": { "type": "object", "description": "validated run configuration, echoed verbatim" },
            "claims": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "verdict", "detail"],
                    "properties": {
                        "name": { "type": "string" },
                        "verdict": { "$ref": "#/$defs/verdict" },
                        "detail": { "description": "grid certificate, enclosure or comparison table" }
                    }
                }
            },
            "verdict": { "$ref": "#/$defs/verdict" },
            "notes": { "type": "array", "items": { "type": "string" } },
            "wall_time_s": { "type": "number" },
            "environment": {
                "type": "object",
                "properties": {
                    "os": { "type": "string" },
                    "arch": { "type": "string" },
                    "available_parallelism": { "type": "integer" },
                    "threads": { "type": "integer" },
                    "debug_assertions": { "type": "boolean" }
                }
            }
        },
        "$defs": {
            "verdict": { "enum": ["pass", "fail", "inconclusive"] },
            "interval": interval
        }
    })
}
