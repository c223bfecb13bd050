//! Report documents: one record per checked relation, grouped in sections.
//!
//! The JSON field names are a stable contract for the CLI; bump
//! [`SCHEMA_VERSION`] on any incompatible change.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "cga-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Exact,
    ExactAfterCalibration,
    /// Equal up to an additive scalar, recorded in the residual.
    ConstantShift,
    /// Equal to the negative of the expected element.
    SignFlip,
    /// Equal up to a nonzero scalar factor, recorded in the factor.
    Rescaled,
    Mismatch,
    Failed,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Mismatch | Status::Failed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Exact => "exact",
            Status::ExactAfterCalibration => "exact-after-calibration",
            Status::ConstantShift => "constant-shift",
            Status::SignFlip => "sign-flip",
            Status::Rescaled => "rescaled",
            Status::Mismatch => "mismatch",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub family: String,
    pub lhs: String,
    pub expected: String,
    pub status: Status,
    #[serde(rename = "residual-text")]
    pub residual_text: String,
    #[serde(rename = "factor-text")]
    pub factor_text: String,
}

impl Record {
    pub fn new(family: &str, lhs: impl Into<String>, expected: impl Into<String>, status: Status) -> Self {
        Self {
            family: family.to_string(),
            lhs: lhs.into(),
            expected: expected.into(),
            status,
            residual_text: "0".into(),
            factor_text: String::new(),
        }
    }

    pub fn residual(mut self, text: impl Into<String>) -> Self {
        self.residual_text = text.into();
        self
    }

    pub fn factor(mut self, text: impl Into<String>) -> Self {
        self.factor_text = text.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub l: u32,
    pub level: String,
    pub quantum_numbers: BTreeMap<String, u32>,
    pub eigenvalue: String,
    pub verified: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub family: String,
    pub params: BTreeMap<String, String>,
    pub records: Vec<Record>,
    pub calibration: BTreeMap<String, String>,
    pub spectrum: Vec<SpectrumRow>,
    /// Count of distinct states per level, keyed by the level text.
    pub multiplicities: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    /// Failures not tied to a single record (e.g. an unsolvable calibration).
    pub errors: Vec<String>,
}

impl Section {
    pub fn new(name: impl Into<String>, family: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            family: family.into(),
            ..Self::default()
        }
    }

    pub fn with_params(mut self, params: &BTreeMap<String, String>) -> Self {
        self.params = params.clone();
        self
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty()
            && self.records.iter().all(|r| !r.status.is_failure())
            && self.spectrum.iter().all(|r| r.verified)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.status.is_failure())
    }

    pub fn count(&self, status: Status) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub schema: String,
    pub schema_version: u32,
    pub command: String,
    pub passed: bool,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn new(command: &str, sections: Vec<Section>) -> Self {
        let passed = sections.iter().all(Section::passed);
        Self {
            schema: SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            passed,
            sections,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed { "passed" } else { "FAILED" };
        let _ = writeln!(out, "# {} report: {verdict}\n", self.command);
        for s in &self.sections {
            let mark = if s.passed() { "passed" } else { "FAILED" };
            let _ = writeln!(out, "## {} ({mark})\n", s.name);
            let _ = writeln!(out, "family: `{}`", s.family);
            if !s.params.is_empty() {
                let ps: Vec<String> = s.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(out, "params: {}", ps.join(", "));
            }
            out.push('\n');
            for r in &s.records {
                let _ = writeln!(out, "- `{} = {}` : {}", r.lhs, r.expected, r.status.as_str());
                if r.residual_text != "0" && !r.residual_text.is_empty() {
                    let _ = writeln!(out, "  - residual: `{}`", r.residual_text);
                }
                if !r.factor_text.is_empty() {
                    let _ = writeln!(out, "  - factor: `{}`", r.factor_text);
                }
            }
            if !s.calibration.is_empty() {
                let _ = writeln!(out, "\ncalibration constants:\n");
                for (g, d) in &s.calibration {
                    let _ = writeln!(out, "- `{g}`: `{d}`");
                }
            }
            if !s.spectrum.is_empty() {
                let _ = writeln!(out, "\n| l | level | quantum numbers | eigenvalue | verified |");
                let _ = writeln!(out, "|---|---|---|---|---|");
                for row in &s.spectrum {
                    let q: Vec<String> = row.quantum_numbers.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} |",
                        row.l,
                        row.level,
                        q.join(" "),
                        row.eigenvalue,
                        row.verified
                    );
                }
            }
            if !s.multiplicities.is_empty() {
                let _ = writeln!(out, "\nmultiplicities:\n");
                for (level, n) in &s.multiplicities {
                    let _ = writeln!(out, "- level {level}: {n}");
                }
            }
            for n in &s.notes {
                let _ = writeln!(out, "\nnote: {n}");
            }
            for e in &s.errors {
                let _ = writeln!(out, "\nerror: {e}");
            }
            out.push('\n');
        }
        out
    }
}
