//! Verification harness: named invariant checks with tolerances taken from a
//! suite file, run in dependency order and collected into one report.

mod checks;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelQuadrature;
use crate::model::{Grid, ModelParams};
use crate::solver::SolverConfig;

/// The suite shipped with the crate. It covers every acceptance property of
/// the reference configuration.
pub const DEFAULT_SUITE: &str = include_str!("default_suite.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Kernel,
    Semigroup,
    Lorentz,
    Solver,
    Oracle,
}

/// A check parameter as written in the suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Flag(bool),
    Number(f64),
    Numbers(Vec<f64>),
    Text(String),
    Texts(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    pub tag: Tag,
    pub tolerance: f64,
    /// Reported but excluded from the overall verdict.
    #[serde(default)]
    pub informational: bool,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
}

impl CheckSpec {
    pub fn new(name: &str, tag: Tag, tolerance: f64) -> Self {
        Self { name: name.into(), tag, tolerance, informational: false, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: Param) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(invalid(format!("check {}: unknown parameter {k:?}", self.name))),
            None => Ok(()),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(Param::Number(v)) => Ok(*v),
            Some(other) => Err(invalid(format!("check {}: {key} must be a number, got {other:?}", self.name))),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.number(key, default as f64)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(invalid(format!("check {}: {key} must be a nonnegative integer", self.name)));
        }
        Ok(v as usize)
    }

    fn numbers(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(Param::Numbers(v)) => Ok(v.clone()),
            Some(Param::Number(v)) => Ok(vec![*v]),
            Some(other) => Err(invalid(format!("check {}: {key} must be a list of numbers, got {other:?}", self.name))),
        }
    }

    fn texts(&self, key: &str, default: &[&str]) -> Result<Vec<String>> {
        match self.params.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(Param::Texts(v)) => Ok(v.clone()),
            Some(Param::Text(v)) => Ok(vec![v.clone()]),
            Some(Param::Numbers(v)) if v.is_empty() => Ok(Vec::new()),
            Some(other) => Err(invalid(format!("check {}: {key} must be a list of names, got {other:?}", self.name))),
        }
    }
}

/// Model, grid and horizon shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub half_width: f64,
    /// Nodes per axis.
    pub count: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { n: 1, k: 1, rho: 3.0, half_width: 8.0, count: 128, horizon: 8.0, seed: 20240611 }
    }
}

impl ReferenceConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.k, self.rho)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_with(self.count)
    }

    fn grid_with(&self, count: usize) -> Result<Grid> {
        Grid::cube(self.n, self.k, self.half_width, count)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { horizon: self.horizon, ..SolverConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckSpec>,
}

impl Suite {
    pub fn default_suite() -> Self {
        Self::from_toml(DEFAULT_SUITE).expect("embedded suite parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let suite: Suite = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        suite.validate()?;
        Ok(suite)
    }

    /// `"default"` names the embedded suite; anything else is a path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if name_or_path == "default" {
            return Ok(Self::default_suite());
        }
        Self::from_toml(&std::fs::read_to_string(Path::new(name_or_path))?)
    }

    pub fn validate(&self) -> Result<()> {
        self.reference.params()?;
        self.reference.grid()?;
        if !(self.reference.horizon > 0.0) {
            return Err(invalid("reference horizon must be positive"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.checks {
            if !(c.tolerance > 0.0) {
                return Err(invalid(format!("check {}: tolerance must be positive", c.name)));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(invalid(format!("duplicate check name {:?}", c.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Errored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub tag: Tag,
    pub tolerance: f64,
    pub informational: bool,
    pub status: Status,
    /// The headline quantity compared with `tolerance`.
    pub measured: Option<f64>,
    pub details: BTreeMap<String, Value>,
    /// Supporting series as CSV text with a header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall time; left out of canonical reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
    pub informational: usize,
    /// No non-informational check failed or errored.
    pub ok: bool,
}

/// Everything a deterministic check depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub version: String,
    pub reference: ReferenceConfig,
    pub quadrature: KernelQuadrature,
    pub solver: SolverConfig,
    pub suite: Vec<CheckSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub fingerprint: Fingerprint,
    pub summary: Summary,
    pub checks: Vec<CheckOutcome>,
}

impl InvariantReport {
    /// The report without wall times, so equal fingerprints give equal bytes.
    pub fn canonical(&self) -> Self {
        let mut r = self.clone();
        r.checks.iter_mut().for_each(|c| c.runtime_seconds = None);
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What a check hands back to the runner.
struct Measured {
    value: f64,
    pass: bool,
    details: BTreeMap<String, Value>,
    csv: Option<String>,
}

impl Measured {
    fn new(value: f64, pass: bool) -> Self {
        Self { value, pass, details: BTreeMap::new(), csv: None }
    }

    fn detail(mut self, key: &str, v: impl Serialize) -> Self {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    fn csv(mut self, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.csv = Some(s);
        self
    }
}

/// Runs every check, kernel checks first and oracle checks last, keeping
/// the suite order within a tag. Failures and errors are recorded, never
/// propagated.
pub fn run_suite(suite: &Suite) -> Result<InvariantReport> {
    suite.validate()?;
    let mut ctx = checks::Context::new(suite)?;
    let mut order: Vec<&CheckSpec> = suite.checks.iter().collect();
    order.sort_by_key(|c| c.tag);
    let mut outcomes = Vec::with_capacity(order.len());
    for spec in order {
        outcomes.push(run_one(&mut ctx, spec));
    }
    let summary = summarize(&outcomes);
    Ok(InvariantReport { fingerprint: fingerprint(suite), summary, checks: outcomes })
}

fn run_one(ctx: &mut checks::Context, spec: &CheckSpec) -> CheckOutcome {
    let start = Instant::now();
    let result = checks::run(ctx, spec);
    let runtime = Some(start.elapsed().as_secs_f64());
    let base = CheckOutcome {
        name: spec.name.clone(),
        tag: spec.tag,
        tolerance: spec.tolerance,
        informational: spec.informational,
        status: Status::Errored,
        measured: None,
        details: BTreeMap::new(),
        csv: None,
        error: None,
        runtime_seconds: runtime,
    };
    match result {
        Ok(m) if m.value.is_finite() => CheckOutcome {
            status: if m.pass { Status::Passed } else { Status::Failed },
            measured: Some(m.value),
            details: m.details,
            csv: m.csv,
            ..base
        },
        Ok(m) => CheckOutcome {
            details: m.details,
            csv: m.csv,
            error: Some(format!("non-finite measurement {}", m.value)),
            ..base
        },
        Err(e) => CheckOutcome { error: Some(e.to_string()), ..base },
    }
}

fn summarize(outcomes: &[CheckOutcome]) -> Summary {
    let mut s = Summary { total: outcomes.len(), ok: true, ..Summary::default() };
    for o in outcomes {
        match o.status {
            Status::Passed => s.passed += 1,
            Status::Failed => s.failed += 1,
            Status::Errored => s.errored += 1,
        }
        if o.informational {
            s.informational += 1;
        } else if o.status != Status::Passed {
            s.ok = false;
        }
    }
    s
}

fn fingerprint(suite: &Suite) -> Fingerprint {
    Fingerprint {
        version: env!("CARGO_PKG_VERSION").into(),
        reference: suite.reference,
        quadrature: KernelQuadrature::default(),
        solver: suite.reference.solver_config(),
        suite: suite.checks.clone(),
    }
}

#[cfg(test)]
mod tests;
