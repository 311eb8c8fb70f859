//! Declarative experiments: TOML configs in, CSV tables and a JSON report out.

mod coupling;
mod crossing;
mod decay;
mod free_energy;
mod perturb;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::couplings::CouplingMode;
use crate::error::{LabError, Result};
use crate::lattice::Enlargement;
use crate::percolation::scan::OpenDefinition;
use crate::rng;

pub use coupling::{marginal_p_values, run_coupling_suite, small_four_family};
pub use crossing::run_crossing_scan;
pub use decay::run_decay;
pub use free_energy::run_free_energy_suite;
pub use perturb::run_perturbation_audit;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest censored fraction an acceptance run may carry.
pub const MAX_CENSORED_FRACTION: f64 = 0.05;

const TAG_INSTANCE: u64 = 0x494e_5354;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Decay,
    PerturbAudit,
    CrossingScan,
    FreeEnergy,
    CouplingSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Decay => "decay",
            Self::PerturbAudit => "perturb-audit",
            Self::CrossingScan => "crossing-scan",
            Self::FreeEnergy => "free-energy",
            Self::CouplingSuite => "coupling-suite",
        }
    }
}

/// How spins are obtained: min-cut ground states, exact enumeration/transfer matrix, or CFTP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    T0,
    Exact,
    Cftp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::T0 => "t0",
            Mode::Exact => "exact",
            Mode::Cftp => "cftp",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t0" => Ok(Mode::T0),
            "exact" => Ok(Mode::Exact),
            "cftp" => Ok(Mode::Cftp),
            _ => Err(LabError::InvalidParameter(format!(
                "unknown mode {s}; expected t0, exact or cftp"
            ))),
        }
    }
}

/// Free parameters; unset entries take per-experiment defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub delta: Option<f64>,
    pub delta_prime: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha_prime: Option<f64>,
    pub alpha: Option<f64>,
    /// `K`; `inf` selects the percolation form of the incompatibility check.
    pub k: Option<f64>,
    pub phases: Option<usize>,
    pub step: Option<u32>,
    /// Extra `β` values for suites that sweep temperature.
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Allow annuli below the nominal minimum size.
    #[serde(default)]
    pub scaled: bool,
    /// Assert strict decrease and a negative log-slope in `decay`.
    #[serde(default)]
    pub assert_slope: bool,
    /// Scale of the nonnegative increase `x_v` in `perturb-audit`.
    pub x_scale: Option<f64>,
    pub max_sweeps: Option<u64>,
    pub repetitions: Option<usize>,
    /// Coupling mode of the breadth-first runs in `coupling-suite`.
    pub coupling: Option<CouplingMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub side: u32,
    pub open: OpenDefinition,
    pub enlargement: Enlargement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub sizes: Vec<u32>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Absent means `T = 0`.
    pub beta: Option<f64>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub params: Params,
    pub scan: Option<ScanSection>,
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_instances() -> usize {
    100
}

fn default_samples() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            sizes: Vec::new(),
            epsilon: default_epsilon(),
            beta: None,
            instances: default_instances(),
            samples: default_samples(),
            seed: 0,
            out: None,
            mode: Mode::T0,
            params: Params::default(),
            scan: None,
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| LabError::Format(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Format(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidParameter(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return bad(format!("beta must be positive, got {b}"));
            }
        }
        if self.params.betas.iter().any(|b| !(*b > 0.0)) {
            return bad("betas must be positive".into());
        }
        if self.instances == 0 || self.samples == 0 {
            return bad("instances and samples must be positive".into());
        }
        if self.sizes.iter().any(|&n| n == 0) {
            return bad("sizes must be positive".into());
        }
        if let Some(k) = self.params.k {
            if !(k > 0.0) {
                return bad(format!("K must be positive, got {k}"));
            }
        }
        match self.kind {
            ExperimentKind::Decay | ExperimentKind::CrossingScan => match (self.mode, self.beta) {
                (Mode::T0, Some(b)) => bad(format!("mode t0 takes no beta (got {b})")),
                (Mode::Exact | Mode::Cftp, None) => {
                    bad(format!("mode {} needs beta", self.mode.name()))
                }
                (Mode::Exact, _) if self.kind == ExperimentKind::CrossingScan => {
                    bad("crossing-scan runs in mode t0 or cftp".into())
                }
                _ => Ok(()),
            },
            ExperimentKind::PerturbAudit if self.mode != Mode::T0 || self.beta.is_some() => {
                bad("perturb-audit runs at T = 0".into())
            }
            _ => Ok(()),
        }
    }

    /// Seed of instance `i`, shared across sizes so nested boxes see the same field.
    pub fn instance_seed(&self, i: usize) -> u64 {
        rng::derive_seed(self.seed, TAG_INSTANCE, i as u64)
    }

    pub fn sizes_or(&self, default: &[u32]) -> Vec<u32> {
        if self.sizes.is_empty() {
            default.to_vec()
        } else {
            self.sizes.clone()
        }
    }
}

/// Per-instance rows; every row carries the seed that regenerates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub seed: u64,
    pub values: Vec<f64>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, seed: u64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(Row { seed, values });
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["seed".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.seed.to_string()];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        String::from_utf8(
            w.into_inner()
                .map_err(|e| LabError::Format(e.to_string()))?,
        )
        .map_err(|e| LabError::Format(e.to_string()))
    }
}

/// Aggregates over instances; no seed column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SummaryTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn get(&self, row: usize, name: &str) -> Option<f64> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.get(row).map(|r| r[k])
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        String::from_utf8(
            w.into_inner()
                .map_err(|e| LabError::Format(e.to_string()))?,
        )
        .map_err(|e| LabError::Format(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Format(e.to_string())
}

/// An instance dropped for a capacity or budget shortfall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensoredRow {
    pub seed: u64,
    pub n: u32,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Contributes to the exit status.
    pub asserted: bool,
    /// A failure here is a capacity or budget shortfall rather than a wrong result.
    pub resource: bool,
    pub detail: String,
}

impl Check {
    pub fn assert(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            asserted: true,
            resource: false,
            detail,
        }
    }

    pub fn record(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            asserted: false,
            resource: false,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub code_version: String,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Metadata,
    pub config: ExperimentConfig,
    pub tables: Vec<ResultTable>,
    pub summaries: Vec<SummaryTable>,
    pub checks: Vec<Check>,
    pub completed: usize,
    pub censored: Vec<CensoredRow>,
}

/// Process exit status for a finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    AssertionFailed,
    Resource,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Passed => 0,
            Outcome::AssertionFailed => 2,
            Outcome::Resource => 3,
        }
    }
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self, name: &str) -> Option<&SummaryTable> {
        self.summaries.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn censored_fraction(&self) -> f64 {
        let total = self.completed + self.censored.len();
        if total == 0 {
            0.0
        } else {
            self.censored.len() as f64 / total as f64
        }
    }

    pub fn outcome(&self) -> Outcome {
        let failed: Vec<&Check> = self
            .checks
            .iter()
            .filter(|c| c.asserted && !c.passed)
            .collect();
        if failed.iter().any(|c| !c.resource) {
            Outcome::AssertionFailed
        } else if !failed.is_empty() {
            Outcome::Resource
        } else {
            Outcome::Passed
        }
    }

    /// Everything except wall time, for reproducibility comparisons.
    pub fn fingerprint(&self) -> Result<String> {
        let mut c = self.clone();
        c.meta.wall_seconds = 0.0;
        serde_json::to_string(&c).map_err(|e| LabError::Format(e.to_string()))
    }

    /// `<dir>/<name>.csv` per table, `<dir>/<name>.summary.csv` per summary, `<dir>/report.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            fs::write(&p, t.to_csv()?)?;
            paths.push(p);
        }
        for s in &self.summaries {
            let p = dir.join(format!("{}.summary.csv", s.name));
            fs::write(&p, s.to_csv()?)?;
            paths.push(p);
        }
        #[derive(Serialize)]
        struct Json<'a> {
            meta: &'a Metadata,
            config: &'a ExperimentConfig,
            checks: &'a [Check],
            completed: usize,
            censored: &'a [CensoredRow],
            censored_fraction: f64,
            summaries: &'a [SummaryTable],
        }
        let json = Json {
            meta: &self.meta,
            config: &self.config,
            checks: &self.checks,
            completed: self.completed,
            censored: &self.censored,
            censored_fraction: self.censored_fraction(),
            summaries: &self.summaries,
        };
        let p = dir.join("report.json");
        fs::write(
            &p,
            serde_json::to_string_pretty(&json).map_err(|e| LabError::Format(e.to_string()))?,
        )?;
        paths.push(p);
        Ok(paths)
    }
}

/// What one experiment returns before metadata is attached.
pub(crate) struct Body {
    pub tables: Vec<ResultTable>,
    pub summaries: Vec<SummaryTable>,
    pub checks: Vec<Check>,
    pub completed: usize,
    pub censored: Vec<CensoredRow>,
}

impl Body {
    fn censoring_check(&mut self) {
        let total = self.completed + self.censored.len();
        let frac = if total == 0 {
            0.0
        } else {
            self.censored.len() as f64 / total as f64
        };
        self.checks.push(Check {
            name: "censored_below_limit".into(),
            passed: frac < MAX_CENSORED_FRACTION,
            asserted: true,
            resource: true,
            detail: format!(
                "{} of {total} instances censored ({:.3}%)",
                self.censored.len(),
                100.0 * frac
            ),
        });
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let mut body = match config.kind {
        ExperimentKind::Decay => decay::body(config)?,
        ExperimentKind::PerturbAudit => perturb::body(config)?,
        ExperimentKind::CrossingScan => crossing::body(config)?,
        ExperimentKind::FreeEnergy => free_energy::body(config)?,
        ExperimentKind::CouplingSuite => coupling::body(config)?,
    };
    body.censoring_check();
    Ok(Report {
        meta: Metadata {
            kind: config.kind,
            config_hash: config.hash()?,
            code_version: CODE_VERSION.into(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        config: config.clone(),
        tables: body.tables,
        summaries: body.summaries,
        checks: body.checks,
        completed: body.completed,
        censored: body.censored,
    })
}

pub(crate) fn run_as(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Report> {
    if config.kind != kind {
        return Err(LabError::InvalidParameter(format!(
            "config is for {}, not {}",
            config.kind.name(),
            kind.name()
        )));
    }
    run(config)
}

/// Result of one task: rows, or a censoring error.
pub(crate) enum Task<T> {
    Done(T),
    Censored(String),
}

/// Runs `f` over `0..count` on the pool and returns results in index order; resource
/// errors become censored entries, other errors abort.
pub(crate) fn par_tasks<T: Send>(
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<Task<T>>> {
    (0..count)
        .into_par_iter()
        .map(|i| match f(i) {
            Ok(v) => Ok(Task::Done(v)),
            Err(e) if e.is_resource() => Ok(Task::Censored(e.to_string())),
            Err(e) => Err(e),
        })
        .collect()
}

pub(crate) fn bool_f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
