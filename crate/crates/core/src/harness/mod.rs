//! Experiment orchestration: configuration, per-claim verdicts, CSV tables and the JSON
//! run report.
//!
//! Every experiment is a list of cells. A cell that errors is recorded with its
//! parameters and turns its verdicts into `error`; the other cells run regardless.

mod appendix;
mod config;
mod energy;
mod nuclear;
mod scaling;
mod sectors;
mod table;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{default_groups, AppendixSpec, ExperimentConfig, GroupSpec, LutzSpec, NormalSpec, SCHEMA_VERSION};
pub use table::{Cell, Table};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ScalingLimit,
    Nuclearity,
    ChargeEnergy,
    Sectors,
    Appendix,
    All,
}

impl Experiment {
    pub const EACH: [Experiment; 5] = [
        Experiment::ScalingLimit,
        Experiment::Nuclearity,
        Experiment::ChargeEnergy,
        Experiment::Sectors,
        Experiment::Appendix,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ScalingLimit => "scaling-limit",
            Experiment::Nuclearity => "nuclearity",
            Experiment::ChargeEnergy => "charge-energy",
            Experiment::Sectors => "sectors",
            Experiment::Appendix => "appendix",
            Experiment::All => "all",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::EACH
            .iter()
            .chain(std::iter::once(&Experiment::All))
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// `identity`: an exact relation checked to a tolerance. `property`: a structural
/// invariant. `proxy`: a claim checked only on a computable stand-in, never a
/// verification of the underlying statement. `diagnostic`: reported, never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Identity,
    Property,
    Proxy,
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub claim: String,
    /// Which statement this claim stands for.
    pub anchor: String,
    pub kind: VerdictKind,
    pub status: Status,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub experiment: String,
    pub cell: String,
    pub params: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<TableEntry>,
    pub cell_errors: Vec<CellError>,
    /// Ids of every verdict of kind `proxy`.
    pub proxy_flags: Vec<String>,
}

impl RunReport {
    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    /// Every asserted claim passed and no cell failed.
    pub fn all_pass(&self) -> bool {
        self.cell_errors.is_empty()
            && self
                .verdicts
                .iter()
                .all(|v| v.kind == VerdictKind::Diagnostic || v.status == Status::Pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<Table>,
    pub timings: Vec<CellTiming>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Static description of one claim.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Claim {
    pub id: &'static str,
    pub claim: &'static str,
    pub anchor: &'static str,
    pub kind: VerdictKind,
}

impl Claim {
    pub fn verdict(&self, pass: bool, measured: f64, threshold: f64, detail: impl Into<String>) -> Verdict {
        let status = match (self.kind, pass) {
            (VerdictKind::Diagnostic, _) => Status::Reported,
            (_, true) => Status::Pass,
            (_, false) => Status::Fail,
        };
        Verdict {
            id: self.id.to_string(),
            claim: self.claim.to_string(),
            anchor: self.anchor.to_string(),
            kind: self.kind,
            status,
            measured: measured.is_finite().then_some(measured),
            threshold: threshold.is_finite().then_some(threshold),
            detail: detail.into(),
        }
    }

    fn error(&self, message: &str) -> Verdict {
        Verdict {
            id: self.id.to_string(),
            claim: self.claim.to_string(),
            anchor: self.anchor.to_string(),
            kind: self.kind,
            status: Status::Error,
            measured: None,
            threshold: None,
            detail: message.to_string(),
        }
    }
}

/// Collects verdicts, tables and cell errors for one experiment.
pub(crate) struct Sink {
    experiment: &'static str,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub errors: Vec<CellError>,
    pub timings: Vec<CellTiming>,
}

/// Wall-clock time of one cell. Kept out of the JSON report so that artifacts stay
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTiming {
    pub experiment: String,
    pub cell: String,
    pub params: String,
    pub elapsed: std::time::Duration,
}

/// What a successful cell hands back.
#[derive(Default)]
pub(crate) struct CellOutput {
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
}

impl CellOutput {
    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdicts.push(v);
        self
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }
}

impl Sink {
    fn new(experiment: &'static str) -> Self {
        Self {
            experiment,
            verdicts: Vec::new(),
            tables: Vec::new(),
            errors: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Runs one cell; `claims` are marked `error` if the cell fails.
    pub fn cell(&mut self, cell: &str, params: impl Into<String>, claims: &[Claim], f: impl FnOnce() -> Result<CellOutput>) {
        let params = params.into();
        let start = std::time::Instant::now();
        let result = f();
        self.timings.push(CellTiming {
            experiment: self.experiment.to_string(),
            cell: cell.to_string(),
            params: params.clone(),
            elapsed: start.elapsed(),
        });
        match result {
            Ok(out) => {
                self.verdicts.extend(out.verdicts);
                self.tables.extend(out.tables);
            }
            Err(e) => {
                let message = e.to_string();
                for c in claims {
                    self.verdicts.push(c.error(&format!("cell {cell} failed: {message}")));
                }
                self.errors.push(CellError {
                    experiment: self.experiment.to_string(),
                    cell: cell.to_string(),
                    params,
                    message,
                });
            }
        }
    }
}

fn run_one(exp: Experiment, config: &ExperimentConfig) -> Sink {
    let mut sink = Sink::new(exp.name());
    match exp {
        Experiment::ScalingLimit => scaling::run(config, &mut sink),
        Experiment::Nuclearity => nuclear::run(config, &mut sink),
        Experiment::ChargeEnergy => energy::run(config, &mut sink),
        Experiment::Sectors => sectors::run(config, &mut sink),
        Experiment::Appendix => appendix::run(config, &mut sink),
        Experiment::All => unreachable!("expanded by the caller"),
    }
    sink
}

/// Runs the experiment (or all of them, in a fixed order) on a validated config.
pub fn run(exp: Experiment, config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let list: Vec<Experiment> = if exp == Experiment::All {
        Experiment::EACH.to_vec()
    } else {
        vec![exp]
    };
    let mut verdicts = Vec::new();
    let mut tables: Vec<Table> = Vec::new();
    let mut cell_errors = Vec::new();
    let mut timings = Vec::new();
    for e in list {
        let s = run_one(e, config);
        timings.extend(s.timings);
        verdicts.extend(s.verdicts);
        tables.extend(s.tables);
        cell_errors.extend(s.errors);
    }
    let proxy_flags = verdicts
        .iter()
        .filter(|v| v.kind == VerdictKind::Proxy)
        .map(|v| v.id.clone())
        .collect();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        experiment: exp.name().to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        config: config.clone(),
        tables: tables
            .iter()
            .map(|t| TableEntry {
                name: t.name.clone(),
                file: t.file_name(),
                rows: t.rows.len(),
            })
            .collect(),
        verdicts,
        cell_errors,
        proxy_flags,
    };
    Ok(RunOutput { report, tables, timings })
}

pub const REPORT_FILE: &str = "report.json";

/// Writes every table as CSV and the report as JSON into `dir`.
pub fn emit(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let hash = &output.report.config_hash;
    let mut written = Vec::new();
    for t in &output.tables {
        written.push(t.write_csv(dir, hash)?);
    }
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(&output.report).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}

/// Deterministic per-cell seed derived from the run seed and a cell tag.
pub(crate) fn cell_seed(seed: u64, tag: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
