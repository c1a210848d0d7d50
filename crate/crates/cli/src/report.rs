//! Versioned, deterministic experiment reports.
//!
//! Reports are written as pretty-printed JSON with a trailing newline. Field
//! order is fixed by the type definitions and floats use shortest round-trip
//! formatting, so identical config, seed and artifact version give
//! byte-identical files. See `docs/report-schema.md` for the layout.

use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use phasecomp_core::nogo::{InfeasibilityCertificate, LemmaReport};
use phasecomp_core::protocols::{BellOutcome, PhaseLossPoint};
use phasecomp_core::search::OptimizationReport;
use phasecomp_core::nogo::CompressionScenario;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CommandConfig, OutcomeChoice, RunConfig, UnitaryChoice};

pub const SCHEMA_VERSION: &str = "phasecomp-report/1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("malformed report {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("command `{0}` produces no table to export as CSV")]
    NoTable(String),
    #[error("CSV export to {path} failed: {source}")]
    Csv { path: String, source: csv::Error },
}

/// A complex number as `{ "re": …, "im": … }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn complex_vec(values: &[Complex64]) -> Vec<Complex> {
    values.iter().copied().map(Complex::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config: ConfigEcho,
    pub results: Payload,
    pub provenance: Provenance,
}

/// Everything needed to re-run the command. Output paths are left out so
/// that the report does not depend on where it is written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub record_timing: bool,
    pub command: CommandConfig,
}

impl ConfigEcho {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            seed: config.seed,
            record_timing: config.record_timing,
            command: config.command.clone(),
        }
    }

    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            command: self.command.clone(),
            seed: self.seed,
            output: None,
            csv: None,
            record_timing: self.record_timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact: String,
    pub artifact_version: String,
    pub seed: u64,
    /// Present only when timing was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Payload {
    CompressDemo(CompressDemoResult),
    PhaseLoss(PhaseLossResult),
    TeleportDemo(TeleportDemoResult),
    Lemma1(LemmaReport),
    Nogo(NogoResult),
    Residual(ResidualResult),
    Optimize(OptimizationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressDemoResult {
    pub phi1: f64,
    pub phi2: f64,
    pub requested_outcome: OutcomeChoice,
    pub outcome: usize,
    pub probability: f64,
    pub retrieved: Vec<Complex>,
    pub expected: Vec<Complex>,
    pub fidelity_to_expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLossResult {
    pub outcome: usize,
    pub phi2_pair: (f64, f64),
    pub points: Vec<PhaseLossPoint>,
    /// Grid angles where the two candidates are indistinguishable
    /// (fidelity within 1e-12 of 1).
    pub lost_at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportBranch {
    pub outcome: BellOutcome,
    pub probability: f64,
    pub received: Vec<Complex>,
    pub fidelity_to_sent: f64,
    pub fidelity_to_original: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportDemoResult {
    pub alpha: Complex,
    pub beta: Complex,
    /// Two-qubit state after extraction; the first qubit carries α, β.
    pub extracted: Vec<Complex>,
    pub sent: Vec<Complex>,
    pub branches: Vec<TeleportBranch>,
    /// The branch drawn from the run seed.
    pub sampled: TeleportBranch,
    pub worst_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NogoResult {
    pub scenario: CompressionScenario,
    pub witness: InfeasibilityCertificate,
    /// Support check on the identity, which violates the grid constraints.
    pub identity_support: InfeasibilityCertificate,
    /// Support check on a candidate that satisfies them; absent when no
    /// qudit is discarded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compressed_support: Option<InfeasibilityCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualResult {
    pub scenario: CompressionScenario,
    pub unitary: UnitaryChoice,
    /// `grid` or `random`.
    pub sample_kind: String,
    pub sample_count: usize,
    pub residual: f64,
    pub residual_threshold: f64,
    pub precondition_met: bool,
}

impl Payload {
    pub fn command(&self) -> &'static str {
        match self {
            Payload::CompressDemo(_) => "compress-demo",
            Payload::PhaseLoss(_) => "phase-loss",
            Payload::TeleportDemo(_) => "teleport-demo",
            Payload::Lemma1(_) => "lemma1",
            Payload::Nogo(_) => "nogo",
            Payload::Residual(_) => "residual",
            Payload::Optimize(_) => "optimize",
        }
    }
}

/// The exact text [`write_report`] writes.
pub fn render_report(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report types serialize");
    text.push('\n');
    text
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), ReportError> {
    fs::write(path, render_report(report)).map_err(|source| ReportError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<Report, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Read {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ReportError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Exports the report's table: `(phi1, fidelity)` for phase-loss,
/// `(iteration, best)` for the optimizer trace.
pub fn write_csv(report: &Report, path: &Path) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    };
    if !matches!(report.results, Payload::PhaseLoss(_) | Payload::Optimize(_)) {
        return Err(ReportError::NoTable(report.results.command().into()));
    }
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    match &report.results {
        Payload::PhaseLoss(r) => {
            for p in &r.points {
                writer.serialize(p).map_err(csv_err)?;
            }
        }
        Payload::Optimize(r) => {
            for p in &r.trace {
                writer.serialize(p).map_err(csv_err)?;
            }
        }
        _ => unreachable!("checked above"),
    }
    writer.flush().map_err(|source| ReportError::Write {
        path: path.display().to_string(),
        source,
    })
}
