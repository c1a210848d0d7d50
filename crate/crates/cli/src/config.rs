//! Run configuration.
//!
//! Parameters come from command-line flags and, optionally, a flat TOML file
//! given with `--config`. Flags override file values. Keys that the chosen
//! command does not use are rejected, as are unknown keys.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Cli(#[from] clap::Error),

    #[error("unknown command `{0}` (expected one of: {commands})", commands = COMMANDS.join(", "))]
    UnknownCommand(String),

    #[error("no command given")]
    MissingCommand,

    #[error("command `{flag}` on the command line conflicts with `{file}` in the config file")]
    CommandConflict { flag: String, file: String },

    #[error("parameter `{name}` = {value} is out of range (legal range: {range})")]
    OutOfRange {
        name: &'static str,
        value: String,
        range: String,
    },

    #[error("parameter `{key}` is not used by command `{command}`")]
    UnusedKey { key: &'static str, command: String },

    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config file {path}: {source}")]
    File {
        path: PathBuf,
        source: toml::de::Error,
    },
}

fn out_of_range(name: &'static str, value: impl ToString, range: impl ToString) -> ConfigError {
    ConfigError::OutOfRange {
        name,
        value: value.to_string(),
        range: range.to_string(),
    }
}

pub const COMMANDS: [&str; 7] = [
    "compress-demo",
    "phase-loss",
    "teleport-demo",
    "lemma1",
    "nogo",
    "residual",
    "optimize",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeChoice {
    Zero,
    One,
    Sample,
}

impl std::str::FromStr for OutcomeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" | "zero" => Ok(Self::Zero),
            "1" | "one" => Ok(Self::One),
            "sample" | "sampled" => Ok(Self::Sample),
            other => Err(format!("expected 0, 1 or sample, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryChoice {
    Identity,
    Cnot,
    Random,
}

/// Fully validated parameters of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandConfig {
    CompressDemo {
        phi1: f64,
        phi2: f64,
        outcome: OutcomeChoice,
    },
    PhaseLoss {
        points: usize,
        phi2_a: f64,
        phi2_b: f64,
        outcome: usize,
    },
    TeleportDemo {
        theta: f64,
        phi: f64,
    },
    Lemma1 {
        d: usize,
        n: usize,
        tol: f64,
    },
    Nogo {
        d: usize,
        n: usize,
        m: usize,
        p: usize,
    },
    Residual {
        d: usize,
        n: usize,
        m: usize,
        p: usize,
        unitary: UnitaryChoice,
        /// 0 selects the full grid of `d^n` phase assignments.
        samples: usize,
    },
    Optimize {
        d: usize,
        n: usize,
        m: usize,
        p: usize,
        budget: usize,
        restarts: usize,
        samples: usize,
    },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CompressDemo { .. } => "compress-demo",
            Self::PhaseLoss { .. } => "phase-loss",
            Self::TeleportDemo { .. } => "teleport-demo",
            Self::Lemma1 { .. } => "lemma1",
            Self::Nogo { .. } => "nogo",
            Self::Residual { .. } => "residual",
            Self::Optimize { .. } => "optimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Adds wall-clock timings to the report, which makes it
    /// non-reproducible byte for byte.
    pub record_timing: bool,
}

/// Every parameter any command accepts; the union of flags and file keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub record_timing: Option<bool>,

    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub outcome: Option<String>,
    pub points: Option<usize>,
    pub phi2_a: Option<f64>,
    pub phi2_b: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub tol: Option<f64>,
    pub unitary: Option<UnitaryChoice>,
    pub samples: Option<usize>,
    pub budget: Option<usize>,
    pub restarts: Option<usize>,
}

impl Params {
    fn overlay(self, top: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            command, seed, output, csv, record_timing, phi1, phi2, outcome, points, phi2_a,
            phi2_b, theta, phi, d, n, m, p, tol, unitary, samples, budget, restarts
        )
    }

    /// Names of the command-specific parameters that are set.
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { out.push(stringify!($f)); } )* };
        }
        check!(phi1, phi2, outcome, points, phi2_a, phi2_b, theta, phi, d, n, m, p, tol, unitary, samples, budget, restarts);
        out
    }
}

#[derive(Debug, Parser)]
#[command(name = "phasecomp", version, about = "Phase-information compression experiments")]
struct Cli {
    /// Flat TOML file with parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path (JSON). Printed to stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also export the run's table as CSV (phase-loss, optimize).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    record_timing: bool,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Rotate-and-CNOT compression of two equatorial qubits.
    CompressDemo {
        #[arg(long)]
        phi1: Option<f64>,
        #[arg(long)]
        phi2: Option<f64>,
        /// 0, 1 or sample.
        #[arg(long)]
        outcome: Option<String>,
    },
    /// Fidelity between qubits retrieved with two different phi2 values.
    PhaseLoss {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        phi2_a: Option<f64>,
        #[arg(long)]
        phi2_b: Option<f64>,
        #[arg(long)]
        outcome: Option<String>,
    },
    /// Extract, teleport and reconstruct cos(θ/2)|00⟩ + sin(θ/2)e^{iφ}|11⟩.
    TeleportDemo {
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Nonsingularity of the grid coefficient matrix.
    Lemma1 {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Infeasibility certificates for compressing n qudits into m.
    Nogo {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
    },
    /// Constraint residual of a candidate unitary.
    Residual {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, value_enum)]
        unitary: Option<UnitaryChoice>,
        /// Random phase samples; 0 uses the full grid.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Search for the best approximate compression channel.
    Optimize {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

impl Sub {
    fn into_params(self) -> Params {
        let mut p = Params::default();
        match self {
            Sub::CompressDemo { phi1, phi2, outcome } => {
                p.command = Some("compress-demo".into());
                (p.phi1, p.phi2, p.outcome) = (phi1, phi2, outcome);
            }
            Sub::PhaseLoss { points, phi2_a, phi2_b, outcome } => {
                p.command = Some("phase-loss".into());
                (p.points, p.phi2_a, p.phi2_b, p.outcome) = (points, phi2_a, phi2_b, outcome);
            }
            Sub::TeleportDemo { theta, phi } => {
                p.command = Some("teleport-demo".into());
                (p.theta, p.phi) = (theta, phi);
            }
            Sub::Lemma1 { d, n, tol } => {
                p.command = Some("lemma1".into());
                (p.d, p.n, p.tol) = (d, n, tol);
            }
            Sub::Nogo { d, n, m, p: anc } => {
                p.command = Some("nogo".into());
                (p.d, p.n, p.m, p.p) = (d, n, m, anc);
            }
            Sub::Residual { d, n, m, p: anc, unitary, samples } => {
                p.command = Some("residual".into());
                (p.d, p.n, p.m, p.p, p.unitary, p.samples) = (d, n, m, anc, unitary, samples);
            }
            Sub::Optimize { d, n, m, p: anc, budget, restarts, samples } => {
                p.command = Some("optimize".into());
                (p.d, p.n, p.m, p.p) = (d, n, m, anc);
                (p.budget, p.restarts, p.samples) = (budget, restarts, samples);
            }
        }
        p
    }
}

/// Parses `argv` (including the program name) into a validated config.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file = match &cli.config {
        Some(path) => read_params(path)?,
        None => Params::default(),
    };
    let mut flags = cli.command.map(Sub::into_params).unwrap_or_default();
    if let (Some(flag), Some(file_cmd)) = (&flags.command, &file.command) {
        if flag != file_cmd {
            return Err(ConfigError::CommandConflict {
                flag: flag.clone(),
                file: file_cmd.clone(),
            });
        }
    }
    flags.seed = cli.seed;
    flags.output = cli.output;
    flags.csv = cli.csv;
    flags.record_timing = cli.record_timing.then_some(true);
    parse_config_from(file.overlay(flags))
}

fn read_params(path: &Path) -> Result<Params, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| ConfigError::File {
        path: path.to_owned(),
        source,
    })
}

fn angle(name: &'static str, value: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    let v = value.unwrap_or(default);
    if !(0.0..TAU).contains(&v) {
        return Err(out_of_range(name, v, "[0, 2π) radians"));
    }
    Ok(v)
}

fn int_in(
    name: &'static str,
    value: Option<usize>,
    default: usize,
    lo: usize,
    hi: usize,
) -> Result<usize, ConfigError> {
    let v = value.unwrap_or(default);
    if !(lo..=hi).contains(&v) {
        return Err(out_of_range(name, v, format!("{lo}..{hi}")));
    }
    Ok(v)
}

fn outcome_bit(value: Option<&str>, default: usize) -> Result<usize, ConfigError> {
    match value {
        None => Ok(default),
        Some("0") => Ok(0),
        Some("1") => Ok(1),
        Some(other) => Err(out_of_range("outcome", other, "0 or 1")),
    }
}

/// Scenario sizes shared by `nogo` and `residual`: `d^(n+p) ≤ 125`.
fn desk_scenario(p: &Params, defaults: (usize, usize, usize, usize)) -> Result<(usize, usize, usize, usize), ConfigError> {
    let d = int_in("d", p.d, defaults.0, 2, 5)?;
    let n = int_in("n", p.n, defaults.1, 1, 3)?;
    let anc = int_in("p", p.p, defaults.3, 0, 2)?;
    let m = int_in("m", p.m, defaults.2, 0, n + anc)?;
    let size = d.pow((n + anc) as u32);
    if size > 125 {
        return Err(out_of_range("d^(n+p)", size, "1..125"));
    }
    Ok((d, n, m, anc))
}

/// Validates merged parameters and fills defaults.
pub fn parse_config_from(params: Params) -> Result<RunConfig, ConfigError> {
    let name = params.command.clone().ok_or(ConfigError::MissingCommand)?;
    let allowed: &[&str] = match name.as_str() {
        "compress-demo" => &["phi1", "phi2", "outcome"],
        "phase-loss" => &["points", "phi2_a", "phi2_b", "outcome"],
        "teleport-demo" => &["theta", "phi"],
        "lemma1" => &["d", "n", "tol"],
        "nogo" => &["d", "n", "m", "p"],
        "residual" => &["d", "n", "m", "p", "unitary", "samples"],
        "optimize" => &["d", "n", "m", "p", "budget", "restarts", "samples"],
        _ => return Err(ConfigError::UnknownCommand(name)),
    };
    if let Some(key) = params.present().into_iter().find(|k| !allowed.contains(k)) {
        return Err(ConfigError::UnusedKey { key, command: name });
    }

    let p = &params;
    let command = match name.as_str() {
        "compress-demo" => CommandConfig::CompressDemo {
            phi1: angle("phi1", p.phi1, PI / 2.0)?,
            phi2: angle("phi2", p.phi2, PI)?,
            outcome: match &p.outcome {
                None => OutcomeChoice::Zero,
                Some(s) => s
                    .parse()
                    .map_err(|_| out_of_range("outcome", s, "0, 1 or sample"))?,
            },
        },
        "phase-loss" => {
            let phi2_a = angle("phi2_a", p.phi2_a, 0.0)?;
            let phi2_b = angle("phi2_b", p.phi2_b, PI)?;
            if phi2_a == phi2_b {
                return Err(out_of_range("phi2_b", phi2_b, "[0, 2π) and different from phi2_a"));
            }
            CommandConfig::PhaseLoss {
                points: int_in("points", p.points, 41, 2, 100_000)?,
                phi2_a,
                phi2_b,
                outcome: outcome_bit(p.outcome.as_deref(), 1)?,
            }
        }
        "teleport-demo" => {
            let theta = p.theta.unwrap_or(PI / 3.0);
            if !(0.0..=PI).contains(&theta) {
                return Err(out_of_range("theta", theta, "[0, π] radians"));
            }
            CommandConfig::TeleportDemo {
                theta,
                phi: angle("phi", p.phi, PI / 5.0)?,
            }
        }
        "lemma1" => {
            let d = int_in("d", p.d, 2, 2, 5)?;
            let n = int_in("n", p.n, 1, 1, 3)?;
            let tol = p.tol.unwrap_or(1e-6);
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(out_of_range("tol", tol, "> 0"));
            }
            CommandConfig::Lemma1 { d, n, tol }
        }
        "nogo" => {
            let (d, n, m, p) = desk_scenario(p, (2, 2, 1, 0))?;
            CommandConfig::Nogo { d, n, m, p }
        }
        "residual" => {
            let (d, n, m, anc) = desk_scenario(p, (2, 2, 1, 0))?;
            let unitary = p.unitary.unwrap_or(UnitaryChoice::Identity);
            if unitary == UnitaryChoice::Cnot && (d != 2 || n + anc != 2) {
                return Err(out_of_range(
                    "unitary",
                    "cnot",
                    "cnot requires d = 2 and n + p = 2",
                ));
            }
            CommandConfig::Residual {
                d,
                n,
                m,
                p: anc,
                unitary,
                samples: int_in("samples", p.samples, 0, 0, 100_000)?,
            }
        }
        "optimize" => {
            let d = int_in("d", p.d, 2, 2, 3)?;
            let n = int_in("n", p.n, 2, 1, 4)?;
            let anc = int_in("p", p.p, 0, 0, 4 - n)?;
            let m = int_in("m", p.m, 1, 0, n)?;
            CommandConfig::Optimize {
                d,
                n,
                m,
                p: anc,
                budget: int_in("budget", p.budget, 20_000, 1, 10_000_000)?,
                restarts: int_in("restarts", p.restarts, 8, 1, 256)?,
                samples: int_in("samples", p.samples, 64, 1, 100_000)?,
            }
        }
        _ => unreachable!("command names checked above"),
    };
    Ok(RunConfig {
        command,
        seed: params.seed.unwrap_or(0),
        output: params.output,
        csv: params.csv,
        record_timing: params.record_timing.unwrap_or(false),
    })
}
