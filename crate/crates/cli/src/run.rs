//! Dispatch from a validated [`RunConfig`] to the core library.

use std::f64::consts::TAU;
use std::time::Instant;

use phasecomp_core::gates::cnot;
use phasecomp_core::linalg::random_unitary;
use phasecomp_core::nogo::{
    compressed_support_candidate, constraint_residual, orthogonality_witness,
    support_structure_check, verify_coefficient_lemma, CompressionScenario, PhaseVector,
    RESIDUAL_THRESHOLD,
};
use phasecomp_core::protocols::{
    compress_two_equatorial, expected_compressed_state, extract_partially_known,
    phase_loss_scan, reconstruct_two_qubit, teleport, BellOutcome, PartiallyKnownPair,
    TeleportMode, TeleportRecord,
};
use phasecomp_core::rng::{stream, Stream};
use phasecomp_core::search::{optimize, optimize_timed, phase_samples, SearchConfig};
use phasecomp_core::{fidelity, measure_site, MeasureMode, UnitaryMatrix};
use thiserror::Error;

use crate::config::{CommandConfig, OutcomeChoice, RunConfig, UnitaryChoice};
use crate::report::{
    complex_vec, CompressDemoResult, ConfigEcho, NogoResult, Payload, PhaseLossResult,
    Provenance, Report, ResidualResult, TeleportBranch, TeleportDemoResult, SCHEMA_VERSION,
};

/// Fidelity within this distance of 1 counts as "phase lost".
const LOST_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
#[error("{command} failed: {source}")]
pub struct RunError {
    pub command: &'static str,
    #[source]
    pub source: phasecomp_core::Error,
}

pub fn run(config: &RunConfig) -> Result<Report, RunError> {
    let command = config.command.name();
    let started = Instant::now();
    let results = dispatch(config).map_err(|source| RunError { command, source })?;
    let wall_time_ms = config
        .record_timing
        .then(|| started.elapsed().as_secs_f64() * 1e3);
    Ok(Report {
        schema_version: SCHEMA_VERSION.into(),
        config: ConfigEcho::from_config(config),
        results,
        provenance: Provenance {
            artifact: env!("CARGO_PKG_NAME").into(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            wall_time_ms,
        },
    })
}

fn dispatch(config: &RunConfig) -> phasecomp_core::Result<Payload> {
    let seed = config.seed;
    Ok(match config.command {
        CommandConfig::CompressDemo { phi1, phi2, outcome } => {
            let mode = match outcome {
                OutcomeChoice::Zero => MeasureMode::Forced(0),
                OutcomeChoice::One => MeasureMode::Forced(1),
                OutcomeChoice::Sample => MeasureMode::Sampled { seed },
            };
            let (record, retrieved) = compress_two_equatorial(phi1, phi2, mode)?;
            let expected = expected_compressed_state(phi1, phi2, record.outcome)?;
            Payload::CompressDemo(CompressDemoResult {
                phi1,
                phi2,
                requested_outcome: outcome,
                outcome: record.outcome,
                probability: record.probability,
                fidelity_to_expected: fidelity(&retrieved, &expected)?,
                retrieved: complex_vec(retrieved.amplitudes()),
                expected: complex_vec(expected.amplitudes()),
            })
        }
        CommandConfig::PhaseLoss { points, phi2_a, phi2_b, outcome } => {
            let grid: Vec<f64> = (0..points)
                .map(|k| TAU * k as f64 / (points - 1) as f64)
                .collect();
            let scan = phase_loss_scan(&grid, (phi2_a, phi2_b), outcome)?;
            let lost_at = scan
                .points
                .iter()
                .filter(|p| (1.0 - p.fidelity).abs() <= LOST_TOLERANCE)
                .map(|p| p.phi1)
                .collect();
            Payload::PhaseLoss(PhaseLossResult {
                outcome: scan.outcome,
                phi2_pair: scan.phi2_pair,
                points: scan.points,
                lost_at,
            })
        }
        CommandConfig::TeleportDemo { theta, phi } => teleport_demo(theta, phi, seed)?,
        CommandConfig::Lemma1 { d, n, tol } => {
            Payload::Lemma1(verify_coefficient_lemma(d, n, tol, seed)?)
        }
        CommandConfig::Nogo { d, n, m, p } => {
            let scenario = CompressionScenario::new(d, n, m, p)?;
            let size = scenario.total_dim();
            let compressed_support = if m < n + p {
                Some(support_structure_check(
                    &compressed_support_candidate(&scenario)?,
                    &scenario,
                )?)
            } else {
                None
            };
            Payload::Nogo(NogoResult {
                scenario,
                witness: orthogonality_witness(&scenario)?,
                identity_support: support_structure_check(
                    UnitaryMatrix::identity(size).matrix(),
                    &scenario,
                )?,
                compressed_support,
            })
        }
        CommandConfig::Residual { d, n, m, p, unitary, samples } => {
            let scenario = CompressionScenario::new(d, n, m, p)?;
            let size = scenario.total_dim();
            let candidate = match unitary {
                UnitaryChoice::Identity => UnitaryMatrix::identity(size),
                UnitaryChoice::Cnot => cnot(),
                UnitaryChoice::Random => {
                    UnitaryMatrix::new(random_unitary(&mut stream(seed, Stream::RandomUnitary), size))?
                }
            };
            let (sample_kind, phases) = if samples == 0 {
                ("grid", PhaseVector::grid(d, n)?)
            } else {
                ("random", phase_samples(&scenario, samples, seed)?)
            };
            let residual = constraint_residual(&candidate, &scenario, &phases)?;
            Payload::Residual(ResidualResult {
                scenario,
                unitary,
                sample_kind: sample_kind.into(),
                sample_count: phases.len(),
                residual,
                residual_threshold: RESIDUAL_THRESHOLD,
                precondition_met: residual <= RESIDUAL_THRESHOLD,
            })
        }
        CommandConfig::Optimize { d, n, m, p, budget, restarts, samples } => {
            let scenario = CompressionScenario::new(d, n, m, p)?;
            let search = SearchConfig::new(budget, restarts, samples, seed);
            let report = if config.record_timing {
                optimize_timed(&scenario, &search)?
            } else {
                optimize(&scenario, &search)?
            };
            Payload::Optimize(report)
        }
    })
}

fn teleport_demo(theta: f64, phi: f64, seed: u64) -> phasecomp_core::Result<Payload> {
    let pair = PartiallyKnownPair::from_angles(theta, phi)?;
    let original = pair.to_state();
    let extracted = extract_partially_known(&pair);
    // The second qubit is |0⟩ with certainty after extraction; dropping it
    // leaves the qubit that is sent.
    let sent = measure_site(&extracted, 1, MeasureMode::Forced(0))?.post_state;

    let branch = |record: TeleportRecord| -> phasecomp_core::Result<TeleportBranch> {
        let rebuilt = reconstruct_two_qubit(&record.received)?;
        Ok(TeleportBranch {
            outcome: record.outcome,
            probability: record.probability,
            fidelity_to_sent: fidelity(&record.received, &sent)?,
            fidelity_to_original: fidelity(&rebuilt, &original)?,
            received: complex_vec(record.received.amplitudes()),
        })
    };
    let branches = BellOutcome::ALL
        .iter()
        .map(|&o| branch(teleport(&sent, TeleportMode::Forced(o))?))
        .collect::<phasecomp_core::Result<Vec<_>>>()?;
    let sampled = branch(teleport(&sent, TeleportMode::Sampled { seed })?)?;
    let worst_fidelity = branches
        .iter()
        .chain(std::iter::once(&sampled))
        .map(|b| b.fidelity_to_original)
        .fold(f64::INFINITY, f64::min);
    Ok(Payload::TeleportDemo(TeleportDemoResult {
        alpha: pair.alpha().into(),
        beta: pair.beta().into(),
        extracted: complex_vec(extracted.amplitudes()),
        sent: complex_vec(sent.amplitudes()),
        branches,
        sampled,
        worst_fidelity,
    }))
}
