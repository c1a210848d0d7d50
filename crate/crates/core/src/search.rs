//! Approximate compression: how well can an encode / discard / refill /
//! decode channel retrieve equatorial inputs?
//!
//! The channel for a [`CompressionScenario`] `(d, n, m, p)` is
//!
//! 1. prepare `ψ_in ⊗ |0⟩^p`, where `ψ_in` is a product of `n` equatorial
//!    qudits with `φ_{k_0} = 0`;
//! 2. apply the encoder;
//! 3. keep the first `m` qudits and replace the other `n + p − m` by `|0⟩`;
//! 4. apply the decoder;
//! 5. trace out the last `p` qudits and score `⟨ψ_in|ρ|ψ_in⟩`.
//!
//! Unitaries are charted by [`UnitaryParams`]: `N²` reals filling a
//! Hermitian `H`, decoded as `exp(iH)`.

use std::time::Instant;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::nogo::{CompressionScenario, PhaseVector};
use crate::par;
use crate::rng::{stream, substream, Stream};
use crate::state::UnitaryMatrix;

/// Unitarity tolerance for decoded parameters.
pub const DECODE_TOLERANCE: f64 = 1e-9;

pub const SEARCH_MAX_D: usize = 3;
pub const SEARCH_MAX_SITES: usize = 4;

/// Real coordinates of a Hermitian generator: `N` diagonal entries, then
/// `(re, im)` of each strictly upper entry in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryParams {
    size: usize,
    params: Vec<f64>,
}

impl UnitaryParams {
    pub fn new(size: usize, params: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::out_of_range("size", size, ">= 1"));
        }
        if params.len() != size * size {
            return Err(Error::Dimension(format!(
                "{} parameters for size {size} (need {})",
                params.len(),
                size * size
            )));
        }
        Ok(Self { size, params })
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            params: vec![0.0; size * size],
        }
    }

    pub fn random<R: Rng + ?Sized>(size: usize, scale: f64, rng: &mut R) -> Self {
        let params = (0..size * size)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { size, params }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// The Hermitian matrix `H`; the anti-Hermitian generator is `iH`.
    pub fn hermitian(&self) -> CMatrix {
        let n = self.size;
        let mut h = CMatrix::zeros(n, n);
        for k in 0..n {
            h[(k, k)] = C64::new(self.params[k], 0.0);
        }
        let mut slot = n;
        for k in 0..n {
            for l in (k + 1)..n {
                let z = C64::new(self.params[slot], self.params[slot + 1]);
                h[(k, l)] = z;
                h[(l, k)] = z.conj();
                slot += 2;
            }
        }
        h
    }
}

/// `exp(iH)` via the eigendecomposition of `H`.
pub fn decode_unitary(p: &UnitaryParams) -> Result<UnitaryMatrix> {
    if let Some(i) = p.params.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let eig = p.hermitian().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        p.size,
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
    ));
    UnitaryMatrix::with_tolerance(v * phases * v.adjoint(), DECODE_TOLERANCE)
}

/// Validates a scenario for the search and returns the number of refilled
/// qudits.
pub fn check_search_scenario(s: &CompressionScenario) -> Result<()> {
    if !(2..=SEARCH_MAX_D).contains(&s.d) {
        return Err(Error::out_of_range("d", s.d, format!("2..{SEARCH_MAX_D}")));
    }
    if s.n + s.p > SEARCH_MAX_SITES {
        return Err(Error::out_of_range(
            "n + p",
            s.n + s.p,
            format!("1..{SEARCH_MAX_SITES}"),
        ));
    }
    if s.m > s.n {
        return Err(Error::out_of_range("m", s.m, format!("0..{}", s.n)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub scenario: CompressionScenario,
    pub encoder: UnitaryParams,
    pub decoder: UnitaryParams,
    pub sample_count: usize,
    pub seed: u64,
}

impl PipelineSpec {
    /// Encoder and decoder both the identity.
    pub fn identity(scenario: CompressionScenario, sample_count: usize, seed: u64) -> Self {
        let size = scenario.total_dim();
        Self {
            scenario,
            encoder: UnitaryParams::zeros(size),
            decoder: UnitaryParams::zeros(size),
            sample_count,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        check_search_scenario(&self.scenario)?;
        let size = self.scenario.total_dim();
        if self.encoder.size != size || self.decoder.size != size {
            return Err(Error::Dimension(format!(
                "encoder/decoder sizes {}/{} do not match d^(n+p) = {size}",
                self.encoder.size, self.decoder.size
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::out_of_range("samples", 0, ">= 1"));
        }
        Ok(())
    }

    pub fn samples(&self) -> Result<Vec<PhaseVector>> {
        phase_samples(&self.scenario, self.sample_count, self.seed)
    }
}

/// Seeded uniform phase vectors with `φ_{k_0} = 0`.
pub fn phase_samples(
    scenario: &CompressionScenario,
    count: usize,
    seed: u64,
) -> Result<Vec<PhaseVector>> {
    let mut rng = stream(seed, Stream::PhaseSamples);
    (0..count)
        .map(|_| PhaseVector::random(scenario.d, scenario.n, &mut rng))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityStats {
    pub mean: f64,
    pub worst: f64,
}

/// Per-sample retrieval fidelities of the channel described in the module
/// docs, in sample order.
pub fn sample_fidelities(
    encoder: &UnitaryMatrix,
    decoder: &UnitaryMatrix,
    scenario: &CompressionScenario,
    samples: &[PhaseVector],
) -> Result<Vec<f64>> {
    let size = scenario.total_dim();
    if encoder.size() != size || decoder.size() != size {
        return Err(Error::Dimension(format!(
            "channel unitaries must have size {size}"
        )));
    }
    let tail = scenario
        .refill_sites()
        .ok_or_else(|| Error::Dimension("m exceeds n + p".into()))?;
    let kept = scenario.kept_dim();
    let refill = scenario.d.pow(tail as u32);
    let anc = scenario.ancilla_dim();
    let inputs = scenario.input_dim();
    let u = encoder.matrix();
    let dmat = decoder.matrix();

    Ok(par::map_slice(samples, |sample| {
        let psi = sample.product_state();
        let psi = psi.amplitudes();
        // encoded amplitudes, only input columns (J, 0…0) contribute
        let encoded: Vec<C64> = (0..size)
            .map(|row| {
                (0..inputs)
                    .map(|j| u[(row, j * anc)] * psi[j])
                    .sum()
            })
            .collect();
        let mut total = 0.0;
        for a in 0..anc {
            // v[c] = ⟨ψ, a| D |c, 0…0⟩
            let v: Vec<C64> = (0..kept)
                .map(|c| {
                    (0..inputs)
                        .map(|j| psi[j].conj() * dmat[(j * anc + a, c * refill)])
                        .sum()
                })
                .collect();
            for r in 0..refill {
                let overlap: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(c, vc)| vc * encoded[c * refill + r])
                    .fold(ZERO, |acc, x| acc + x);
                total += overlap.norm_sqr();
            }
        }
        total.clamp(0.0, 1.0)
    }))
}

pub fn fidelity_stats(values: &[f64]) -> FidelityStats {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    FidelityStats { mean, worst }
}

pub fn retrieval_fidelity_stats(pipeline: &PipelineSpec) -> Result<FidelityStats> {
    pipeline.validate()?;
    let encoder = decode_unitary(&pipeline.encoder)?;
    let decoder = decode_unitary(&pipeline.decoder)?;
    let values = sample_fidelities(&encoder, &decoder, &pipeline.scenario, &pipeline.samples()?)?;
    Ok(fidelity_stats(&values))
}

/// Monte-Carlo mean retrieval fidelity over the pipeline's seeded samples.
pub fn retrieval_fidelity(pipeline: &PipelineSpec) -> Result<f64> {
    Ok(retrieval_fidelity_stats(pipeline)?.mean)
}

/// Objective over concatenated `(encoder, decoder)` parameters with fixed
/// samples.
struct Objective<'a> {
    scenario: &'a CompressionScenario,
    samples: &'a [PhaseVector],
    size: usize,
}

impl Objective<'_> {
    fn split(&self, x: &[f64]) -> (UnitaryParams, UnitaryParams) {
        let half = self.size * self.size;
        (
            UnitaryParams {
                size: self.size,
                params: x[..half].to_vec(),
            },
            UnitaryParams {
                size: self.size,
                params: x[half..].to_vec(),
            },
        )
    }

    fn stats(&self, x: &[f64]) -> Result<FidelityStats> {
        let (e, d) = self.split(x);
        let values = sample_fidelities(
            &decode_unitary(&e)?,
            &decode_unitary(&d)?,
            self.scenario,
            self.samples,
        )?;
        Ok(fidelity_stats(&values))
    }

    fn mean(&self, x: &[f64]) -> Result<f64> {
        Ok(self.stats(x)?.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Objective evaluations allowed per restart.
    pub budget: usize,
    pub restarts: usize,
    pub samples: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Standard deviation of random starting parameters.
    pub start_scale: f64,
}

impl SearchConfig {
    pub fn new(budget: usize, restarts: usize, samples: usize, seed: u64) -> Self {
        Self {
            budget,
            restarts,
            samples,
            seed,
            initial_step: 0.5,
            min_step: 1e-9,
            start_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Identity,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub start: StartKind,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Global evaluation count (restarts laid end to end).
    pub iteration: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub scenario: CompressionScenario,
    pub config: SearchConfig,
    pub best_mean_fidelity: f64,
    /// Worst per-sample fidelity at the best parameters.
    pub best_worst_fidelity: f64,
    pub best_restart: usize,
    pub best_encoder: UnitaryParams,
    pub best_decoder: UnitaryParams,
    pub trace: Vec<TracePoint>,
    pub restarts: Vec<RestartSummary>,
    pub sample_count: usize,
    pub seed: u64,
    /// Only filled when timing is requested; kept out of the
    /// deterministic payload otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

struct RestartResult {
    summary: RestartSummary,
    best_x: Vec<f64>,
    /// (local evaluation count, best so far) at every improvement.
    trace: Vec<(usize, f64)>,
}

fn local_search(
    objective: &Objective<'_>,
    start: Vec<f64>,
    kind: StartKind,
    index: usize,
    config: &SearchConfig,
) -> Result<RestartResult> {
    let mut rng = substream(config.seed, Stream::Restarts, index as u64 + 1);
    let dim = start.len();
    let mut x = start;
    let mut best = objective.mean(&x)?;
    let initial_mean = best;
    let mut evals = 1;
    let mut trace = vec![(evals, best)];
    let mut steps = vec![config.initial_step; dim];
    let mut order: Vec<usize> = (0..dim).collect();
    let mut converged = false;

    'outer: while evals < config.budget {
        order.shuffle(&mut rng);
        for &i in &order {
            let mut improved = false;
            for sign in [1.0, -1.0] {
                if evals >= config.budget {
                    break 'outer;
                }
                let old = x[i];
                x[i] = old + sign * steps[i];
                let f = objective.mean(&x)?;
                evals += 1;
                if f > best {
                    best = f;
                    trace.push((evals, best));
                    improved = true;
                    break;
                }
                x[i] = old;
            }
            steps[i] = if improved {
                (steps[i] * 1.5).min(config.initial_step * 4.0)
            } else {
                steps[i] * 0.5
            };
        }
        if steps.iter().all(|&s| s < config.min_step) {
            converged = true;
            break;
        }
    }
    Ok(RestartResult {
        summary: RestartSummary {
            index,
            start: kind,
            initial_mean,
            final_mean: best,
            evaluations: evals,
            converged,
        },
        best_x: x,
        trace,
    })
}

/// Derivative-free coordinate search with per-coordinate step adaptation.
///
/// Restart 0 starts from the identity encoder and decoder; the others start
/// from seeded random parameters. Restarts run in parallel and are merged in
/// index order; ties go to the lower index.
pub fn optimize(scenario: &CompressionScenario, config: &SearchConfig) -> Result<OptimizationReport> {
    check_search_scenario(scenario)?;
    if config.budget == 0 {
        return Err(Error::out_of_range("budget", 0, ">= 1"));
    }
    if config.restarts == 0 {
        return Err(Error::out_of_range("restarts", 0, ">= 1"));
    }
    if config.samples == 0 {
        return Err(Error::out_of_range("samples", 0, ">= 1"));
    }
    if !(config.initial_step > 0.0 && config.min_step > 0.0) {
        return Err(Error::Invalid("step sizes must be positive".into()));
    }
    let samples = phase_samples(scenario, config.samples, config.seed)?;
    let size = scenario.total_dim();
    let objective = Objective {
        scenario,
        samples: &samples,
        size,
    };

    let results = par::map_range(config.restarts, |index| {
        let (start, kind) = if index == 0 {
            (vec![0.0; 2 * size * size], StartKind::Identity)
        } else {
            let mut rng = substream(config.seed, Stream::RandomUnitary, index as u64);
            let e = UnitaryParams::random(size, config.start_scale, &mut rng);
            let d = UnitaryParams::random(size, config.start_scale, &mut rng);
            ([e.params, d.params].concat(), StartKind::Random)
        };
        local_search(&objective, start, kind, index, config)
    });
    let results: Vec<RestartResult> = results.into_iter().collect::<Result<_>>()?;

    let mut trace = Vec::new();
    let mut running = f64::NEG_INFINITY;
    let mut best_restart = 0;
    for (r, res) in results.iter().enumerate() {
        for &(local, value) in &res.trace {
            if value > running {
                running = value;
                best_restart = r;
                trace.push(TracePoint {
                    iteration: r * config.budget + local,
                    best: value,
                });
            }
        }
    }
    let best = &results[best_restart];
    let stats = objective.stats(&best.best_x)?;
    let (best_encoder, best_decoder) = objective.split(&best.best_x);
    Ok(OptimizationReport {
        scenario: *scenario,
        config: *config,
        best_mean_fidelity: stats.mean,
        best_worst_fidelity: stats.worst,
        best_restart,
        best_encoder,
        best_decoder,
        trace,
        restarts: results.into_iter().map(|r| r.summary).collect(),
        sample_count: config.samples,
        seed: config.seed,
        wall_time_ms: None,
    })
}

/// Same as [`optimize`] with the elapsed time recorded.
pub fn optimize_timed(
    scenario: &CompressionScenario,
    config: &SearchConfig,
) -> Result<OptimizationReport> {
    let started = Instant::now();
    let mut report = optimize(scenario, config)?;
    report.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifferenceReport {
    pub steps: [f64; 3],
    /// Central differences `(f(x + h v) − f(x − h v)) / 2h` at each step.
    pub derivatives: [f64; 3],
    /// Richardson extrapolation `(h₁²·D(h₂) − h₂²·D(h₁)) / (h₁² − h₂²)`.
    pub extrapolated: f64,
    /// `|D(h₂) − D(h₁)|`.
    pub discrepancy: f64,
    /// Second-order error constant estimated from `h₂` and `h₃ = h₂ / 2`.
    pub error_constant: f64,
    /// `C·h₁²` plus a round-off allowance.
    pub bound: f64,
    pub consistent: bool,
}

/// Directional central differences of the mean retrieval fidelity, checked
/// for second-order error decay.
///
/// `direction` perturbs the concatenated `(encoder, decoder)` parameters.
pub fn finite_difference_consistency(
    pipeline: &PipelineSpec,
    direction: &[f64],
    steps: (f64, f64),
) -> Result<FiniteDifferenceReport> {
    pipeline.validate()?;
    let (h1, h2) = steps;
    if !(h1 > h2 && h2 > 0.0) {
        return Err(Error::Invalid(format!(
            "steps must satisfy h1 > h2 > 0 (got {h1}, {h2})"
        )));
    }
    let size = pipeline.scenario.total_dim();
    if direction.len() != 2 * size * size {
        return Err(Error::Dimension(format!(
            "direction has {} entries, need {}",
            direction.len(),
            2 * size * size
        )));
    }
    let samples = pipeline.samples()?;
    let objective = Objective {
        scenario: &pipeline.scenario,
        samples: &samples,
        size,
    };
    let x: Vec<f64> = [pipeline.encoder.params(), pipeline.decoder.params()].concat();
    let shifted = |h: f64| -> Vec<f64> {
        x.iter().zip(direction).map(|(a, v)| a + h * v).collect()
    };
    let central = |h: f64| -> Result<f64> {
        Ok((objective.mean(&shifted(h))? - objective.mean(&shifted(-h))?) / (2.0 * h))
    };
    let h3 = h2 / 2.0;
    let derivatives = [central(h1)?, central(h2)?, central(h3)?];
    let discrepancy = (derivatives[1] - derivatives[0]).abs();
    let error_constant = (derivatives[1] - derivatives[2]).abs() / (h2 * h2 - h3 * h3);
    let noise = 64.0 * f64::EPSILON / h3;
    let bound = 2.0 * error_constant * h1 * h1 + noise;
    Ok(FiniteDifferenceReport {
        steps: [h1, h2, h3],
        derivatives,
        extrapolated: (h1 * h1 * derivatives[1] - h2 * h2 * derivatives[0]) / (h1 * h1 - h2 * h2),
        discrepancy,
        error_constant,
        bound,
        consistent: discrepancy <= bound,
    })
}
