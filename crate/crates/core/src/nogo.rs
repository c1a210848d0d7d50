//! Numerical checks behind the impossibility of compressing the phases of
//! `n` equatorial qudits into `m < n` qudits.
//!
//! * [`build_constraint_system`] constructs the `d^n × d^n` coefficient matrix
//!   obtained by evaluating the phase polynomial on the grid
//!   `φ_{k_j} = j · 2π t_k / d`, in two independent ways.
//! * [`verify_coefficient_lemma`] checks that matrix is nonsingular, so a
//!   phase polynomial vanishing everywhere has only zero coefficients.
//! * [`constraint_residual`] measures how far a candidate unitary is from
//!   mapping every equatorial input into `ψ ⊗ |0…0⟩`.
//! * [`orthogonality_witness`] and [`support_structure_check`] produce
//!   serialisable infeasibility certificates.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    determinant, max_abs_diff, min_singular_value, numerical_rank, CMatrix, C64, ONE,
};
use crate::par;
use crate::protocols::{equatorial_state, EquatorialSpec};
use crate::rng::{stream, Stream};
use crate::state::{checked_pow, tensor, StateVector, UnitaryMatrix};

/// Entries below this magnitude do not count towards a row support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
/// Largest constraint residual for which a candidate counts as satisfying
/// every sampled constraint.
pub const RESIDUAL_THRESHOLD: f64 = 1e-8;
/// Allowed deviation of the witness Gram matrix from the identity.
pub const GRAM_TOLERANCE: f64 = 1e-10;
/// Agreement required between the direct and recursive matrix builds.
pub const PATH_TOLERANCE: f64 = 1e-12;
/// Relative agreement required between LU and Kronecker-power determinants.
pub const ORACLE_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Random coefficient vectors tried by the operational lemma check.
pub const LEMMA_TRIALS: usize = 50;

pub const MIN_D: usize = 2;
pub const MAX_D: usize = 5;
pub const MIN_N: usize = 1;
pub const MAX_N: usize = 3;
pub const MAX_DIMENSION: usize = 125;

fn check_desk_scale(d: usize, n: usize) -> Result<()> {
    if !(MIN_D..=MAX_D).contains(&d) {
        return Err(Error::out_of_range("d", d, format!("{MIN_D}..{MAX_D}")));
    }
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(Error::out_of_range("n", n, format!("{MIN_N}..{MAX_N}")));
    }
    let size = checked_pow(d, n)?;
    if size > MAX_DIMENSION {
        return Err(Error::out_of_range(
            "d^n",
            size,
            format!("<= {MAX_DIMENSION}"),
        ));
    }
    Ok(())
}

/// `ω^e` with `ω = e^{2πi/d}`, exponent reduced mod `d` first.
fn root_of_unity(d: usize, e: usize) -> C64 {
    C64::from_polar(1.0, TAU * (e % d) as f64 / d as f64)
}

/// Big-endian base-`d` digits of `index`, `width` digits long.
pub fn digits(mut index: usize, d: usize, width: usize) -> Vec<usize> {
    let mut out = vec![0; width];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// Angles `φ_{k_j}` for `k < n`, `j < d`, stored row-major by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    d: usize,
    n: usize,
    angles: Vec<f64>,
}

impl PhaseVector {
    pub fn new(d: usize, n: usize, angles: Vec<f64>) -> Result<Self> {
        if d < 2 || n < 1 {
            return Err(Error::Invalid(format!("phase vector needs d >= 2, n >= 1 (got d={d}, n={n})")));
        }
        if angles.len() != n * d {
            return Err(Error::Dimension(format!(
                "{} angles for an {n}x{d} phase vector",
                angles.len()
            )));
        }
        if let Some(bad) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::out_of_range("angle", bad, "[0, 2π)"));
        }
        Ok(Self { d, n, angles })
    }

    /// Reduces every angle modulo 2π before validating.
    pub fn wrapped(d: usize, n: usize, angles: Vec<f64>) -> Result<Self> {
        let angles = angles
            .into_iter()
            .map(|a| {
                let w = a.rem_euclid(TAU);
                // rem_euclid can round up to exactly 2π for tiny negatives
                if w >= TAU {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        Self::new(d, n, angles)
    }

    /// Grid point `φ_{k_j} = j · 2π t_k / d`.
    pub fn grid_point(d: usize, assignment: &[usize]) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&t| t >= d) {
            return Err(Error::out_of_range("t", bad, format!("0..{d}")));
        }
        let angles = assignment
            .iter()
            .flat_map(|&t| (0..d).map(move |j| TAU * ((j * t) % d) as f64 / d as f64))
            .collect();
        Self::new(d, assignment.len(), angles)
    }

    /// All `d^n` grid points, ordered by the big-endian assignment index.
    pub fn grid(d: usize, n: usize) -> Result<Vec<Self>> {
        let count = checked_pow(d, n)?;
        (0..count)
            .map(|r| Self::grid_point(d, &digits(r, d, n)))
            .collect()
    }

    /// Uniform angles with `φ_{k_0} = 0`.
    pub fn random<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Self> {
        let angles = (0..n * d)
            .map(|i| if i % d == 0 { 0.0 } else { rng.random_range(0.0..TAU) })
            .collect();
        Self::new(d, n, angles)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, k: usize, j: usize) -> f64 {
        self.angles[k * self.d + j]
    }

    /// `Σ_j e^{iφ_{k_j}}|j⟩ / √d` for qudit `k`.
    pub fn qudit_state(&self, k: usize) -> StateVector {
        let spec = EquatorialSpec::new(self.d, self.angles[k * self.d..(k + 1) * self.d].to_vec())
            .expect("validated angles");
        equatorial_state(&spec)
    }

    /// Normalised `⊗_k Σ_j e^{iφ_{k_j}}|j⟩`.
    pub fn product_state(&self) -> StateVector {
        (1..self.n).fold(self.qudit_state(0), |acc, k| {
            tensor(&acc, &self.qudit_state(k)).expect("same d")
        })
    }

    /// Unnormalised products `∏_k e^{iφ_{k_{j_k}}}` for every multi-index
    /// `(j_1 … j_n)` in big-endian order.
    pub fn phase_products(&self) -> Vec<C64> {
        let len = self.d.pow(self.n as u32);
        (0..len)
            .map(|idx| {
                digits(idx, self.d, self.n)
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| C64::from_polar(1.0, self.angle(k, j)))
                    .product()
            })
            .collect()
    }
}

/// The `d^n × d^n` grid coefficient matrix. Row `(t_1 … t_n)` and column
/// `(j_1 … j_n)` hold `∏_k ω^{t_k j_k}`; both multi-indices are big-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub d: usize,
    pub n: usize,
    pub matrix: CMatrix,
    /// Largest entrywise difference between the direct and recursive builds.
    pub path_difference: f64,
}

impl ConstraintSystem {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn column_index(&self, multi: &[usize]) -> usize {
        from_digits(multi, self.d)
    }

    pub fn column_multi_index(&self, column: usize) -> Vec<usize> {
        digits(column, self.d, self.n)
    }

    pub fn row_index(&self, assignment: &[usize]) -> usize {
        from_digits(assignment, self.d)
    }

    pub fn row_assignment(&self, row: usize) -> Vec<usize> {
        digits(row, self.d, self.n)
    }
}

/// Direct construction from the entry formula.
pub fn constraint_matrix_direct(d: usize, n: usize) -> Result<CMatrix> {
    check_desk_scale(d, n)?;
    let size = d.pow(n as u32);
    Ok(CMatrix::from_fn(size, size, |r, c| {
        let exponent: usize = digits(r, d, n)
            .iter()
            .zip(digits(c, d, n))
            .map(|(t, j)| t * j)
            .sum();
        root_of_unity(d, exponent)
    }))
}

/// Block recursion: start from the `d × d` Vandermonde matrix in the roots
/// of unity and grow by `A_{k+1}[block (r, c)] = ω^{rc} A_k`.
pub fn constraint_matrix_recursive(d: usize, n: usize) -> Result<CMatrix> {
    check_desk_scale(d, n)?;
    let base = CMatrix::from_fn(d, d, |r, c| root_of_unity(d, r * c));
    let mut acc = base.clone();
    for _ in 1..n {
        let inner = acc.nrows();
        let mut next = CMatrix::zeros(inner * d, inner * d);
        for r in 0..d {
            for c in 0..d {
                let block = &acc * base[(r, c)];
                next.view_mut((r * inner, c * inner), (inner, inner))
                    .copy_from(&block);
            }
        }
        acc = next;
    }
    Ok(acc)
}

pub fn build_constraint_system(d: usize, n: usize) -> Result<ConstraintSystem> {
    let matrix = constraint_matrix_direct(d, n)?;
    let recursive = constraint_matrix_recursive(d, n)?;
    let path_difference = max_abs_diff(&matrix, &recursive);
    Ok(ConstraintSystem {
        d,
        n,
        matrix,
        path_difference,
    })
}

/// `∏_{0≤k<l<d} |ω^k − ω^l|`, the magnitude of the `d × d` Vandermonde
/// determinant in the roots of unity.
pub fn vandermonde_magnitude(d: usize) -> f64 {
    let mut acc = 1.0;
    for k in 0..d {
        for l in (k + 1)..d {
            acc *= (root_of_unity(d, k) - root_of_unity(d, l)).norm();
        }
    }
    acc
}

/// `|det A_1|^{n·d^{n−1}}`: the determinant of an `n`-fold Kronecker power.
pub fn kronecker_determinant_oracle(d: usize, n: usize) -> f64 {
    let exponent = (n * d.pow(n as u32 - 1)) as f64;
    (exponent * vandermonde_magnitude(d).ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub d: usize,
    pub n: usize,
    pub tol: f64,
    pub det_abs: f64,
    pub oracle_det_abs: f64,
    pub oracle_relative_error: f64,
    pub path_difference: f64,
    /// Max entry of `|AᴴA − d^n I|`.
    pub gram_deviation: f64,
    pub min_singular_value: f64,
    pub trials: usize,
    /// Smallest `max_row |(A x)_row| / ‖x‖` over the random trials.
    pub min_relative_row_residual: f64,
    pub nonsingular: bool,
    pub passes: bool,
}

/// Checks that no nonzero coefficient vector makes the phase polynomial
/// vanish on the whole grid.
///
/// `nonsingular` is `|det A_n| > tol`; `passes` additionally requires the
/// Kronecker oracle, the path agreement, the random trials and the
/// singular-value check to succeed.
pub fn verify_coefficient_lemma(d: usize, n: usize, tol: f64, seed: u64) -> Result<LemmaReport> {
    if !(tol > 0.0) {
        return Err(Error::out_of_range("tol", tol, "> 0"));
    }
    let system = build_constraint_system(d, n)?;
    let a = &system.matrix;
    let size = system.size();

    let det_abs = determinant(a)?.norm();
    let oracle = kronecker_determinant_oracle(d, n);
    let oracle_relative_error = (det_abs - oracle).abs() / oracle;

    let gram = a.adjoint() * a;
    let scaled_identity = CMatrix::identity(size, size) * C64::new(size as f64, 0.0);
    let gram_deviation = max_abs_diff(&gram, &scaled_identity);

    let sigma_min = min_singular_value(a);

    let mut rng = stream(seed, Stream::Coefficients);
    let mut min_relative_row_residual = f64::INFINITY;
    for _ in 0..LEMMA_TRIALS {
        let x = nalgebra::DVector::from_fn(size, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let ax = a * &x;
        let worst = ax.iter().map(|v| v.norm()).fold(0.0, f64::max);
        min_relative_row_residual = min_relative_row_residual.min(worst / x.norm());
    }

    let nonsingular = det_abs > tol;
    let passes = nonsingular
        && oracle_relative_error <= ORACLE_RELATIVE_TOLERANCE
        && system.path_difference < PATH_TOLERANCE
        && min_relative_row_residual > 1e-8
        && sigma_min > tol;
    Ok(LemmaReport {
        d,
        n,
        tol,
        det_abs,
        oracle_det_abs: oracle,
        oracle_relative_error,
        path_difference: system.path_difference,
        gram_deviation,
        min_singular_value: sigma_min,
        trials: LEMMA_TRIALS,
        min_relative_row_residual,
        nonsingular,
        passes,
    })
}

/// `n` input qudits, `m` kept qudits, `p` ancilla qudits, all of dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionScenario {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl CompressionScenario {
    pub fn new(d: usize, n: usize, m: usize, p: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::out_of_range("d", d, ">= 2"));
        }
        if n < 1 {
            return Err(Error::out_of_range("n", n, ">= 1"));
        }
        Ok(Self { d, n, m, p })
    }

    pub fn total_sites(&self) -> usize {
        self.n + self.p
    }

    pub fn total_dim(&self) -> usize {
        self.d.pow(self.total_sites() as u32)
    }

    pub fn input_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn ancilla_dim(&self) -> usize {
        self.d.pow(self.p as u32)
    }

    pub fn kept_dim(&self) -> usize {
        self.d.pow(self.m as u32)
    }

    /// Number of output qudits that must end in `|0⟩`, if `m ≤ n + p`.
    pub fn refill_sites(&self) -> Option<usize> {
        self.total_sites().checked_sub(self.m)
    }

    /// Column of `U` that receives input `|j_1 … j_n⟩ ⊗ |0⟩^p`.
    pub fn input_column(&self, input_index: usize) -> usize {
        input_index * self.ancilla_dim()
    }

    /// Whether output row `a` has a nonzero digit among its last `n + p − m`
    /// qudits.
    pub fn is_constrained_row(&self, row: usize) -> bool {
        let tail = self.refill_sites().unwrap_or(0);
        !row.is_multiple_of(self.d.pow(tail as u32))
    }
}

fn check_candidate(candidate: &CMatrix, scenario: &CompressionScenario) -> Result<()> {
    let size = scenario.total_dim();
    if candidate.nrows() != size || candidate.ncols() != size {
        return Err(Error::Dimension(format!(
            "candidate is {}x{}, scenario needs {size}x{size}",
            candidate.nrows(),
            candidate.ncols()
        )));
    }
    if scenario.refill_sites().is_none() {
        return Err(Error::Dimension(format!(
            "m = {} exceeds n + p = {}",
            scenario.m,
            scenario.total_sites()
        )));
    }
    Ok(())
}

/// Max over samples and constrained rows `a` of
/// `|Σ_{j_1…j_n} ∏_k e^{iφ_{k_{j_k}}} u_{a, (j_1…j_n 0…0)}|`.
///
/// Works on any square matrix of the right size; zero when no row is
/// constrained.
pub fn constraint_residual_matrix(
    candidate: &CMatrix,
    scenario: &CompressionScenario,
    samples: &[PhaseVector],
) -> Result<f64> {
    check_candidate(candidate, scenario)?;
    if samples.is_empty() {
        return Err(Error::Invalid("no phase samples".into()));
    }
    if let Some(bad) = samples
        .iter()
        .find(|s| s.d() != scenario.d || s.n() != scenario.n)
    {
        return Err(Error::Dimension(format!(
            "phase sample has d={} n={}, scenario has d={} n={}",
            bad.d(),
            bad.n(),
            scenario.d,
            scenario.n
        )));
    }
    let rows: Vec<usize> = (0..scenario.total_dim())
        .filter(|&a| scenario.is_constrained_row(a))
        .collect();
    let columns: Vec<usize> = (0..scenario.input_dim())
        .map(|j| scenario.input_column(j))
        .collect();
    let per_sample = par::map_slice(samples, |sample| {
        let phases = sample.phase_products();
        par::max_or_zero(rows.iter().map(|&a| {
            columns
                .iter()
                .zip(&phases)
                .map(|(&col, ph)| ph * candidate[(a, col)])
                .sum::<C64>()
                .norm()
        }))
    });
    Ok(par::max_or_zero(per_sample))
}

pub fn constraint_residual(
    unitary: &UnitaryMatrix,
    scenario: &CompressionScenario,
    samples: &[PhaseVector],
) -> Result<f64> {
    constraint_residual_matrix(unitary.matrix(), scenario, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Infeasible,
    FeasibleNotExcluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    GramRank,
    SupportStructure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    GramRank {
        orthogonal_states: usize,
        gram_deviation: f64,
        gram_rank: usize,
        /// Dimension the outputs `ψ ⊗ |0…0⟩` can span.
        available_rank: usize,
    },
    SupportStructure {
        residual: f64,
        residual_threshold: f64,
        precondition_met: bool,
        support_rows: Vec<usize>,
        support_size: usize,
        column_block_rank: usize,
        required_rank: usize,
        available_rank: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub scenario: CompressionScenario,
    pub verdict: Verdict,
    pub witness_kind: WitnessKind,
    pub evidence: Evidence,
}

/// Builds the `d^n` grid product states, which are pairwise orthogonal, and
/// compares their number with the `d^m` dimensions available to outputs of
/// the form `ψ ⊗ |0…0⟩`.
pub fn orthogonality_witness(scenario: &CompressionScenario) -> Result<InfeasibilityCertificate> {
    check_desk_scale(scenario.d, scenario.n)?;
    let states: Vec<StateVector> = PhaseVector::grid(scenario.d, scenario.n)?
        .iter()
        .map(PhaseVector::product_state)
        .collect();
    let count = states.len();
    let rows = par::map_range(count, |r| {
        (0..count)
            .map(|s| states[r].inner(&states[s]).expect("same shape"))
            .collect::<Vec<_>>()
    });
    let gram = CMatrix::from_fn(count, count, |r, s| rows[r][s]);
    let gram_deviation = max_abs_diff(&gram, &CMatrix::identity(count, count));
    let gram_rank = numerical_rank(&gram, GRAM_TOLERANCE);
    let available_rank = checked_pow(scenario.d, scenario.m).unwrap_or(usize::MAX);

    let verdict = if scenario.n > scenario.m
        && gram_deviation <= GRAM_TOLERANCE
        && gram_rank > available_rank
    {
        Verdict::Infeasible
    } else {
        Verdict::FeasibleNotExcluded
    };
    Ok(InfeasibilityCertificate {
        scenario: *scenario,
        verdict,
        witness_kind: WitnessKind::GramRank,
        evidence: Evidence::GramRank {
            orthogonal_states: count,
            gram_deviation,
            gram_rank,
            available_rank,
        },
    })
}

/// Row-support argument on an explicit candidate.
///
/// If the candidate satisfies every grid constraint, the constrained rows of
/// the input columns vanish, so those `d^n` columns live on at most `d^m`
/// rows and cannot be linearly independent when `m < n`.
pub fn support_structure_check(
    candidate: &CMatrix,
    scenario: &CompressionScenario,
) -> Result<InfeasibilityCertificate> {
    check_desk_scale(scenario.d, scenario.n)?;
    check_candidate(candidate, scenario)?;
    let grid = PhaseVector::grid(scenario.d, scenario.n)?;
    let residual = constraint_residual_matrix(candidate, scenario, &grid)?;
    let precondition_met = residual <= RESIDUAL_THRESHOLD;

    let columns: Vec<usize> = (0..scenario.input_dim())
        .map(|j| scenario.input_column(j))
        .collect();
    let support_rows: Vec<usize> = (0..scenario.total_dim())
        .filter(|&a| {
            columns
                .iter()
                .any(|&c| candidate[(a, c)].norm() > SUPPORT_THRESHOLD)
        })
        .collect();
    let block = CMatrix::from_fn(scenario.total_dim(), columns.len(), |r, c| {
        candidate[(r, columns[c])]
    });
    let column_block_rank = numerical_rank(&block, SUPPORT_THRESHOLD);
    let available_rank = scenario.kept_dim();
    let required_rank = scenario.input_dim();

    let verdict = if precondition_met
        && scenario.n > scenario.m
        && support_rows.len() <= available_rank
    {
        Verdict::Infeasible
    } else {
        Verdict::FeasibleNotExcluded
    };
    Ok(InfeasibilityCertificate {
        scenario: *scenario,
        verdict,
        witness_kind: WitnessKind::SupportStructure,
        evidence: Evidence::SupportStructure {
            residual,
            residual_threshold: RESIDUAL_THRESHOLD,
            precondition_met,
            support_size: support_rows.len(),
            support_rows,
            column_block_rank,
            required_rank,
            available_rank,
        },
    })
}

/// A candidate whose input columns are spread over the unconstrained rows
/// `(c, 0…0)`, `c < d^m`. It satisfies every grid constraint, so the support
/// check rules it out.
pub fn compressed_support_candidate(scenario: &CompressionScenario) -> Result<CMatrix> {
    let tail = scenario.refill_sites().ok_or_else(|| {
        Error::Dimension(format!("m = {} exceeds n + p", scenario.m))
    })?;
    let size = scenario.total_dim();
    let kept = scenario.kept_dim();
    let stride = scenario.d.pow(tail as u32);
    let mut m = CMatrix::zeros(size, size);
    for j in 0..scenario.input_dim() {
        let row = (j % kept) * stride;
        m[(row, scenario.input_column(j))] = ONE;
    }
    Ok(m)
}
