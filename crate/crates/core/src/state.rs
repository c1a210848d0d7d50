//! Statevectors over `q` qudits of dimension `d`.
//!
//! Sites are indexed from 0. The basis index is big-endian: site 0 is the
//! most significant base-`d` digit, so `|a_0 a_1 … a_{q-1}⟩` reads left to
//! right.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, unitarity_deviation, CMatrix, C64, ONE, ZERO};
use crate::rng::{stream, Stream};

/// Branches with probability below this cannot be selected.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dim: usize,
    sites: usize,
    amplitudes: Vec<C64>,
}

pub(crate) fn checked_pow(dim: usize, sites: usize) -> Result<usize> {
    u32::try_from(sites)
        .ok()
        .and_then(|s| dim.checked_pow(s))
        .ok_or_else(|| Error::Dimension(format!("{dim}^{sites} overflows")))
}

fn infer_sites(dim: usize, len: usize) -> Option<usize> {
    let mut sites = 0;
    let mut acc = 1usize;
    while acc < len {
        acc = acc.checked_mul(dim)?;
        sites += 1;
    }
    (acc == len && sites > 0).then_some(sites)
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalising them. The number of
    /// sites is inferred from the length, which must be a positive power of
    /// `dim`.
    pub fn new(dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::out_of_range("dim", dim, ">= 2"));
        }
        let sites = infer_sites(dim, amplitudes.len()).ok_or_else(|| {
            Error::Dimension(format!(
                "length {} is not a positive power of {dim}",
                amplitudes.len()
            ))
        })?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            dim,
            sites,
            amplitudes,
        })
    }

    pub fn basis(dim: usize, sites: usize, index: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::out_of_range("dim", dim, ">= 2"));
        }
        if sites == 0 {
            return Err(Error::out_of_range("sites", sites, ">= 1"));
        }
        let len = checked_pow(dim, sites)?;
        if index >= len {
            return Err(Error::out_of_range("index", index, format!("0..{len}")));
        }
        let mut amplitudes = vec![ZERO; len];
        amplitudes[index] = ONE;
        Ok(Self {
            dim,
            sites,
            amplitudes,
        })
    }

    /// `|0…0⟩` on `sites` qudits.
    pub fn zeros(dim: usize, sites: usize) -> Result<Self> {
        Self::basis(dim, sites, 0)
    }

    /// `α|0⟩ + β|1⟩`, normalised.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(2, vec![alpha, beta])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_shape(self, other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// The same ray multiplied by `e^{iγ}`.
    pub fn with_global_phase(&self, gamma: f64) -> StateVector {
        let phase = C64::from_polar(1.0, gamma);
        StateVector {
            dim: self.dim,
            sites: self.sites,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// Base-`d` digit of `index` at `site`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.dim
    }

    fn stride(&self, site: usize) -> usize {
        self.dim.pow((self.sites - 1 - site) as u32)
    }
}

fn same_shape(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim != b.dim || a.sites != b.sites {
        return Err(Error::Dimension(format!(
            "states have shapes d={} q={} and d={} q={}",
            a.dim, a.sites, b.dim, b.sites
        )));
    }
    Ok(())
}

fn check_site(state: &StateVector, site: usize) -> Result<()> {
    if site >= state.sites {
        return Err(Error::out_of_range(
            "site",
            site,
            format!("0..{}", state.sites),
        ));
    }
    Ok(())
}

/// `a ⊗ b`; sites of `a` come first.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    if a.dim != b.dim {
        return Err(Error::Dimension(format!(
            "cannot tensor d={} with d={}",
            a.dim, b.dim
        )));
    }
    let mut amplitudes = Vec::with_capacity(a.len() * b.len());
    for x in &a.amplitudes {
        amplitudes.extend(b.amplitudes.iter().map(|y| x * y));
    }
    Ok(StateVector {
        dim: a.dim,
        sites: a.sites + b.sites,
        amplitudes,
    })
}

/// `|⟨a|b⟩|²`, insensitive to global phase on either argument.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// A square complex matrix with `U·U† = I` to within [`UnitaryMatrix::TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
}

impl UnitaryMatrix {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, Self::TOLERANCE)
    }

    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&entries)?;
        let deviation = unitarity_deviation(&entries)?;
        if !(deviation <= tol) {
            return Err(Error::NotUnitary { deviation, tol });
        }
        Ok(Self { entries })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            entries: CMatrix::identity(size, size),
        }
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.size() != other.size() {
            return Err(Error::Dimension(format!(
                "cannot compose sizes {} and {}",
                self.size(),
                other.size()
            )));
        }
        Ok(Self {
            entries: &self.entries * &other.entries,
        })
    }

    pub fn kron(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        Self {
            entries: self.entries.kronecker(&other.entries),
        }
    }
}

/// Applies `gate` to the ordered `targets`; `targets[0]` is the most
/// significant digit of the gate's index.
pub fn apply_gate(
    state: &StateVector,
    gate: &UnitaryMatrix,
    targets: &[usize],
) -> Result<StateVector> {
    for (i, &t) in targets.iter().enumerate() {
        check_site(state, t)?;
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateTarget(t));
        }
    }
    let block = checked_pow(state.dim, targets.len())?;
    if gate.size() != block {
        return Err(Error::Dimension(format!(
            "gate of size {} cannot act on {} site(s) of dimension {}",
            gate.size(),
            targets.len(),
            state.dim
        )));
    }

    let d = state.dim;
    let offsets: Vec<usize> = (0..block)
        .map(|g| {
            let mut rest = g;
            let mut offset = 0;
            for &t in targets.iter().rev() {
                offset += (rest % d) * state.stride(t);
                rest /= d;
            }
            offset
        })
        .collect();

    let u = gate.matrix();
    let mut out = vec![ZERO; state.len()];
    let mut gathered = vec![ZERO; block];
    for base in 0..state.len() {
        if targets.iter().any(|&t| state.digit(base, t) != 0) {
            continue;
        }
        for (slot, off) in gathered.iter_mut().zip(&offsets) {
            *slot = state.amplitudes[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            out[base + off] = gathered
                .iter()
                .enumerate()
                .map(|(g, v)| u[(r, g)] * v)
                .sum();
        }
    }
    Ok(StateVector {
        dim: state.dim,
        sites: state.sites,
        amplitudes: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Forced(usize),
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub site: usize,
    pub outcome: usize,
    pub probability: f64,
    /// Renormalised branch with the measured site removed.
    pub post_state: StateVector,
}

/// Probability of each outcome of a computational-basis measurement on `site`.
pub fn outcome_probabilities(state: &StateVector, site: usize) -> Result<Vec<f64>> {
    check_site(state, site)?;
    let mut probs = vec![0.0; state.dim];
    for (i, a) in state.amplitudes.iter().enumerate() {
        probs[state.digit(i, site)] += a.norm_sqr();
    }
    Ok(probs)
}

/// Projective measurement of one site in the computational basis.
///
/// The measured site is removed from the post-measurement state, so the
/// state must have at least two sites.
pub fn measure_site(
    state: &StateVector,
    site: usize,
    mode: MeasureMode,
) -> Result<MeasurementRecord> {
    check_site(state, site)?;
    if state.sites < 2 {
        return Err(Error::Invalid(
            "cannot measure the only site of a state".into(),
        ));
    }
    let probs = outcome_probabilities(state, site)?;
    let outcome = match mode {
        MeasureMode::Forced(k) => {
            if k >= state.dim {
                return Err(Error::out_of_range(
                    "outcome",
                    k,
                    format!("0..{}", state.dim),
                ));
            }
            k
        }
        MeasureMode::Sampled { seed } => {
            let u: f64 = stream(seed, Stream::Measurement).random();
            let total: f64 = probs.iter().sum();
            let mut acc = 0.0;
            let mut chosen = None;
            for (k, &p) in probs.iter().enumerate() {
                if p < MIN_BRANCH_PROBABILITY {
                    continue;
                }
                acc += p / total;
                chosen = Some(k);
                if u < acc {
                    break;
                }
            }
            chosen.ok_or(Error::ZeroNorm)?
        }
    };
    let probability = probs[outcome];
    if probability < MIN_BRANCH_PROBABILITY {
        return Err(Error::ZeroProbability {
            site,
            outcome,
            probability,
        });
    }

    let branch: Vec<C64> = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|&(i, _)| state.digit(i, site) == outcome)
        .map(|(_, a)| *a)
        .collect();
    let post_state = StateVector::new(state.dim, branch)?;
    Ok(MeasurementRecord {
        site,
        outcome,
        probability,
        post_state,
    })
}

/// Density matrix over `sites` qudits of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    sites: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    pub const TOLERANCE: f64 = 1e-12;
    pub const EIGEN_TOLERANCE: f64 = 1e-10;

    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dim: usize, sites: usize, entries: CMatrix) -> Result<Self> {
        let n = ensure_square(&entries)?;
        if n != checked_pow(dim, sites)? {
            return Err(Error::Dimension(format!(
                "{n}x{n} matrix does not match d={dim}, q={sites}"
            )));
        }
        let rho = Self {
            dim,
            sites,
            entries,
        };
        let herm = rho.hermiticity_deviation();
        let tr = (rho.trace() - ONE).norm();
        if herm > Self::TOLERANCE || tr > Self::TOLERANCE {
            return Err(Error::Invalid(format!(
                "not a density matrix (hermiticity {herm:e}, trace error {tr:e})"
            )));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -Self::EIGEN_TOLERANCE {
            return Err(Error::Invalid(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            dim: state.dim,
            sites: state.sites,
            entries: &v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim != self.dim || state.sites != self.sites {
            return Err(Error::Dimension("state does not match density matrix".into()));
        }
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)].re)
    }
}

/// Reduced state on the sites in `keep` (order-insensitive; output sites
/// appear in ascending order).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::Invalid("partial trace needs at least one kept site".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    for w in kept.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateTarget(w[0]));
        }
    }
    for &s in &kept {
        check_site(state, s)?;
    }
    let traced: Vec<usize> = (0..state.sites).filter(|s| !kept.contains(s)).collect();
    let d = state.dim;
    let kdim = d.pow(kept.len() as u32);
    let tdim = d.pow(traced.len() as u32);

    let sub_index = |i: usize, sites: &[usize]| {
        sites
            .iter()
            .fold(0usize, |acc, &s| acc * d + state.digit(i, s))
    };
    let mut m = CMatrix::zeros(kdim, tdim);
    for (i, a) in state.amplitudes.iter().enumerate() {
        m[(sub_index(i, &kept), sub_index(i, &traced))] = *a;
    }
    Ok(DensityMatrix {
        dim: d,
        sites: kept.len(),
        entries: &m * m.adjoint(),
    })
}
