//! Qudit statevector simulation and numerical verification tools for
//! compressing the phase information of equatorial qudits.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] and [`state`]: dense complex linear algebra and statevector
//!   mechanics (tensor products, gates on qudit subsets, projective
//!   measurement, partial trace, determinants).
//! * [`protocols`]: equatorial state preparation, the rotate-then-CNOT
//!   compression of two equatorial qubits, the phase-loss scan, and the
//!   extract / teleport / reconstruct pipeline for `α|00⟩ + β|11⟩`.
//! * [`nogo`]: the Fourier constraint matrices, the constraint residual on
//!   candidate unitaries, and infeasibility certificates.
//! * [`search`]: parameterised unitaries and a derivative-free search for the
//!   best approximate encode / discard / decode channel.
//!
//! With the default `parallel` feature, independent evaluations (phase
//! samples, restarts, sweeps) run on the rayon global pool. Reductions are
//! always performed in index order, so results are bit-identical with or
//! without the feature and for any worker count.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gates;
pub mod linalg;
pub mod nogo;
pub mod par;
pub mod protocols;
pub mod rng;
pub mod search;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{determinant, is_unitary, CMatrix, C64};
pub use state::{
    apply_gate, fidelity, measure_site, partial_trace, tensor, DensityMatrix, MeasureMode,
    MeasurementRecord, StateVector, UnitaryMatrix,
};
