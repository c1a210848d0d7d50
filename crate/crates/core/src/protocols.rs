//! Concrete circuits on equatorial and partially known states.
//!
//! Qubit indices are 0-based: "the first qubit" is site 0.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{cnot, hadamard, pauli_x, pauli_z};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::state::{
    apply_gate, fidelity, measure_site, tensor, MeasureMode, MeasurementRecord, StateVector,
    UnitaryMatrix,
};

/// Tolerance on `|α|² + |β|² = 1` for [`PartiallyKnownPair`].
pub const PAIR_NORM_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_angle(name: &'static str, value: f64) -> Result<f64> {
    if !(0.0..TAU).contains(&value) {
        return Err(Error::out_of_range(name, value, "[0, 2π)"));
    }
    Ok(value)
}

/// Phases `φ_0 … φ_{d-1}` of the equatorial qudit `Σ_j e^{iφ_j}|j⟩ / √d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquatorialSpec {
    d: usize,
    phases: Vec<f64>,
}

impl EquatorialSpec {
    pub fn new(d: usize, phases: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::out_of_range("d", d, ">= 2"));
        }
        if phases.len() != d {
            return Err(Error::Dimension(format!(
                "{} phases given for d = {d}",
                phases.len()
            )));
        }
        for &p in &phases {
            check_angle("phase", p)?;
        }
        Ok(Self { d, phases })
    }

    /// Qubit `(|0⟩ + e^{iφ}|1⟩)/√2`.
    pub fn qubit(phi: f64) -> Result<Self> {
        Self::new(2, vec![0.0, phi])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

pub fn equatorial_state(spec: &EquatorialSpec) -> StateVector {
    let amps = spec
        .phases
        .iter()
        .map(|&p| C64::from_polar(1.0, p))
        .collect();
    StateVector::new(spec.d, amps).expect("equatorial amplitudes have unit modulus")
}

/// `cos(θ/2)|0⟩ + sin(θ/2)e^{iφ}|1⟩` with `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
pub fn general_qubit(theta: f64, phi: f64) -> Result<StateVector> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::out_of_range("theta", theta, "[0, π]"));
    }
    check_angle("phi", phi)?;
    StateVector::qubit(
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    )
}

/// The rotation `(1/√2)[[1, −1], [−i, −i]]` taking the equator of the
/// Bloch sphere to a meridian: `U_r(|0⟩ + e^{iφ}|1⟩)/√2` equals
/// `sin(φ/2)|0⟩ + cos(φ/2)|1⟩` up to the global phase `−i·e^{iφ/2}`.
pub fn ur_gate() -> UnitaryMatrix {
    let h = FRAC_1_SQRT_2;
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
            C64::new(0.0, -h),
            C64::new(0.0, -h),
        ],
    );
    UnitaryMatrix::new(m).expect("U_r is unitary")
}

/// State predicted for the retrieved qubit after measuring the second qubit:
/// outcome 0 gives `sin(φ₁/2)|0⟩ + cos(φ₁/2)e^{iφ₂}|1⟩`, outcome 1 gives
/// `sin(φ₁/2)e^{iφ₂}|0⟩ + cos(φ₁/2)|1⟩`.
pub fn expected_compressed_state(phi1: f64, phi2: f64, outcome: usize) -> Result<StateVector> {
    let (s, c) = ((phi1 / 2.0).sin(), (phi1 / 2.0).cos());
    let e = C64::from_polar(1.0, phi2);
    match outcome {
        0 => StateVector::qubit(C64::new(s, 0.0), e * c),
        1 => StateVector::qubit(e * s, C64::new(c, 0.0)),
        _ => Err(Error::out_of_range("outcome", outcome, "0..2")),
    }
}

/// Rotate qubit 0 of `|ψ₁⟩|ψ₂⟩` by [`ur_gate`], apply CNOT (control 0,
/// target 1) and measure qubit 1. Returns the measurement and the retrieved
/// single-qubit state.
pub fn compress_two_equatorial(
    phi1: f64,
    phi2: f64,
    mode: MeasureMode,
) -> Result<(MeasurementRecord, StateVector)> {
    let psi1 = equatorial_state(&EquatorialSpec::qubit(check_angle("phi1", phi1)?)?);
    let psi2 = equatorial_state(&EquatorialSpec::qubit(check_angle("phi2", phi2)?)?);
    let state = tensor(&psi1, &psi2)?;
    let state = apply_gate(&state, &ur_gate(), &[0])?;
    let state = apply_gate(&state, &cnot(), &[0, 1])?;
    let record = measure_site(&state, 1, mode)?;
    let retrieved = record.post_state.clone();
    Ok((record, retrieved))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLossPoint {
    pub phi1: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLossScan {
    pub outcome: usize,
    pub phi2_pair: (f64, f64),
    pub points: Vec<PhaseLossPoint>,
}

/// For each `φ₁` in the grid, the fidelity between the qubits retrieved with
/// `φ₂ = a` and `φ₂ = b`. A value of 1 means `φ₂` left no trace.
///
/// Grid angles are reduced modulo 2π, so a closed grid ending at 2π is
/// accepted.
pub fn phase_loss_scan(
    phi1_grid: &[f64],
    phi2_pair: (f64, f64),
    outcome: usize,
) -> Result<PhaseLossScan> {
    if phi1_grid.is_empty() {
        return Err(Error::Invalid("phi1 grid is empty".into()));
    }
    if outcome > 1 {
        return Err(Error::out_of_range("outcome", outcome, "0..2"));
    }
    let (a, b) = phi2_pair;
    check_angle("phi2_a", a)?;
    check_angle("phi2_b", b)?;
    if a == b {
        return Err(Error::Invalid("phi2 pair must be distinct".into()));
    }
    let mut points = Vec::with_capacity(phi1_grid.len());
    for &raw in phi1_grid {
        if !raw.is_finite() {
            return Err(Error::out_of_range("phi1", raw, "finite"));
        }
        let phi1 = raw.rem_euclid(TAU);
        let (_, sa) = compress_two_equatorial(phi1, a, MeasureMode::Forced(outcome))?;
        let (_, sb) = compress_two_equatorial(phi1, b, MeasureMode::Forced(outcome))?;
        points.push(PhaseLossPoint {
            phi1: raw,
            fidelity: fidelity(&sa, &sb)?,
        });
    }
    Ok(PhaseLossScan {
        outcome,
        phi2_pair,
        points,
    })
}

/// `α|00⟩ + β|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartiallyKnownPair {
    alpha: C64,
    beta: C64,
}

impl PartiallyKnownPair {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > PAIR_NORM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "|α|² + |β|² = {norm} is not 1"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// `cos(θ/2)|00⟩ + sin(θ/2)e^{iφ}|11⟩`.
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        Self::new(
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        )
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::new(2, vec![self.alpha, ZERO, ZERO, self.beta])
            .expect("pair is normalised")
    }
}

/// CNOT (control 0, target 1) on `α|00⟩ + β|11⟩`, giving `(α|0⟩ + β|1⟩)|0⟩`.
pub fn extract_partially_known(pair: &PartiallyKnownPair) -> StateVector {
    apply_gate(&pair.to_state(), &cnot(), &[0, 1]).expect("two-qubit CNOT")
}

/// Outcomes of the sender's Bell measurement: `(input qubit, sender EPR half)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellOutcome {
    pub input: usize,
    pub epr: usize,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome { input: 0, epr: 0 },
        BellOutcome { input: 0, epr: 1 },
        BellOutcome { input: 1, epr: 0 },
        BellOutcome { input: 1, epr: 1 },
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleportMode {
    Sampled { seed: u64 },
    Forced(BellOutcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportRecord {
    pub outcome: BellOutcome,
    /// Probability of the observed Bell outcome (1/4 for every branch).
    pub probability: f64,
    pub received: StateVector,
}

fn require_single_qubit(state: &StateVector) -> Result<()> {
    if state.dim() != 2 || state.num_sites() != 1 {
        return Err(Error::Dimension(format!(
            "expected a single qubit, got d={} q={}",
            state.dim(),
            state.num_sites()
        )));
    }
    Ok(())
}

/// Standard one-EPR-pair teleportation. Site 0 holds the input, sites 1 and
/// 2 the pair `(|00⟩ + |11⟩)/√2`; site 2 belongs to the receiver.
pub fn teleport(state: &StateVector, mode: TeleportMode) -> Result<TeleportRecord> {
    require_single_qubit(state)?;
    let epr = StateVector::new(2, vec![ONE, ZERO, ZERO, ONE])?;
    let joint = tensor(state, &epr)?;
    let joint = apply_gate(&joint, &cnot(), &[0, 1])?;
    let joint = apply_gate(&joint, &hadamard(), &[0])?;

    let (first, second) = match mode {
        TeleportMode::Forced(o) => (MeasureMode::Forced(o.input), MeasureMode::Forced(o.epr)),
        TeleportMode::Sampled { seed } => (
            MeasureMode::Sampled { seed },
            MeasureMode::Sampled {
                seed: seed
                    .wrapping_mul(0x5851_F42D_4C95_7F2D)
                    .wrapping_add(0x1405_7B7E_F767_814F),
            },
        ),
    };
    let m_input = measure_site(&joint, 0, first)?;
    let m_epr = measure_site(&m_input.post_state, 0, second)?;
    let mut received = m_epr.post_state;
    if m_epr.outcome == 1 {
        received = apply_gate(&received, &pauli_x(), &[0])?;
    }
    if m_input.outcome == 1 {
        received = apply_gate(&received, &pauli_z(), &[0])?;
    }
    Ok(TeleportRecord {
        outcome: BellOutcome {
            input: m_input.outcome,
            epr: m_epr.outcome,
        },
        probability: m_input.probability * m_epr.probability,
        received,
    })
}

/// Teleports a qubit with the Bell outcome drawn from `seed`.
pub fn teleport_qubit(state: &StateVector, seed: u64) -> Result<StateVector> {
    Ok(teleport(state, TeleportMode::Sampled { seed })?.received)
}

/// Appends `|0⟩` and applies CNOT (control 0, target 1):
/// `α|0⟩ + β|1⟩ ↦ α|00⟩ + β|11⟩`.
pub fn reconstruct_two_qubit(qubit: &StateVector) -> Result<StateVector> {
    require_single_qubit(qubit)?;
    let padded = tensor(qubit, &StateVector::zeros(2, 1)?)?;
    apply_gate(&padded, &cnot(), &[0, 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_unitary;
    use crate::state::{measure_site, outcome_probabilities};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    const EXACT: f64 = 1e-12;

    fn qubit(a: C64, b: C64) -> StateVector {
        StateVector::qubit(a, b).unwrap()
    }

    fn real_qubit(a: f64, b: f64) -> StateVector {
        qubit(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    #[test]
    fn equatorial_examples() {
        let plus = equatorial_state(&EquatorialSpec::qubit(0.0).unwrap());
        assert!(fidelity(&plus, &real_qubit(1.0, 1.0)).unwrap() > 1.0 - EXACT);
        let minus = equatorial_state(&EquatorialSpec::qubit(PI).unwrap());
        let expected = real_qubit(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        for (a, b) in minus.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let third = TAU / 3.0;
        let s = equatorial_state(&EquatorialSpec::new(3, vec![0.0, third, 2.0 * third]).unwrap());
        let omega = C64::from_polar(1.0, third);
        let r3 = 1.0 / 3f64.sqrt();
        let expected = [C64::new(r3, 0.0), omega * r3, omega * omega * r3];
        for (a, b) in s.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn equatorial_spec_validation() {
        assert!(EquatorialSpec::new(2, vec![0.0]).is_err());
        assert!(EquatorialSpec::new(2, vec![0.0, TAU]).is_err());
        assert!(EquatorialSpec::new(2, vec![-0.1, 0.0]).is_err());
        assert!(EquatorialSpec::new(1, vec![0.0]).is_err());
    }

    #[test]
    fn general_qubit_matches_bloch_form() {
        let s = general_qubit(FRAC_PI_3, FRAC_PI_4).unwrap();
        assert!((s.amplitudes()[0].re - (FRAC_PI_3 / 2.0).cos()).abs() < 1e-15);
        assert!((s.amplitudes()[1] - C64::from_polar(0.5, FRAC_PI_4)).norm() < 1e-15);
        assert!(general_qubit(4.0, 0.0).is_err());
    }

    #[test]
    fn ur_examples() {
        let u = ur_gate();
        assert!(is_unitary(u.matrix(), 1e-12).unwrap());
        let rotated = |phi: f64| {
            let psi = equatorial_state(&EquatorialSpec::qubit(phi).unwrap());
            apply_gate(&psi, &u, &[0]).unwrap()
        };
        let out = rotated(FRAC_PI_2);
        let target = real_qubit(FRAC_PI_4.sin(), FRAC_PI_4.cos());
        assert!(fidelity(&out, &target).unwrap() > 1.0 - EXACT);
        assert!(fidelity(&rotated(0.0), &real_qubit(0.0, 1.0)).unwrap() > 1.0 - EXACT);
        assert!(fidelity(&rotated(PI), &real_qubit(1.0, 0.0)).unwrap() > 1.0 - EXACT);
    }

    #[test]
    fn ur_global_phase_is_minus_i_exp_half_phi() {
        let phi = 1.234;
        let psi = equatorial_state(&EquatorialSpec::qubit(phi).unwrap());
        let out = apply_gate(&psi, &ur_gate(), &[0]).unwrap();
        let phase = C64::new(0.0, -1.0) * C64::from_polar(1.0, phi / 2.0);
        let expected = [phase * (phi / 2.0).sin(), phase * (phi / 2.0).cos()];
        for (a, b) in out.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn pre_cnot_state_expansion() {
        // (U_r|ψ₁⟩)|ψ₂⟩ with φ₁ = π/2, φ₂ = 0 expands to
        // (s|0⟩ + c|1⟩)(|0⟩ + |1⟩)/√2 with s = c = 1/√2.
        let psi1 = equatorial_state(&EquatorialSpec::qubit(FRAC_PI_2).unwrap());
        let psi2 = equatorial_state(&EquatorialSpec::qubit(0.0).unwrap());
        let s = tensor(&apply_gate(&psi1, &ur_gate(), &[0]).unwrap(), &psi2).unwrap();
        let expected = StateVector::new(2, vec![C64::new(0.5, 0.0); 4]).unwrap();
        assert!(fidelity(&s, &expected).unwrap() > 1.0 - EXACT);
    }

    #[test]
    fn compression_examples() {
        let (rec, out) = compress_two_equatorial(FRAC_PI_2, PI, MeasureMode::Forced(0)).unwrap();
        assert!((rec.probability - 0.5).abs() < EXACT);
        let target = real_qubit(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        assert!(fidelity(&out, &target).unwrap() > 1.0 - EXACT);

        for k in 0..12 {
            let phi2 = k as f64 * TAU / 12.0;
            let (_, out) = compress_two_equatorial(0.0, phi2, MeasureMode::Forced(1)).unwrap();
            assert!(fidelity(&out, &real_qubit(0.0, 1.0)).unwrap() > 1.0 - EXACT);
        }

        let (_, out) = compress_two_equatorial(PI, FRAC_PI_3, MeasureMode::Forced(0)).unwrap();
        assert!(fidelity(&out, &real_qubit(1.0, 0.0)).unwrap() > 1.0 - EXACT);

        assert!(compress_two_equatorial(TAU, 0.0, MeasureMode::Forced(0)).is_err());
    }

    #[test]
    fn compression_branches_are_even() {
        // Branch norms of the post-CNOT state are 1/2 for any phases.
        let psi = |p| equatorial_state(&EquatorialSpec::qubit(p).unwrap());
        for (p1, p2) in [(0.3, 2.0), (1.7, 5.1), (PI, 0.0)] {
            let s = tensor(&apply_gate(&psi(p1), &ur_gate(), &[0]).unwrap(), &psi(p2)).unwrap();
            let s = apply_gate(&s, &cnot(), &[0, 1]).unwrap();
            let probs = outcome_probabilities(&s, 1).unwrap();
            assert!((probs[0] - 0.5).abs() < EXACT && (probs[1] - 0.5).abs() < EXACT);
        }
    }

    #[test]
    fn sampled_compression_matches_prediction() {
        for seed in 0..10 {
            let (rec, out) =
                compress_two_equatorial(1.1, 4.2, MeasureMode::Sampled { seed }).unwrap();
            let expected = expected_compressed_state(1.1, 4.2, rec.outcome).unwrap();
            assert!(fidelity(&out, &expected).unwrap() > 1.0 - EXACT);
        }
    }

    #[test]
    fn phase_loss_examples() {
        for (a, b) in [(0.0, 1.0), (0.5, 4.0), (2.0, 6.0)] {
            for outcome in [0, 1] {
                let scan = phase_loss_scan(&[0.0, PI], (a, b), outcome).unwrap();
                for p in &scan.points {
                    assert!((p.fidelity - 1.0).abs() < EXACT);
                }
            }
        }
        let scan = phase_loss_scan(&[FRAC_PI_2], (0.0, PI), 0).unwrap();
        assert!(scan.points[0].fidelity.abs() < EXACT);
    }

    #[test]
    fn phase_loss_validation() {
        assert!(phase_loss_scan(&[], (0.0, 1.0), 0).is_err());
        assert!(phase_loss_scan(&[0.0], (1.0, 1.0), 0).is_err());
        assert!(phase_loss_scan(&[0.0], (0.0, 1.0), 2).is_err());
        let closed = phase_loss_scan(&[TAU], (0.0, 1.0), 0).unwrap();
        assert!((closed.points[0].fidelity - 1.0).abs() < EXACT);
        assert_eq!(closed.points[0].phi1, TAU);
    }

    #[test]
    fn extract_examples() {
        let pair = PartiallyKnownPair::new(ONE, ZERO).unwrap();
        assert_eq!(extract_partially_known(&pair), StateVector::basis(2, 2, 0).unwrap());

        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let out = extract_partially_known(&PartiallyKnownPair::new(h, h).unwrap());
        let plus0 = tensor(&real_qubit(1.0, 1.0), &StateVector::zeros(2, 1).unwrap()).unwrap();
        assert!(fidelity(&out, &plus0).unwrap() > 1.0 - EXACT);

        let pair = PartiallyKnownPair::from_angles(FRAC_PI_3, FRAC_PI_4).unwrap();
        let out = extract_partially_known(&pair);
        let second = measure_site(&out, 1, MeasureMode::Forced(0)).unwrap();
        assert!((second.probability - 1.0).abs() < EXACT);
        let bloch = general_qubit(FRAC_PI_3, FRAC_PI_4).unwrap();
        assert!(fidelity(&second.post_state, &bloch).unwrap() > 1.0 - EXACT);
    }

    #[test]
    fn pair_validation() {
        assert!(PartiallyKnownPair::new(ONE, ONE).is_err());
    }

    #[test]
    fn teleport_examples() {
        let zero = StateVector::zeros(2, 1).unwrap();
        let plus = real_qubit(1.0, 1.0);
        let odd = qubit(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        for input in [&zero, &plus, &odd] {
            for o in BellOutcome::ALL {
                let rec = teleport(input, TeleportMode::Forced(o)).unwrap();
                assert_eq!(rec.outcome, o);
                assert!((rec.probability - 0.25).abs() < EXACT);
                assert!(fidelity(&rec.received, input).unwrap() > 1.0 - EXACT);
            }
        }
        let a = teleport_qubit(&odd, 5).unwrap();
        assert_eq!(a, teleport_qubit(&odd, 5).unwrap());
        assert!(teleport_qubit(&StateVector::zeros(2, 2).unwrap(), 0).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let one = StateVector::basis(2, 1, 1).unwrap();
        assert_eq!(reconstruct_two_qubit(&one).unwrap(), StateVector::basis(2, 2, 3).unwrap());
        let bell = StateVector::new(2, vec![ONE, ZERO, ZERO, ONE]).unwrap();
        let out = reconstruct_two_qubit(&real_qubit(1.0, 1.0)).unwrap();
        assert!(fidelity(&out, &bell).unwrap() > 1.0 - EXACT);
    }

    #[test]
    fn end_to_end_pipeline() {
        let pair = PartiallyKnownPair::new(
            C64::new((PI / 6.0).cos(), 0.0),
            C64::from_polar((PI / 6.0).sin(), PI / 5.0),
        )
        .unwrap();
        let extracted = extract_partially_known(&pair);
        let sent = measure_site(&extracted, 1, MeasureMode::Forced(0)).unwrap().post_state;
        for o in BellOutcome::ALL {
            let received = teleport(&sent, TeleportMode::Forced(o)).unwrap().received;
            let rebuilt = reconstruct_two_qubit(&received).unwrap();
            assert!(fidelity(&rebuilt, &pair.to_state()).unwrap() > 1.0 - EXACT);
        }
    }
}
