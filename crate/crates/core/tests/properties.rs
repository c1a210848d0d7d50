use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use phasecomp_core::linalg::{determinant, kron, max_abs_diff, random_complex_matrix, random_unitary, CMatrix, C64};
use phasecomp_core::nogo::{
    build_constraint_system, constraint_residual_matrix, constraint_matrix_direct,
    orthogonality_witness, verify_coefficient_lemma, CompressionScenario, PhaseVector, Verdict,
};
use phasecomp_core::protocols::{
    compress_two_equatorial, expected_compressed_state, extract_partially_known, phase_loss_scan,
    reconstruct_two_qubit, teleport, BellOutcome, PartiallyKnownPair, TeleportMode,
};
use phasecomp_core::rng::{stream, Stream};
use phasecomp_core::state::{
    apply_gate, fidelity, measure_site, outcome_probabilities, partial_trace, tensor, MeasureMode,
    StateVector, UnitaryMatrix,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_state<R: Rng>(rng: &mut R, d: usize, q: usize) -> StateVector {
    let len = d.pow(q as u32);
    let amps = (0..len)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::new(d, amps).unwrap()
}

fn random_qubit<R: Rng>(rng: &mut R) -> StateVector {
    random_state(rng, 2, 1)
}

#[test]
fn gates_preserve_norm() {
    let mut rng = stream(100, Stream::RandomUnitary);
    let shapes = [(2, 1), (2, 3), (2, 6), (3, 2), (3, 3), (4, 2), (4, 3), (8, 2)];
    for i in 0..1000 {
        let (d, q) = shapes[i % shapes.len()];
        let state = random_state(&mut rng, d, q);
        let mut sites: Vec<usize> = (0..q).collect();
        sites.shuffle(&mut rng);
        let k = rng.random_range(1..=q.min(2));
        let targets = &sites[..k];
        let gate = UnitaryMatrix::new(random_unitary(&mut rng, d.pow(k as u32))).unwrap();
        let out = apply_gate(&state, &gate, targets).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

/// Gates on contiguous ascending sites agree with `I ⊗ G ⊗ I` applied to
/// the full vector.
#[test]
fn gate_application_matches_kronecker_embedding() {
    let mut rng = stream(101, Stream::RandomUnitary);
    for &(d, q, first, k) in &[(2, 4, 1, 2), (3, 3, 0, 1), (2, 3, 2, 1), (3, 3, 1, 2)] {
        let state = random_state(&mut rng, d, q);
        let g = random_unitary(&mut rng, d.pow(k as u32));
        let before = CMatrix::identity(d.pow(first as u32), d.pow(first as u32));
        let rest = q - first - k;
        let after = CMatrix::identity(d.pow(rest as u32), d.pow(rest as u32));
        let full = kron(&kron(&before, &g), &after);
        let expected = &full * DVector::from_column_slice(state.amplitudes());
        let targets: Vec<usize> = (first..first + k).collect();
        let out = apply_gate(&state, &UnitaryMatrix::new(g).unwrap(), &targets).unwrap();
        for (a, b) in out.amplitudes().iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn measurement_is_complete() {
    let mut rng = stream(102, Stream::RandomUnitary);
    for &(d, q) in &[(2, 2), (2, 3), (3, 2), (2, 4), (3, 3)] {
        for _ in 0..10 {
            let state = random_state(&mut rng, d, q);
            for site in 0..q {
                let probs = outcome_probabilities(&state, site).unwrap();
                assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let keep: Vec<usize> = (0..q).filter(|&s| s != site).collect();
                let reduced = partial_trace(&state, &keep).unwrap();
                let dim = d.pow(q as u32 - 1);
                let mut mixture = CMatrix::zeros(dim, dim);
                for (k, &p) in probs.iter().enumerate() {
                    let rec = measure_site(&state, site, MeasureMode::Forced(k)).unwrap();
                    assert!((rec.probability - p).abs() < 1e-12);
                    assert!((rec.post_state.norm_sqr() - 1.0).abs() < 1e-12);
                    let v = DVector::from_column_slice(rec.post_state.amplitudes());
                    mixture += &v * v.adjoint() * C64::new(rec.probability, 0.0);
                }
                assert!(max_abs_diff(&mixture, reduced.matrix()) < 1e-10);
            }
        }
    }
}

#[test]
fn partial_trace_is_a_density_matrix() {
    let mut rng = stream(103, Stream::RandomUnitary);
    for _ in 0..50 {
        let state = random_state(&mut rng, 2, 4);
        let rho = partial_trace(&state, &[0, 2]).unwrap();
        assert!(rho.hermiticity_deviation() < 1e-12);
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-10);
    }
}

#[test]
fn determinant_is_multiplicative() {
    let mut rng = stream(104, Stream::RandomUnitary);
    for _ in 0..50 {
        let a = random_complex_matrix(&mut rng, 8, 8);
        let b = random_complex_matrix(&mut rng, 8, 8);
        let lhs = determinant(&(&a * &b)).unwrap().norm();
        let rhs = determinant(&a).unwrap().norm() * determinant(&b).unwrap().norm();
        assert!((lhs - rhs).abs() <= 1e-8 * rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), qa in 1usize..3, qb in 1usize..3, qc in 1usize..3) {
        let mut rng = stream(seed, Stream::RandomUnitary);
        let a = random_state(&mut rng, 2, qa);
        let b = random_state(&mut rng, 2, qb);
        let c = random_state(&mut rng, 2, qc);
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn fidelity_ignores_global_phase(seed in any::<u64>(), gamma in -10.0f64..10.0) {
        let mut rng = stream(seed, Stream::RandomUnitary);
        let a = random_state(&mut rng, 3, 2);
        let b = random_state(&mut rng, 3, 2);
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((fidelity(&a, &b.with_global_phase(gamma)).unwrap() - f).abs() < 1e-14);
        prop_assert!((fidelity(&a.with_global_phase(gamma), &b).unwrap() - f).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn residual_is_periodic_in_each_angle(seed in any::<u64>(), slot in 0usize..6, wraps in 1i32..4) {
        let mut rng = stream(seed, Stream::RandomUnitary);
        let s = CompressionScenario::new(3, 2, 1, 0).unwrap();
        let u = random_unitary(&mut rng, 9);
        let base = PhaseVector::random(3, 2, &mut rng).unwrap();
        let mut shifted = base.angles().to_vec();
        shifted[slot] += TAU * wraps as f64;
        let shifted = PhaseVector::wrapped(3, 2, shifted).unwrap();
        let r0 = constraint_residual_matrix(&u, &s, &[base]).unwrap();
        let r1 = constraint_residual_matrix(&u, &s, &[shifted]).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-12);
    }
}

fn grid20() -> Vec<f64> {
    (0..20).map(|k| k as f64 * TAU / 20.0).collect()
}

#[test]
fn compression_grid_branches() {
    for &p1 in &grid20() {
        for &p2 in &grid20() {
            for outcome in [0, 1] {
                let (rec, out) =
                    compress_two_equatorial(p1, p2, MeasureMode::Forced(outcome)).unwrap();
                assert!((rec.probability - 0.5).abs() < 1e-12);
                let expected = expected_compressed_state(p1, p2, outcome).unwrap();
                assert!(fidelity(&out, &expected).unwrap() >= 1.0 - 1e-12);
            }
        }
    }
}

#[test]
fn phase_loss_only_at_poles() {
    let pairs: Vec<(f64, f64)> = grid20()
        .iter()
        .flat_map(|&a| grid20().into_iter().map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .collect();
    for &(a, b) in &pairs {
        for outcome in [0, 1] {
            let scan = phase_loss_scan(&[0.0, PI, FRAC_PI_2], (a, b), outcome).unwrap();
            assert!((scan.points[0].fidelity - 1.0).abs() < 1e-12);
            assert!((scan.points[1].fidelity - 1.0).abs() < 1e-12);
            if (C64::from_polar(1.0, a) - C64::from_polar(1.0, b)).norm() > 1e-6 {
                assert!(scan.points[2].fidelity < 1.0);
            }
        }
    }
}

fn random_pair<R: Rng>(rng: &mut R) -> PartiallyKnownPair {
    let q = random_qubit(rng);
    PartiallyKnownPair::new(q.amplitudes()[0], q.amplitudes()[1]).unwrap()
}

#[test]
fn extract_then_reconstruct_is_identity() {
    let mut rng = stream(105, Stream::RandomUnitary);
    for _ in 0..100 {
        let pair = random_pair(&mut rng);
        let extracted = extract_partially_known(&pair);
        let qubit = measure_site(&extracted, 1, MeasureMode::Forced(0)).unwrap();
        assert!((qubit.probability - 1.0).abs() < 1e-12);
        let rebuilt = reconstruct_two_qubit(&qubit.post_state).unwrap();
        assert!(fidelity(&rebuilt, &pair.to_state()).unwrap() >= 1.0 - 1e-12);
    }
}

#[test]
fn teleportation_is_exact_on_every_branch() {
    let mut rng = stream(106, Stream::RandomUnitary);
    for _ in 0..100 {
        let q = random_qubit(&mut rng);
        for o in BellOutcome::ALL {
            let rec = teleport(&q, TeleportMode::Forced(o)).unwrap();
            assert!((fidelity(&rec.received, &q).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn constraint_paths_agree_everywhere() {
    for d in 2usize..=5 {
        for n in 1..=3 {
            if d.pow(n as u32) > 125 {
                continue;
            }
            let sys = build_constraint_system(d, n).unwrap();
            assert!(sys.path_difference < 1e-12, "d={d} n={n}");
            let size = sys.size();
            let gram = sys.matrix.adjoint() * &sys.matrix;
            let target = CMatrix::identity(size, size) * C64::new(size as f64, 0.0);
            assert!(max_abs_diff(&gram, &target) < 1e-8);
        }
    }
}

#[test]
fn random_coefficients_never_vanish_on_grid() {
    let mut rng = stream(107, Stream::Coefficients);
    for &(d, n) in &[(2, 2), (3, 2), (2, 3), (4, 1)] {
        let a = constraint_matrix_direct(d, n).unwrap();
        for _ in 0..50 {
            let x = DVector::from_fn(a.ncols(), |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let worst = (&a * &x).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(worst > 1e-8 * x.norm());
        }
        assert!(verify_coefficient_lemma(d, n, 1e-6, 3).unwrap().passes);
    }
}

#[test]
fn witness_verdict_tracks_n_greater_than_m() {
    for d in 2usize..=5 {
        for n in 1..=3 {
            if d.pow(n as u32) > 125 {
                continue;
            }
            for m in 0..=n + 1 {
                let s = CompressionScenario::new(d, n, m, 0).unwrap();
                let cert = orthogonality_witness(&s).unwrap();
                let expected = if n > m {
                    Verdict::Infeasible
                } else {
                    Verdict::FeasibleNotExcluded
                };
                assert_eq!(cert.verdict, expected, "d={d} n={n} m={m}");
            }
        }
    }
}
