//! Standard qubit gates.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::linalg::{CMatrix, C64};
use crate::state::UnitaryMatrix;

fn real(rows: usize, entries: &[f64]) -> UnitaryMatrix {
    let m = CMatrix::from_row_iterator(rows, rows, entries.iter().map(|&x| C64::new(x, 0.0)));
    UnitaryMatrix::new(m).expect("standard gate is unitary")
}

pub fn pauli_x() -> UnitaryMatrix {
    real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_z() -> UnitaryMatrix {
    real(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> UnitaryMatrix {
    let h = FRAC_1_SQRT_2;
    real(2, &[h, h, h, -h])
}

/// Controlled-NOT; the first target is the control.
pub fn cnot() -> UnitaryMatrix {
    #[rustfmt::skip]
    let m = [
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
    ];
    real(4, &m)
}
