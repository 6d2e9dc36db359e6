//! Per-term measurement circuits and the classical bit-string maps used by
//! the reweighted estimators.
//!
//! For a non-diagonal term `P` with X/Y support `S` the plan picks the star
//! qubit `q* = min S` and appends a Clifford suffix `V` with `V P V^dag = Z_q*`
//! that keeps every interfering pair `{a, a ^ x(P)}` on a pair of outcomes that
//! differ only in the star bit:
//!
//! 1. controlled-X (X letter) or controlled-Y (Y letter) from the star onto
//!    every other qubit of `S`;
//! 2. controlled-Z between every Z-letter qubit and the star;
//! 3. imaginary variant only: `S` on the star, so the circuit measures
//!    `i Z_q* P` instead of `P`;
//! 4. `H` on the star if its letter is X, `RX(pi/2)` if it is Y.
//!
//! After readout, `s' = star_collapse(s)` and `pair_map(P, s')` are the two
//! configurations whose amplitudes interfered in outcome `s`, and the term's
//! eigenvalue is `star_sign(s)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::bits::{bit, qubit_mask};
use crate::error::Result;
use crate::pauli::{Pauli, PauliString};
use crate::simulator::{Circuit, Gate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Real,
    Imag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub pauli: PauliString,
    /// `None` for diagonal (I/Z only) terms, which are read directly.
    pub star: Option<usize>,
    pub variant: Variant,
    pub suffix: Circuit,
}

impl MeasurementPlan {
    pub fn is_direct(&self) -> bool {
        self.star.is_none()
    }

    /// Runs the suffix on a copy of the ansatz state.
    pub fn measured_state(&self, ansatz_state: &StateVector) -> Result<StateVector> {
        let mut v = ansatz_state.clone();
        v.apply_circuit(&self.suffix)?;
        Ok(v)
    }
}

pub fn plan_measurement(p: &PauliString, variant: Variant) -> MeasurementPlan {
    let n = p.n();
    let mut suffix = Circuit::new(n).expect("pauli strings are non-empty");
    let support = p.xy_support();
    let Some(&star) = support.first() else {
        return MeasurementPlan { pauli: p.clone(), star: None, variant, suffix };
    };
    let mut push = |g| suffix.push(g).expect("plan gates use in-range qubits");
    for &j in &support[1..] {
        match p.letter(j) {
            Pauli::X => push(Gate::Cx { control: star, target: j }),
            Pauli::Y => push(Gate::Cy { control: star, target: j }),
            _ => unreachable!("support holds X/Y letters only"),
        }
    }
    for j in (0..n).filter(|&j| p.letter(j) == Pauli::Z) {
        push(Gate::Cz(j, star));
    }
    if variant == Variant::Imag {
        push(Gate::S(star));
    }
    match p.letter(star) {
        Pauli::X => push(Gate::H(star)),
        _ => push(Gate::Rx(star, FRAC_PI_2)),
    }
    MeasurementPlan { pauli: p.clone(), star: Some(star), variant, suffix }
}

/// Flips the bits of `s` on the X/Y support of `p`.
#[inline]
pub fn pair_map(p: &PauliString, s: usize) -> usize {
    s ^ p.x_mask()
}

/// Sets the star bit of `s` to zero.
#[inline]
pub fn star_collapse(s: usize, star: usize, n: usize) -> usize {
    s & !qubit_mask(n, star)
}

/// `(-1)^{s_star}`.
#[inline]
pub fn star_sign(s: usize, star: usize, n: usize) -> f64 {
    if bit(s, n, star) == 0 {
        1.0
    } else {
        -1.0
    }
}
