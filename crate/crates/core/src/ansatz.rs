//! Hardware-efficient trial circuit: per layer an RX wall followed by RZZ on
//! each nearest-neighbour pair.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{chain_pairs, Boundary};
use crate::simulator::{run_circuit, Circuit, Gate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n: usize,
    pub layers: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl AnsatzSpec {
    pub fn new(n: usize, layers: usize, boundary: Boundary) -> Result<Self> {
        let spec = AnsatzSpec { n, layers, boundary };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidArgument("ansatz needs at least one layer".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidSize(format!("ansatz needs n >= 2, got {}", self.n)));
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        chain_pairs(self.n, self.boundary)
    }

    /// `layers * (n + #pairs)`.
    pub fn param_count(&self) -> usize {
        self.layers * (self.n + self.pairs().len())
    }

    /// Small uniform angles in `[-0.1, 0.1]`.
    pub fn initial_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.param_count()).map(|_| rng.random_range(-0.1..=0.1)).collect()
    }
}

pub fn build_ansatz(spec: &AnsatzSpec, params: &[f64]) -> Result<Circuit> {
    spec.validate()?;
    if params.len() != spec.param_count() {
        return Err(Error::ParamMismatch { expected: spec.param_count(), actual: params.len() });
    }
    let pairs = spec.pairs();
    let mut circuit = Circuit::new(spec.n)?;
    let mut theta = params.iter().copied();
    for _ in 0..spec.layers {
        for q in 0..spec.n {
            circuit.push(Gate::Rx(q, theta.next().unwrap()))?;
        }
        for &(a, b) in &pairs {
            circuit.push(Gate::Rzz(a, b, theta.next().unwrap()))?;
        }
    }
    Ok(circuit)
}

/// Convenience: the ansatz state `U(theta)|0>`.
pub fn ansatz_state(spec: &AnsatzSpec, params: &[f64]) -> Result<StateVector> {
    Ok(run_circuit(&build_ansatz(spec, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_angles_leave_vacuum() {
        let spec = AnsatzSpec::new(2, 1, Boundary::Open).unwrap();
        let v = ansatz_state(&spec, &[0.0; 3]).unwrap();
        assert_eq!(v.amps()[0].re, 1.0);
        assert!(v.amps()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn pi_rotations_flip_both_qubits() {
        let spec = AnsatzSpec::new(2, 1, Boundary::Open).unwrap();
        let v = ansatz_state(&spec, &[PI, PI, 0.0]).unwrap();
        let p = v.probabilities();
        assert!((p[0b11] - 1.0).abs() < 1e-15);
        // RX(pi) = -iX on each qubit: (-i)^2 = -1.
        assert!((v.amps()[0b11].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(AnsatzSpec::new(7, 2, Boundary::Open).unwrap().param_count(), 26);
        for n in 2..=14 {
            for layers in 1..=4 {
                let open = AnsatzSpec::new(n, layers, Boundary::Open).unwrap();
                assert_eq!(open.param_count(), layers * (2 * n - 1));
                let circuit = build_ansatz(&open, &vec![0.1; open.param_count()]).unwrap();
                assert_eq!(circuit.len(), open.param_count());
            }
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let spec = AnsatzSpec::new(3, 1, Boundary::Open).unwrap();
        assert!(matches!(build_ansatz(&spec, &[0.0; 4]), Err(Error::ParamMismatch { expected: 5, actual: 4 })));
        assert!(AnsatzSpec::new(3, 0, Boundary::Open).is_err());
    }
}
