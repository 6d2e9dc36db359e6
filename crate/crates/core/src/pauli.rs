//! Pauli strings, Hamiltonians and their exact action on statevectors.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{parity_sign, qubit_mask};
use crate::error::{Error, Result};
use crate::simulator::StateVector;

const MERGE_DROP_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis; `letters[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidPauli(String::new()));
        }
        Ok(PauliString { letters })
    }

    pub fn identity(n: usize) -> Self {
        PauliString { letters: vec![Pauli::I; n] }
    }

    /// Builds a string from `(qubit, letter)` pairs, identity elsewhere.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for n={n}")));
            }
            letters[q] = p;
        }
        Self::new(letters)
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, q: usize) -> Pauli {
        self.letters[q]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// True when the string only contains `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Qubits carrying an `X` or `Y`, ascending.
    pub fn xy_support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .map(|(q, _)| q)
            .collect()
    }

    /// Index mask of the bit flips performed by the string (X/Y positions).
    pub fn x_mask(&self) -> usize {
        let n = self.n();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (q, _)| m | qubit_mask(n, q))
    }

    /// Index mask of the phase flips performed by the string (Y/Z positions).
    pub fn z_mask(&self) -> usize {
        let n = self.n();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::Y | Pauli::Z))
            .fold(0, |m, (q, _)| m | qubit_mask(n, q))
    }

    fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `(target, phase)` such that `P|s> = phase |target>`.
    ///
    /// With `P = i^{#Y} X^x Z^z` the phase is `i^{#Y} (-1)^{|s & z|}`.
    pub fn action_on_basis(&self, s: usize) -> (usize, Complex64) {
        let (xm, zm) = (self.x_mask(), self.z_mask());
        let phase = y_phase(self.y_count()) * parity_sign(s, zm);
        (s ^ xm, phase)
    }
}

fn y_phase(ny: usize) -> Complex64 {
    match ny % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Precomputed masks for applying one Pauli term to many amplitudes.
#[derive(Debug, Clone, Copy)]
struct CompiledTerm {
    coeff: f64,
    x_mask: usize,
    z_mask: usize,
    phase: Complex64,
}

/// `sum_P c_P P` with real coefficients, duplicate strings merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianRepr {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    /// Merges duplicate strings (summing coefficients, first occurrence keeps
    /// its position) and drops terms whose merged weight is below 1e-15.
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("hamiltonian needs at least one qubit".into()));
        }
        let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (c, p) in terms {
            if p.n() != n {
                return Err(Error::SizeMismatch { expected: n, actual: p.n() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient for {p}")));
            }
            match merged.iter_mut().find(|(_, q)| *q == p) {
                Some(entry) => entry.0 += c,
                None => merged.push((c, p)),
            }
        }
        merged.retain(|(c, _)| c.abs() >= MERGE_DROP_TOLERANCE);
        Ok(Hamiltonian { n, terms: merged })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// `sum |c_P|`.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Coefficient of the identity term, zero if absent.
    pub fn identity_coefficient(&self) -> f64 {
        self.terms.iter().filter(|(_, p)| p.is_identity()).map(|(c, _)| *c).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.is_diagonal())
    }

    /// Linear combination `a*self + b*other`.
    pub fn combine(&self, a: f64, other: &Hamiltonian, b: f64) -> Result<Hamiltonian> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, actual: other.n });
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, p)| (a * c, p.clone()))
            .chain(other.terms.iter().map(|(c, p)| (b * c, p.clone())))
            .collect();
        Hamiltonian::new(self.n, terms)
    }

    fn compiled(&self) -> Vec<CompiledTerm> {
        self.terms
            .iter()
            .map(|(c, p)| CompiledTerm {
                coeff: *c,
                x_mask: p.x_mask(),
                z_mask: p.z_mask(),
                phase: y_phase(p.y_count()),
            })
            .collect()
    }

    /// Matrix-free `out = H * input`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = 1usize << self.n;
        assert_eq!(input.len(), dim);
        assert_eq!(out.len(), dim);
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for t in self.compiled() {
            let scaled = t.phase * t.coeff;
            for (s, amp) in input.iter().enumerate() {
                out[s ^ t.x_mask] += scaled * parity_sign(s, t.z_mask) * amp;
            }
        }
    }

    /// Dense `2^n x 2^n` matrix, row-major. Only sensible for small `n`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = 1usize << self.n;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for t in self.compiled() {
            for s in 0..dim {
                let row = s ^ t.x_mask;
                m[row * dim + s] += t.phase * t.coeff * parity_sign(s, t.z_mask);
            }
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&HamiltonianRepr { n: self.n, terms: self.terms.clone() })
            .expect("hamiltonian serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: HamiltonianRepr =
            serde_json::from_str(text).map_err(|e| Error::json("hamiltonian", e))?;
        Hamiltonian::new(repr.n, repr.terms)
    }
}

impl Serialize for Hamiltonian {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        HamiltonianRepr { n: self.n, terms: self.terms.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Hamiltonian {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = HamiltonianRepr::deserialize(deserializer)?;
        Hamiltonian::new(repr.n, repr.terms).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            _ => Err(Error::InvalidArgument(format!("unknown boundary {s:?}"))),
        }
    }
}

/// Nearest-neighbour pairs of a chain.
pub fn chain_pairs(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n > 2 {
        pairs.push((n - 1, 0));
    }
    pairs
}

/// Transverse-field Ising chain `H = -sum Z_i Z_{i+1} - h sum X_i`.
pub fn build_tfim(n: usize, h: f64, boundary: Boundary) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("TFIM needs n >= 2, got {n}")));
    }
    if !h.is_finite() {
        return Err(Error::InvalidArgument("field strength must be finite".into()));
    }
    let mut terms = Vec::new();
    for (i, j) in chain_pairs(n, boundary) {
        terms.push((-1.0, PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)])?));
    }
    for i in 0..n {
        terms.push((-h, PauliString::from_sparse(n, &[(i, Pauli::X)])?));
    }
    Hamiltonian::new(n, terms)
}

/// `P|v>`.
pub fn apply_pauli(p: &PauliString, v: &StateVector) -> Result<StateVector> {
    if p.n() != v.n() {
        return Err(Error::SizeMismatch { expected: v.n(), actual: p.n() });
    }
    let (xm, zm) = (p.x_mask(), p.z_mask());
    let phase = y_phase(p.y_count());
    let mut out = vec![Complex64::new(0.0, 0.0); v.amps().len()];
    for (s, amp) in v.amps().iter().enumerate() {
        out[s ^ xm] = phase * parity_sign(s, zm) * amp;
    }
    Ok(StateVector::from_amps_unchecked(v.n(), out))
}

/// `<v|P|v>` as a complex number; the imaginary part is round-off only.
pub fn pauli_expectation(p: &PauliString, v: &StateVector) -> Result<Complex64> {
    if p.n() != v.n() {
        return Err(Error::SizeMismatch { expected: v.n(), actual: p.n() });
    }
    let (xm, zm) = (p.x_mask(), p.z_mask());
    let phase = y_phase(p.y_count());
    let amps = v.amps();
    let sum: Complex64 = amps
        .iter()
        .enumerate()
        .map(|(s, a)| amps[s ^ xm].conj() * a * parity_sign(s, zm))
        .sum();
    Ok(phase * sum)
}

/// `<v|H|v>` for a normalized `v`.
pub fn exact_expectation(h: &Hamiltonian, v: &StateVector) -> Result<f64> {
    if h.n() != v.n() {
        return Err(Error::SizeMismatch { expected: h.n(), actual: v.n() });
    }
    v.check_normalized()?;
    let mut energy = 0.0;
    for (c, p) in h.terms() {
        energy += c * pauli_expectation(p, v)?.re;
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::StateVector;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(n: usize, s: usize) -> StateVector {
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[s] = c(1.0, 0.0);
        StateVector::from_amps(n, amps).unwrap()
    }

    #[test]
    fn single_qubit_actions() {
        let zero = basis(1, 0);
        let z: PauliString = "Z".parse().unwrap();
        let x: PauliString = "X".parse().unwrap();
        let y: PauliString = "Y".parse().unwrap();
        assert_eq!(apply_pauli(&z, &zero).unwrap().amps(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(apply_pauli(&x, &zero).unwrap().amps(), &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(apply_pauli(&y, &zero).unwrap().amps(), &[c(0.0, 0.0), c(0.0, 1.0)]);
        let one = basis(1, 1);
        assert_eq!(apply_pauli(&y, &one).unwrap().amps(), &[c(0.0, -1.0), c(0.0, 0.0)]);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let p: PauliString = "XX".parse().unwrap();
        assert!(apply_pauli(&p, &basis(1, 0)).is_err());
    }

    #[test]
    fn tfim_term_counts() {
        assert_eq!(build_tfim(7, 1.0, Boundary::Open).unwrap().terms().len(), 13);
        assert_eq!(build_tfim(7, 1.0, Boundary::Periodic).unwrap().terms().len(), 14);
        let classical = build_tfim(2, 0.0, Boundary::Open).unwrap();
        assert_eq!(classical.terms(), &[(-1.0, "ZZ".parse().unwrap())]);
        assert!(matches!(build_tfim(1, 1.0, Boundary::Open), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn expectation_examples() {
        let zz = Hamiltonian::new(2, vec![(-1.0, "ZZ".parse().unwrap())]).unwrap();
        assert_eq!(exact_expectation(&zz, &basis(2, 0)).unwrap(), -1.0);

        let plus_zero = StateVector::from_amps(
            2,
            vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let x0 = Hamiltonian::new(2, vec![(1.0, "XI".parse().unwrap())]).unwrap();
        assert!((exact_expectation(&x0, &plus_zero).unwrap() - 1.0).abs() < 1e-15);

        let uniform = StateVector::from_amps(4, vec![c(0.25, 0.0); 16]).unwrap();
        let tfim = build_tfim(4, 1.0, Boundary::Open).unwrap();
        assert!((exact_expectation(&tfim, &uniform).unwrap() + 4.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let v = StateVector::from_amps_unchecked(1, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let h = Hamiltonian::new(1, vec![(1.0, "Z".parse().unwrap())]).unwrap();
        assert!(matches!(exact_expectation(&h, &v), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn duplicates_merge_and_cancel() {
        let h = Hamiltonian::new(
            2,
            vec![
                (1.0, "XZ".parse().unwrap()),
                (0.5, "ZZ".parse().unwrap()),
                (2.0, "XZ".parse().unwrap()),
                (-0.5, "ZZ".parse().unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h.terms(), &[(3.0, "XZ".parse().unwrap())]);
    }

    #[test]
    fn json_layout() {
        let h = build_tfim(2, 0.5, Boundary::Open).unwrap();
        let value: serde_json::Value = serde_json::from_str(&h.to_json()).unwrap();
        assert_eq!(value["n"], 2);
        assert_eq!(value["terms"][0], serde_json::json!([-1.0, "ZZ"]));
        assert_eq!(value["terms"][1], serde_json::json!([-0.5, "XI"]));
        assert_eq!(Hamiltonian::from_json(&h.to_json()).unwrap(), h);
    }

    #[test]
    fn dense_matrix_matches_matrix_free_action() {
        let h = Hamiltonian::new(
            2,
            vec![(0.3, "XY".parse().unwrap()), (-1.1, "ZI".parse().unwrap()), (0.7, "YZ".parse().unwrap())],
        )
        .unwrap();
        let dense = h.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert!((dense[i * 4 + j] - dense[j * 4 + i].conj()).norm() < 1e-15, "hermitian");
            }
        }
        let v: Vec<Complex64> = (0..4).map(|k| c(k as f64 * 0.1, 1.0 - k as f64 * 0.2)).collect();
        let mut out = vec![c(0.0, 0.0); 4];
        h.apply_into(&v, &mut out);
        for i in 0..4 {
            let row: Complex64 = (0..4).map(|j| dense[i * 4 + j] * v[j]).sum();
            assert!((row - out[i]).norm() < 1e-14);
        }
    }
}
