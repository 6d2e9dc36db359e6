//! Dense statevector engine: gates, circuits, Born probabilities and seeded
//! shot sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bits::{format_bits, parse_bits, qubit_mask, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn from_amps(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidSize(format!("{} amplitudes for {n} qubits", amps.len())));
        }
        let v = StateVector { n, amps };
        v.check_normalized()?;
        Ok(v)
    }

    /// Skips the norm check; used for intermediate, possibly unnormalized
    /// vectors such as `D_f |psi>`.
    pub fn from_amps_unchecked(n: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        StateVector { n, amps }
    }

    /// Scales arbitrary amplitudes to unit norm.
    pub fn normalized(n: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amps(n, amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(())
    }

    /// Born distribution `q(s) = |<s|v>|^2`, indexed by bit string.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        gate.apply(self.n, &mut self.amps);
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, actual: circuit.n() });
        }
        for g in circuit.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidSize(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

/// Gate set of the simulator. Rotations follow `R_P(t) = exp(-i t P / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    S(usize),
    Sdg(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Rzz(usize, usize, f64),
    Cx { control: usize, target: usize },
    Cy { control: usize, target: usize },
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Rx(q, _) | Gate::Rz(q, _) => {
                vec![q]
            }
            Gate::Rzz(a, b, _) | Gate::Cz(a, b) => vec![a, b],
            Gate::Cx { control, target } | Gate::Cy { control, target } => vec![control, target],
        }
    }

    fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = Complex64::new;
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Some(match *self {
            Gate::H(_) => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
            Gate::X(_) => [[z, one], [one, z]],
            Gate::S(_) => [[one, z], [z, c(0.0, 1.0)]],
            Gate::Sdg(_) => [[one, z], [z, c(0.0, -1.0)]],
            Gate::Rx(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Rz(_, t) => [[Complex64::from_polar(1.0, -t / 2.0), z], [z, Complex64::from_polar(1.0, t / 2.0)]],
            _ => return None,
        })
    }

    /// Dense matrix in the basis of [`Gate::qubits`], first listed qubit most
    /// significant. Row-major, dimension 2 or 4.
    pub fn matrix(&self) -> Vec<Complex64> {
        if let Some(m) = self.single_qubit_matrix() {
            return vec![m[0][0], m[0][1], m[1][0], m[1][1]];
        }
        let c = Complex64::new;
        let mut m = vec![c(0.0, 0.0); 16];
        match *self {
            Gate::Rzz(_, _, t) => {
                for k in 0..4usize {
                    let same = k == 0 || k == 3;
                    m[k * 4 + k] = Complex64::from_polar(1.0, if same { -t / 2.0 } else { t / 2.0 });
                }
            }
            Gate::Cz(..) => {
                for k in 0..4usize {
                    m[k * 4 + k] = c(if k == 3 { -1.0 } else { 1.0 }, 0.0);
                }
            }
            Gate::Cx { .. } => {
                m[0] = c(1.0, 0.0);
                m[5] = c(1.0, 0.0);
                m[2 * 4 + 3] = c(1.0, 0.0);
                m[3 * 4 + 2] = c(1.0, 0.0);
            }
            Gate::Cy { .. } => {
                m[0] = c(1.0, 0.0);
                m[5] = c(1.0, 0.0);
                m[2 * 4 + 3] = c(0.0, -1.0);
                m[3 * 4 + 2] = c(0.0, 1.0);
            }
            _ => unreachable!(),
        }
        m
    }

    pub(crate) fn apply(&self, n: usize, amps: &mut [Complex64]) {
        if let Some(m) = self.single_qubit_matrix() {
            let q = self.qubits()[0];
            let mask = qubit_mask(n, q);
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let (a0, a1) = (amps[i], amps[i | mask]);
                    amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
            return;
        }
        match *self {
            Gate::Rzz(a, b, t) => {
                let (ma, mb) = (qubit_mask(n, a), qubit_mask(n, b));
                let same = Complex64::from_polar(1.0, -t / 2.0);
                let diff = Complex64::from_polar(1.0, t / 2.0);
                for (i, amp) in amps.iter_mut().enumerate() {
                    let odd = ((i & ma) != 0) != ((i & mb) != 0);
                    *amp *= if odd { diff } else { same };
                }
            }
            Gate::Cz(a, b) => {
                let both = qubit_mask(n, a) | qubit_mask(n, b);
                for (i, amp) in amps.iter_mut().enumerate() {
                    if i & both == both {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cx { control, target } | Gate::Cy { control, target } => {
                let (mc, mt) = (qubit_mask(n, control), qubit_mask(n, target));
                let is_y = matches!(self, Gate::Cy { .. });
                for i in 0..amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        let (a0, a1) = (amps[i], amps[i | mt]);
                        if is_y {
                            // Y = [[0, -i], [i, 0]]
                            amps[i] = Complex64::new(0.0, -1.0) * a1;
                            amps[i | mt] = Complex64::new(0.0, 1.0) * a0;
                        } else {
                            amps[i] = a1;
                            amps[i | mt] = a0;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Circuit { n, gates: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qubits = gate.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n) {
            return Err(Error::InvalidArgument(format!("gate {gate:?} targets qubit {q} >= {}", self.n)));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidArgument(format!("gate {gate:?} repeats a qubit")));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, actual: other.n });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }
}

/// `(prod gates) |0...0>`.
pub fn run_circuit(circuit: &Circuit) -> StateVector {
    let mut v = StateVector::zero(circuit.n()).expect("circuit size validated on construction");
    for g in circuit.gates() {
        v.apply_gate(g);
    }
    v
}

/// Which measurement circuit produced a set of outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CircuitTag {
    /// The bare ansatz read out in the computational basis.
    Ansatz,
    /// Measurement circuit for the real part of a Pauli term.
    Real(PauliString),
    /// Measurement circuit for the imaginary part of a Pauli term.
    Imag(PauliString),
}

impl fmt::Display for CircuitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitTag::Ansatz => write!(f, "ansatz"),
            CircuitTag::Real(p) => write!(f, "real:{p}"),
            CircuitTag::Imag(p) => write!(f, "imag:{p}"),
        }
    }
}

impl FromStr for CircuitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ansatz" {
            return Ok(CircuitTag::Ansatz);
        }
        match s.split_once(':') {
            Some(("real", p)) => Ok(CircuitTag::Real(p.parse()?)),
            Some(("imag", p)) => Ok(CircuitTag::Imag(p.parse()?)),
            _ => Err(Error::InvalidArgument(format!("unknown circuit tag {s:?}"))),
        }
    }
}

impl Serialize for CircuitTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CircuitTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Shot histogram of one measurement circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    shots: u64,
    counts: BTreeMap<usize, u64>,
    tag: CircuitTag,
}

#[derive(Serialize, Deserialize)]
struct SampleSetRepr {
    tag: CircuitTag,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl SampleSet {
    pub fn from_counts(n: usize, tag: CircuitTag, counts: BTreeMap<usize, u64>) -> Result<Self> {
        check_qubits(n)?;
        let shots: u64 = counts.values().sum();
        if shots == 0 {
            return Err(Error::InvalidArgument("sample set needs at least one shot".into()));
        }
        if let Some(&s) = counts.keys().find(|&&s| s >= 1 << n) {
            return Err(Error::InvalidBits(format!("index {s} out of range for {n} qubits")));
        }
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        Ok(SampleSet { n, shots, counts, tag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn tag(&self) -> &CircuitTag {
        &self.tag
    }

    pub fn with_tag(mut self, tag: CircuitTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn to_json(&self) -> String {
        let repr = SampleSetRepr {
            tag: self.tag.clone(),
            shots: self.shots,
            counts: self.counts.iter().map(|(&s, &c)| (format_bits(s, self.n), c)).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("sample set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: SampleSetRepr = serde_json::from_str(text).map_err(|e| Error::json("sample set", e))?;
        let mut n = None;
        let mut counts = BTreeMap::new();
        for (key, c) in repr.counts {
            let (s, len) = parse_bits(&key)?;
            if *n.get_or_insert(len) != len {
                return Err(Error::InvalidBits(key));
            }
            *counts.entry(s).or_insert(0) += c;
        }
        let n = n.ok_or_else(|| Error::InvalidArgument("sample set has no counts".into()))?;
        let set = SampleSet::from_counts(n, repr.tag, counts)?;
        if set.shots != repr.shots {
            return Err(Error::InvalidArgument(format!(
                "shots field {} disagrees with counts total {}",
                repr.shots, set.shots
            )));
        }
        Ok(set)
    }
}

/// Draws `shots` i.i.d. outcomes from the Born distribution of `v`.
///
/// Small budgets use inverse-CDF lookup per shot; budgets of at least `2^n`
/// draw the whole histogram at once as a multinomial via conditional
/// binomials.
pub fn sample<R: Rng + ?Sized>(v: &StateVector, shots: u64, tag: CircuitTag, rng: &mut R) -> Result<SampleSet> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let probs = v.probabilities();
    let counts = if shots >= probs.len() as u64 {
        multinomial_counts(&probs, shots, rng)?
    } else {
        inverse_cdf_counts(&probs, shots, rng)
    };
    SampleSet::from_counts(v.n(), tag, counts)
}

fn inverse_cdf_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> BTreeMap<usize, u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *counts.entry(idx).or_insert(0u64) += 1;
    }
    counts
}

fn multinomial_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<BTreeMap<usize, u64>> {
    // Suffix sums avoid drift from repeated subtraction.
    let mut tail = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        tail[i] = tail[i + 1] + probs[i];
    }
    let mut counts = BTreeMap::new();
    let mut left = shots;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let ratio = (p / tail[i]).clamp(0.0, 1.0);
        let k = if ratio >= 1.0 {
            left
        } else {
            Binomial::new(left, ratio)
                .map_err(|e| Error::InvalidArgument(format!("binomial draw: {e}")))?
                .sample(rng)
        };
        if k > 0 {
            counts.insert(i, k);
            left -= k;
        }
    }
    if left > 0 {
        // Rounding left mass unassigned; give it to the last populated outcome.
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        *counts.entry(last).or_insert(0) += left;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn run_circuit_examples() {
        let empty = Circuit::new(2).unwrap();
        assert_eq!(run_circuit(&empty).amps(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let mut had = Circuit::new(1).unwrap();
        had.push(Gate::H(0)).unwrap();
        assert!(close(run_circuit(&had).amps(), &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)], 1e-15));

        let mut rx = Circuit::new(1).unwrap();
        rx.push(Gate::Rx(0, PI)).unwrap();
        assert!(close(run_circuit(&rx).amps(), &[c(0.0, 0.0), c(0.0, -1.0)], 1e-15));
    }

    #[test]
    fn push_validates_targets() {
        let mut circ = Circuit::new(2).unwrap();
        assert!(circ.push(Gate::H(2)).is_err());
        assert!(circ.push(Gate::Cx { control: 1, target: 1 }).is_err());
    }

    #[test]
    fn probabilities_examples() {
        let bell = StateVector::from_amps(2, vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)])
            .unwrap();
        let p = bell.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[3] - 0.5).abs() < 1e-15);

        let mut ten = vec![c(0.0, 0.0); 4];
        ten[0b10] = c(1.0, 0.0);
        assert_eq!(StateVector::from_amps(2, ten).unwrap().probabilities(), vec![0.0, 0.0, 1.0, 0.0]);

        let mut hh = Circuit::new(2).unwrap();
        hh.push(Gate::H(0)).unwrap();
        hh.push(Gate::H(1)).unwrap();
        for q in run_circuit(&hh).probabilities() {
            assert!((q - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_basics() {
        let zero = StateVector::zero(1).unwrap();
        let mut rng = stream_rng(1, "t");
        let set = sample(&zero, 100, CircuitTag::Ansatz, &mut rng).unwrap();
        assert_eq!(set.counts().get(&0), Some(&100));
        assert!(sample(&zero, 0, CircuitTag::Ansatz, &mut rng).is_err());

        let bell = StateVector::from_amps(2, vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)])
            .unwrap();
        let a = sample(&bell, 1000, CircuitTag::Ansatz, &mut stream_rng(9, "bell")).unwrap();
        let b = sample(&bell, 1000, CircuitTag::Ansatz, &mut stream_rng(9, "bell")).unwrap();
        assert_eq!(a, b);
        assert!(a.counts().keys().all(|&s| s == 0 || s == 3));
    }

    #[test]
    fn histogram_sampler_matches_born_rule() {
        let v = StateVector::normalized(2, vec![c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(1.0, -1.0)]).unwrap();
        let p = v.probabilities();
        let shots = 200_000u64;
        let set = sample(&v, shots, CircuitTag::Ansatz, &mut stream_rng(4, "multi")).unwrap();
        assert_eq!(set.shots(), shots);
        assert!(set.counts().get(&2).is_none());
        for (s, &ps) in p.iter().enumerate() {
            let freq = set.counts().get(&s).copied().unwrap_or(0) as f64 / shots as f64;
            let sd = (ps * (1.0 - ps) / shots as f64).sqrt();
            assert!((freq - ps).abs() <= 5.0 * sd + 1e-12, "outcome {s}: {freq} vs {ps}");
        }
    }

    #[test]
    fn sample_set_json() {
        let mut counts = BTreeMap::new();
        counts.insert(0b01, 3);
        counts.insert(0b10, 2);
        let set = SampleSet::from_counts(2, CircuitTag::Real("XI".parse().unwrap()), counts).unwrap();
        let value: serde_json::Value = serde_json::from_str(&set.to_json()).unwrap();
        assert_eq!(value["tag"], "real:XI");
        assert_eq!(value["shots"], 5);
        assert_eq!(value["counts"]["01"], 3);
        assert_eq!(SampleSet::from_json(&set.to_json()).unwrap(), set);

        let bad = r#"{"tag":"ansatz","shots":4,"counts":{"01":3}}"#;
        assert!(SampleSet::from_json(bad).is_err());
    }
}
