//! Energy functionals: plain VQE, diagonal non-unitary reweighting (DNP) and
//! the diagonal-unitary variant, in exact (dense) and empirical (shot) form.
//!
//! Empirical estimators consume a [`Dataset`] of normalized outcome
//! frequencies. Built from shot histograms it gives the finite-shot
//! estimators; built from Born probabilities ("exact-probability mode") it
//! reproduces the dense values to rounding error.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::parity_sign;
use crate::error::{Error, Result};
use crate::measurement::{pair_map, plan_measurement, star_collapse, star_sign, Variant};
use crate::neural::NeuralNet;
use crate::pauli::{exact_expectation, Hamiltonian, PauliString};
use crate::simulator::{sample, CircuitTag, SampleSet, StateVector};

/// A real function on bit strings: `f(s)` for DNP or `g(s)` for the phase map.
pub trait BitFunction {
    fn eval(&self, s: usize) -> f64;
}

impl BitFunction for NeuralNet {
    fn eval(&self, s: usize) -> f64 {
        self.forward(s)
    }
}

impl BitFunction for [f64] {
    fn eval(&self, s: usize) -> f64 {
        self[s]
    }
}

impl BitFunction for Vec<f64> {
    fn eval(&self, s: usize) -> f64 {
        self[s]
    }
}

impl<F: Fn(usize) -> f64> BitFunction for F {
    fn eval(&self, s: usize) -> f64 {
        self(s)
    }
}

/// Normalized outcome weights of one circuit, sorted by outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies {
    n: usize,
    entries: Vec<(usize, f64)>,
    /// `None` in exact-probability mode.
    shots: Option<u64>,
}

impl Frequencies {
    pub fn from_samples(samples: &SampleSet) -> Self {
        let total = samples.shots() as f64;
        let entries = samples.counts().iter().map(|(&s, &c)| (s, c as f64 / total)).collect();
        Frequencies { n: samples.n(), entries, shots: Some(samples.shots()) }
    }

    pub fn from_probabilities(n: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 1 << n {
            return Err(Error::SizeMismatch { expected: 1 << n, actual: probs.len() });
        }
        let entries = probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(s, &p)| (s, p)).collect();
        Ok(Frequencies { n, entries, shots: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    /// Weighted mean and variance of `x(s)`.
    fn stats(&self, mut x: impl FnMut(usize) -> f64) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for &(s, w) in &self.entries {
            let v = x(s);
            m1 += w * v;
            m2 += w * v * v;
        }
        (m1, (m2 - m1 * m1).max(0.0))
    }
}

/// Raw shot histograms for one ansatz state: the bare readout plus the real
/// (and optionally imaginary) measurement circuit of every non-diagonal term.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBundle {
    pub ansatz: SampleSet,
    pub real: BTreeMap<PauliString, SampleSet>,
    pub imag: BTreeMap<PauliString, SampleSet>,
}

impl SampleBundle {
    pub fn draw<R: Rng + ?Sized>(
        v: &StateVector,
        h: &Hamiltonian,
        shots_ansatz: u64,
        shots_term: u64,
        with_imag: bool,
        rng: &mut R,
    ) -> Result<Self> {
        check_n(h, v.n())?;
        let ansatz = sample(v, shots_ansatz, CircuitTag::Ansatz, rng)?;
        let mut real = BTreeMap::new();
        let mut imag = BTreeMap::new();
        for (_, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
            let state = plan_measurement(p, Variant::Real).measured_state(v)?;
            real.insert(p.clone(), sample(&state, shots_term, CircuitTag::Real(p.clone()), rng)?);
            if with_imag {
                let state = plan_measurement(p, Variant::Imag).measured_state(v)?;
                imag.insert(p.clone(), sample(&state, shots_term, CircuitTag::Imag(p.clone()), rng)?);
            }
        }
        Ok(SampleBundle { ansatz, real, imag })
    }

    /// Groups loose sample sets by their tags.
    pub fn from_sets(sets: Vec<SampleSet>) -> Result<Self> {
        let mut ansatz = None;
        let mut real = BTreeMap::new();
        let mut imag = BTreeMap::new();
        for set in sets {
            let duplicate = match set.tag().clone() {
                CircuitTag::Ansatz => ansatz.replace(set).is_some(),
                CircuitTag::Real(p) => real.insert(p, set).is_some(),
                CircuitTag::Imag(p) => imag.insert(p, set).is_some(),
            };
            if duplicate {
                return Err(Error::InvalidArgument("two sample sets share a circuit tag".into()));
            }
        }
        let ansatz = ansatz.ok_or_else(|| Error::MissingSamples("ansatz".into()))?;
        let n = ansatz.n();
        if let Some(s) = real.values().chain(imag.values()).find(|s| s.n() != n) {
            return Err(Error::SizeMismatch { expected: n, actual: s.n() });
        }
        Ok(SampleBundle { ansatz, real, imag })
    }

    pub fn sets(&self) -> impl Iterator<Item = &SampleSet> {
        std::iter::once(&self.ansatz).chain(self.real.values()).chain(self.imag.values())
    }

    /// JSON array of sample sets.
    pub fn to_json(&self) -> String {
        let values: Vec<serde_json::Value> =
            self.sets().map(|s| serde_json::from_str(&s.to_json()).expect("sample set is valid json")).collect();
        serde_json::to_string_pretty(&values).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let values: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| Error::json("sample bundle", e))?;
        let sets = values.iter().map(|v| SampleSet::from_json(&v.to_string())).collect::<Result<Vec<_>>>()?;
        Self::from_sets(sets)
    }
}

/// Estimator input: outcome frequencies for every circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ansatz: Frequencies,
    pub real: BTreeMap<PauliString, Frequencies>,
    pub imag: BTreeMap<PauliString, Frequencies>,
}

impl Dataset {
    pub fn from_bundle(bundle: &SampleBundle) -> Self {
        let conv = |m: &BTreeMap<PauliString, SampleSet>| {
            m.iter().map(|(p, s)| (p.clone(), Frequencies::from_samples(s))).collect()
        };
        Dataset { ansatz: Frequencies::from_samples(&bundle.ansatz), real: conv(&bundle.real), imag: conv(&bundle.imag) }
    }

    /// Exact-probability mode: Born probabilities of every circuit.
    pub fn exact(v: &StateVector, h: &Hamiltonian, with_imag: bool) -> Result<Self> {
        check_n(h, v.n())?;
        let n = v.n();
        let ansatz = Frequencies::from_probabilities(n, &v.probabilities())?;
        let mut real = BTreeMap::new();
        let mut imag = BTreeMap::new();
        for (_, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
            let probs = plan_measurement(p, Variant::Real).measured_state(v)?.probabilities();
            real.insert(p.clone(), Frequencies::from_probabilities(n, &probs)?);
            if with_imag {
                let probs = plan_measurement(p, Variant::Imag).measured_state(v)?.probabilities();
                imag.insert(p.clone(), Frequencies::from_probabilities(n, &probs)?);
            }
        }
        Ok(Dataset { ansatz, real, imag })
    }

    pub fn n(&self) -> usize {
        self.ansatz.n
    }

    pub fn is_exact(&self) -> bool {
        self.ansatz.shots.is_none()
    }

    fn real_for(&self, p: &PauliString) -> Result<&Frequencies> {
        self.real.get(p).ok_or_else(|| Error::MissingSamples(format!("real:{p}")))
    }

    fn imag_for(&self, p: &PauliString) -> Result<&Frequencies> {
        self.imag.get(p).ok_or_else(|| Error::MissingSamples(format!("imag:{p}")))
    }

    fn shot_counts(&self, h: &Hamiltonian, with_imag: bool) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        if let Some(m) = self.ansatz.shots {
            out.insert(CircuitTag::Ansatz.to_string(), m);
        }
        for (_, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
            if let Some(m) = self.real.get(p).and_then(|f| f.shots) {
                out.insert(CircuitTag::Real(p.clone()).to_string(), m);
            }
            if with_imag {
                if let Some(m) = self.imag.get(p).and_then(|f| f.shots) {
                    out.insert(CircuitTag::Imag(p.clone()).to_string(), m);
                }
            }
        }
        out
    }

    /// Every bit string an estimator will look up.
    pub fn referenced_strings(&self, h: &Hamiltonian, with_imag: bool) -> BTreeSet<usize> {
        let n = self.n();
        let mut out: BTreeSet<usize> = self.ansatz.entries.iter().map(|&(s, _)| s).collect();
        for (_, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
            let star = p.xy_support()[0];
            let maps = self.real.get(p).into_iter().chain(if with_imag { self.imag.get(p) } else { None });
            for freq in maps {
                for &(s, _) in &freq.entries {
                    let a = star_collapse(s, star, n);
                    out.insert(a);
                    out.insert(pair_map(p, a));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// Per-term numerator (DNP) or term expectation (VQE, phase map).
    pub per_term: BTreeMap<String, f64>,
    /// DNP only.
    pub denominator: Option<f64>,
    /// Shots per circuit tag; empty in exact-probability mode.
    pub shots: BTreeMap<String, u64>,
    /// Shot-noise standard error; zero in exact-probability mode, absent for DNP.
    pub std_error: Option<f64>,
}

impl EnergyEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

fn check_n(h: &Hamiltonian, n: usize) -> Result<()> {
    if h.n() != n {
        return Err(Error::SizeMismatch { expected: h.n(), actual: n });
    }
    Ok(())
}

fn tabulate<F: BitFunction + ?Sized>(f: &F, strings: &BTreeSet<usize>) -> BTreeMap<usize, f64> {
    strings.iter().map(|&s| (s, f.eval(s))).collect()
}

/// Variance contribution `var / M` of one circuit, zero in exact mode.
fn sampling_variance(freq: &Frequencies, var: f64) -> f64 {
    match freq.shots {
        Some(m) => var / m as f64,
        None => 0.0,
    }
}

/// Diagonal terms share the ansatz circuit, so their estimate is one
/// combined observable `sum_P c_P parity_P(s) weight(s)`.
fn diagonal_block(h: &Hamiltonian, data: &Dataset, weight: impl Fn(usize) -> f64) -> (BTreeMap<String, f64>, f64, f64) {
    let diag: Vec<&(f64, PauliString)> =
        h.terms().iter().filter(|(_, p)| p.is_diagonal() && !p.is_identity()).collect();
    let mut per_term = BTreeMap::new();
    for (_, p) in &diag {
        let zm = p.z_mask();
        let value = data.ansatz.entries.iter().map(|&(s, w)| w * parity_sign(s, zm) * weight(s)).sum();
        per_term.insert(p.to_string(), value);
    }
    let (mean, var) = data.ansatz.stats(|s| diag.iter().map(|(c, p)| c * parity_sign(s, p.z_mask()) * weight(s)).sum());
    (per_term, mean, sampling_variance(&data.ansatz, var))
}

/// Standard shot average of term eigenvalues.
pub fn vqe_energy(data: &Dataset, h: &Hamiltonian) -> Result<EnergyEstimate> {
    check_n(h, data.n())?;
    let n = data.n();
    let (mut per_term, mut value, mut variance) = diagonal_block(h, data, |_| 1.0);
    value += h.identity_coefficient();
    for (c, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
        let star = p.xy_support()[0];
        let freq = data.real_for(p)?;
        let (mean, var) = freq.stats(|s| star_sign(s, star, n));
        per_term.insert(p.to_string(), mean);
        value += c * mean;
        variance += c * c * sampling_variance(freq, var);
    }
    Ok(EnergyEstimate {
        value,
        per_term,
        denominator: None,
        shots: data.shot_counts(h, false),
        std_error: Some(variance.sqrt()),
    })
}

/// `<v|D_f H D_f|v> / <v|D_f^2|v>` by dense algebra.
pub fn dnp_exact_energy<F: BitFunction + ?Sized>(v: &StateVector, f: &F, h: &Hamiltonian) -> Result<f64> {
    check_n(h, v.n())?;
    v.check_normalized()?;
    let weighted: Vec<Complex64> = v.amps().iter().enumerate().map(|(s, a)| a * f.eval(s)).collect();
    let z: f64 = weighted.iter().map(|a| a.norm_sqr()).sum();
    if z == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let mut hw = vec![Complex64::new(0.0, 0.0); weighted.len()];
    h.apply_into(&weighted, &mut hw);
    let num: f64 = weighted.iter().zip(&hw).map(|(a, b)| (a.conj() * b).re).sum();
    Ok(num / z)
}

/// `<v|U_g^dag H U_g|v>` with `U_g = diag(exp(i g(s)))`.
pub fn uvqnhe_exact_energy<G: BitFunction + ?Sized>(v: &StateVector, g: &G, h: &Hamiltonian) -> Result<f64> {
    check_n(h, v.n())?;
    v.check_normalized()?;
    let rotated: Vec<Complex64> =
        v.amps().iter().enumerate().map(|(s, a)| a * Complex64::from_polar(1.0, g.eval(s))).collect();
    exact_expectation(h, &StateVector::from_amps_unchecked(v.n(), rotated))
}

/// Upstream derivatives `dE/dh(s)` for each referenced bit string `s`.
pub type OutputGradient = BTreeMap<usize, f64>;

struct DnpParts {
    estimate: EnergyEstimate,
    grad: Option<OutputGradient>,
}

fn dnp_core(data: &Dataset, h: &Hamiltonian, table: &BTreeMap<usize, f64>, want_grad: bool) -> Result<DnpParts> {
    check_n(h, data.n())?;
    let n = data.n();
    let f = |s: usize| table[&s];
    let z: f64 = data.ansatz.entries.iter().map(|&(s, w)| w * f(s) * f(s)).sum();
    if z == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let mut per_term = BTreeMap::new();
    let mut weighted_sum = 0.0;
    // d(sum_P c_P N_P) / d f(s)
    let mut dnum: OutputGradient = BTreeMap::new();
    for (c, p) in h.terms() {
        if p.is_identity() {
            continue;
        }
        let mut num = 0.0;
        if p.is_diagonal() {
            let zm = p.z_mask();
            for &(s, w) in &data.ansatz.entries {
                let sign = parity_sign(s, zm);
                num += w * sign * f(s) * f(s);
                if want_grad {
                    *dnum.entry(s).or_insert(0.0) += c * w * sign * 2.0 * f(s);
                }
            }
        } else {
            let star = p.xy_support()[0];
            for &(s, w) in &data.real_for(p)?.entries {
                let a = star_collapse(s, star, n);
                let b = pair_map(p, a);
                let sigma = star_sign(s, star, n);
                num += w * sigma * f(a) * f(b);
                if want_grad {
                    *dnum.entry(a).or_insert(0.0) += c * w * sigma * f(b);
                    *dnum.entry(b).or_insert(0.0) += c * w * sigma * f(a);
                }
            }
        }
        per_term.insert(p.to_string(), num);
        weighted_sum += c * num;
    }
    let value = h.identity_coefficient() + weighted_sum / z;
    let grad = want_grad.then(|| {
        let mut grad = dnum;
        for g in grad.values_mut() {
            *g /= z;
        }
        let ratio = weighted_sum / (z * z);
        for &(s, w) in &data.ansatz.entries {
            *grad.entry(s).or_insert(0.0) -= ratio * 2.0 * w * f(s);
        }
        grad
    });
    let estimate =
        EnergyEstimate { value, per_term, denominator: Some(z), shots: data.shot_counts(h, false), std_error: None };
    Ok(DnpParts { estimate, grad })
}

/// Finite-shot DNP energy `sum_P c_P N_f(P) / Z_f`.
pub fn dnp_empirical_energy<F: BitFunction + ?Sized>(data: &Dataset, f: &F, h: &Hamiltonian) -> Result<EnergyEstimate> {
    let table = tabulate(f, &data.referenced_strings(h, false));
    Ok(dnp_core(data, h, &table, false)?.estimate)
}

/// DNP energy and its derivative with respect to each output `f(s)`.
pub fn dnp_output_gradient<F: BitFunction + ?Sized>(
    data: &Dataset,
    f: &F,
    h: &Hamiltonian,
) -> Result<(EnergyEstimate, OutputGradient)> {
    let table = tabulate(f, &data.referenced_strings(h, false));
    let parts = dnp_core(data, h, &table, true)?;
    Ok((parts.estimate, parts.grad.expect("gradient requested")))
}

/// DNP energy and its gradient with respect to the network parameters.
pub fn dnp_loss_gradient(data: &Dataset, f: &NeuralNet, h: &Hamiltonian) -> Result<(EnergyEstimate, Vec<f64>)> {
    let (estimate, upstream) = dnp_output_gradient(data, f, h)?;
    Ok((estimate, backpropagate(f, &upstream)))
}

fn backpropagate(net: &NeuralNet, upstream: &OutputGradient) -> Vec<f64> {
    let mut grad = vec![0.0; net.param_count()];
    for (&s, &u) in upstream {
        net.accumulate_backward(s, u, &mut grad);
    }
    grad
}

fn uvqnhe_core(
    data: &Dataset,
    h: &Hamiltonian,
    table: &BTreeMap<usize, f64>,
    want_grad: bool,
) -> Result<(EnergyEstimate, OutputGradient)> {
    check_n(h, data.n())?;
    let n = data.n();
    let g = |s: usize| table[&s];
    let (mut per_term, mut value, mut variance) = diagonal_block(h, data, |_| 1.0);
    value += h.identity_coefficient();
    let mut grad = OutputGradient::new();
    for (c, p) in h.terms().iter().filter(|(_, p)| !p.is_diagonal()) {
        let star = p.xy_support()[0];
        let pieces = [(data.real_for(p)?, Variant::Real), (data.imag_for(p)?, Variant::Imag)];
        let mut term = 0.0;
        for (freq, variant) in pieces {
            let weight = |s: usize| {
                let a = star_collapse(s, star, n);
                let delta = g(pair_map(p, a)) - g(a);
                let sigma = star_sign(s, star, n);
                match variant {
                    Variant::Real => sigma * delta.cos(),
                    Variant::Imag => sigma * delta.sin(),
                }
            };
            let (mean, var) = freq.stats(weight);
            term += mean;
            variance += c * c * sampling_variance(freq, var);
            if want_grad {
                for &(s, w) in &freq.entries {
                    let a = star_collapse(s, star, n);
                    let b = pair_map(p, a);
                    let delta = g(b) - g(a);
                    let sigma = star_sign(s, star, n);
                    // d/d delta of the per-shot weight.
                    let d = match variant {
                        Variant::Real => -sigma * delta.sin(),
                        Variant::Imag => sigma * delta.cos(),
                    };
                    *grad.entry(b).or_insert(0.0) += c * w * d;
                    *grad.entry(a).or_insert(0.0) -= c * w * d;
                }
            }
        }
        per_term.insert(p.to_string(), term);
        value += c * term;
    }
    let estimate =
        EnergyEstimate { value, per_term, denominator: None, shots: data.shot_counts(h, true), std_error: Some(variance.sqrt()) };
    Ok((estimate, grad))
}

/// Finite-shot energy of the phase-rotated state; affine in the frequencies.
pub fn uvqnhe_empirical_energy<G: BitFunction + ?Sized>(
    data: &Dataset,
    g: &G,
    h: &Hamiltonian,
) -> Result<EnergyEstimate> {
    let table = tabulate(g, &data.referenced_strings(h, true));
    Ok(uvqnhe_core(data, h, &table, false)?.0)
}

pub fn uvqnhe_output_gradient<G: BitFunction + ?Sized>(
    data: &Dataset,
    g: &G,
    h: &Hamiltonian,
) -> Result<(EnergyEstimate, OutputGradient)> {
    let table = tabulate(g, &data.referenced_strings(h, true));
    uvqnhe_core(data, h, &table, true)
}

pub fn uvqnhe_loss_gradient(data: &Dataset, g: &NeuralNet, h: &Hamiltonian) -> Result<(EnergyEstimate, Vec<f64>)> {
    let (estimate, upstream) = uvqnhe_output_gradient(data, g, h)?;
    Ok((estimate, backpropagate(g, &upstream)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bits;
    use crate::pauli::{build_tfim, Boundary, Pauli};
    use crate::rng::stream_rng;

    fn idx(text: &str) -> usize {
        parse_bits(text).unwrap().0
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = stream_rng(seed, "state");
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        StateVector::normalized(n, amps).unwrap()
    }

    fn random_hamiltonian(n: usize, seed: u64) -> Hamiltonian {
        let mut rng = stream_rng(seed, "ham");
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let terms = (0..6)
            .map(|_| {
                let p = PauliString::new((0..n).map(|_| letters[rng.random_range(0..4)]).collect()).unwrap();
                (rng.random_range(-1.0..1.0), p)
            })
            .collect();
        Hamiltonian::new(n, terms).unwrap()
    }

    fn single(n: usize, tag: CircuitTag, counts: &[(&str, u64)]) -> SampleSet {
        SampleSet::from_counts(n, tag, counts.iter().map(|&(b, c)| (idx(b), c)).collect()).unwrap()
    }

    #[test]
    fn vqe_counts_example() {
        let h = Hamiltonian::new(1, vec![(1.0, "Z".parse().unwrap())]).unwrap();
        let bundle = SampleBundle {
            ansatz: single(1, CircuitTag::Ansatz, &[("0", 60), ("1", 40)]),
            real: BTreeMap::new(),
            imag: BTreeMap::new(),
        };
        let e = vqe_energy(&Dataset::from_bundle(&bundle), &h).unwrap();
        assert!((e.value - 0.2).abs() < 1e-15);
        assert!((e.std_error.unwrap() - (0.96f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vqe_plus_state() {
        let h = Hamiltonian::new(1, vec![(1.0, "X".parse().unwrap())]).unwrap();
        let plus = StateVector::normalized(1, vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        let e = vqe_energy(&Dataset::exact(&plus, &h, false).unwrap(), &h).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.std_error, Some(0.0));
    }

    #[test]
    fn missing_term_is_an_error() {
        let h = build_tfim(2, 1.0, Boundary::Open).unwrap();
        let bundle = SampleBundle {
            ansatz: single(2, CircuitTag::Ansatz, &[("00", 5)]),
            real: BTreeMap::new(),
            imag: BTreeMap::new(),
        };
        assert!(matches!(vqe_energy(&Dataset::from_bundle(&bundle), &h), Err(Error::MissingSamples(_))));
    }

    #[test]
    fn exact_mode_matches_dense_values() {
        for trial in 0..30u64 {
            let n = 2 + (trial % 3) as usize;
            let v = random_state(n, trial);
            let h = random_hamiltonian(n, trial);
            let mut rng = stream_rng(trial, "f");
            let f: Vec<f64> = (0..1 << n).map(|_| rng.random_range(0.1..3.0)).collect();
            let g: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let data = Dataset::exact(&v, &h, true).unwrap();

            let plain = exact_expectation(&h, &v).unwrap();
            assert!((vqe_energy(&data, &h).unwrap().value - plain).abs() < 1e-10);

            let dnp = dnp_empirical_energy(&data, &f, &h).unwrap();
            assert!((dnp.value - dnp_exact_energy(&v, &f, &h).unwrap()).abs() < 1e-10);

            let u = uvqnhe_empirical_energy(&data, &g, &h).unwrap();
            assert!((u.value - uvqnhe_exact_energy(&v, &g, &h).unwrap()).abs() < 1e-10);
            assert!(u.denominator.is_none());
        }
    }

    #[test]
    fn trivial_post_processing_reduces_to_vqe() {
        let h = build_tfim(3, 0.7, Boundary::Open).unwrap();
        let v = random_state(3, 4);
        let mut rng = stream_rng(1, "shots");
        let bundle = SampleBundle::draw(&v, &h, 300, 300, true, &mut rng).unwrap();
        let data = Dataset::from_bundle(&bundle);
        let vqe = vqe_energy(&data, &h).unwrap().value;
        let dnp = dnp_empirical_energy(&data, &|_| 1.0, &h).unwrap().value;
        let u = uvqnhe_empirical_energy(&data, &|_| 0.0, &h).unwrap().value;
        assert!((dnp - vqe).abs() < 1e-12);
        assert!((u - vqe).abs() < 1e-12);
        assert!((dnp_exact_energy(&v, &|_| 1.0, &h).unwrap() - exact_expectation(&h, &v).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn basis_state_is_unchanged_by_reweighting() {
        let h = Hamiltonian::new(2, vec![(-1.0, "ZZ".parse().unwrap())]).unwrap();
        let v = StateVector::zero(2).unwrap();
        assert!((dnp_exact_energy(&v, &|s| 1.0 + s as f64, &h).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_map_leaves_diagonal_terms_alone() {
        let h = Hamiltonian::new(3, vec![(0.5, "ZZI".parse().unwrap()), (-1.5, "IZZ".parse().unwrap())]).unwrap();
        let v = random_state(3, 9);
        let g = |s: usize| (s as f64 * 1.3).sin() * 3.0;
        assert!((uvqnhe_exact_energy(&v, &g, &h).unwrap() - exact_expectation(&h, &v).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scale_and_phase_invariance() {
        let h = build_tfim(3, 1.0, Boundary::Periodic).unwrap();
        let v = random_state(3, 2);
        let mut rng = stream_rng(2, "shots");
        let data = Dataset::from_bundle(&SampleBundle::draw(&v, &h, 200, 200, true, &mut rng).unwrap());
        let f = |s: usize| 0.5 + (s as f64).cos().abs();
        let base = dnp_empirical_energy(&data, &f, &h).unwrap().value;
        for c in [1e-3, 0.7, 42.0] {
            let scaled = dnp_empirical_energy(&data, &|s| c * f(s), &h).unwrap().value;
            assert!((scaled - base).abs() < 1e-12);
        }
        let g = |s: usize| (s as f64 * 0.9).sin();
        let base = uvqnhe_empirical_energy(&data, &g, &h).unwrap().value;
        for c in [-2.0, 0.3, 10.0] {
            let shifted = uvqnhe_empirical_energy(&data, &|s| g(s) + c, &h).unwrap().value;
            assert!((shifted - base).abs() < 1e-12);
        }
    }

    /// Outcome `11` of the `XX` circuit pairs `01` with `10`; neither is in the
    /// ansatz histogram, so scaling `f(10)` moves only the numerator.
    #[test]
    fn unsampled_string_drives_energy_down() {
        let h = Hamiltonian::new(2, vec![(-1.0, "ZZ".parse().unwrap()), (1.0, "XX".parse().unwrap())]).unwrap();
        let xx: PauliString = "XX".parse().unwrap();
        let bundle = SampleBundle {
            ansatz: single(2, CircuitTag::Ansatz, &[("00", 70), ("11", 30)]),
            real: [(xx.clone(), single(2, CircuitTag::Real(xx), &[("00", 50), ("11", 50)]))].into(),
            imag: BTreeMap::new(),
        };
        let data = Dataset::from_bundle(&bundle);
        let star = idx("10");
        let mut previous = f64::INFINITY;
        let mut z0 = None;
        for k in [1.0, 10.0, 100.0, 1000.0] {
            let f = |s: usize| if s == star { k } else { 1.0 };
            let e = dnp_empirical_energy(&data, &f, &h).unwrap();
            assert!(e.value < previous);
            previous = e.value;
            assert_eq!(*z0.get_or_insert(e.denominator.unwrap()), e.denominator.unwrap());
        }
    }

    #[test]
    fn zero_denominator_is_reported() {
        let h = build_tfim(2, 1.0, Boundary::Open).unwrap();
        let v = StateVector::zero(2).unwrap();
        let data = Dataset::exact(&v, &h, false).unwrap();
        assert!(matches!(dnp_empirical_energy(&data, &|_| 0.0, &h), Err(Error::DegenerateDenominator)));
        assert!(matches!(dnp_exact_energy(&v, &|_| 0.0, &h), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn output_gradients_match_finite_differences() {
        let h = build_tfim(3, 1.0, Boundary::Open).unwrap();
        for seed in 0..10u64 {
            let v = random_state(3, 100 + seed);
            let mut rng = stream_rng(seed, "shots");
            let data = Dataset::from_bundle(&SampleBundle::draw(&v, &h, 100, 100, true, &mut rng).unwrap());
            let f: Vec<f64> = (0..8).map(|_| rng.random_range(0.3..2.0)).collect();
            let g: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (_, df) = dnp_output_gradient(&data, &f, &h).unwrap();
            let (_, dg) = uvqnhe_output_gradient(&data, &g, &h).unwrap();
            for t in 0..8 {
                let eps = 1e-6;
                let bump = |x: &Vec<f64>, d: f64| {
                    let mut y = x.clone();
                    y[t] += d;
                    y
                };
                let fd = (dnp_empirical_energy(&data, &bump(&f, eps), &h).unwrap().value
                    - dnp_empirical_energy(&data, &bump(&f, -eps), &h).unwrap().value)
                    / (2.0 * eps);
                assert!((fd - df.get(&t).copied().unwrap_or(0.0)).abs() < 1e-7, "dnp t={t}");
                let fd = (uvqnhe_empirical_energy(&data, &bump(&g, eps), &h).unwrap().value
                    - uvqnhe_empirical_energy(&data, &bump(&g, -eps), &h).unwrap().value)
                    / (2.0 * eps);
                assert!((fd - dg.get(&t).copied().unwrap_or(0.0)).abs() < 1e-7, "phase t={t}");
            }
        }
    }

    #[test]
    fn bundle_json_round_trip() {
        let h = build_tfim(2, 1.0, Boundary::Open).unwrap();
        let v = random_state(2, 0);
        let mut rng = stream_rng(0, "shots");
        let bundle = SampleBundle::draw(&v, &h, 50, 40, true, &mut rng).unwrap();
        assert_eq!(SampleBundle::from_json(&bundle.to_json()).unwrap(), bundle);
    }
}
