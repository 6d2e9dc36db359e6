//! Support-mismatch detection, coupon-collector budgets, distribution
//! overlaps, dynamic-range bounds and the random-state overlap study.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bits::format_bits;
use crate::error::{Error, Result};
use crate::estimators::{dnp_empirical_energy, BitFunction, Dataset};
use crate::measurement::{pair_map, star_collapse, star_sign};
use crate::pauli::{chain_pairs, Boundary, Hamiltonian, PauliString};
use crate::simulator::{run_circuit, Circuit, Gate, StateVector};

const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub n: usize,
    /// Strings observed in the ansatz readout.
    pub ansatz_support: BTreeSet<usize>,
    /// Strings that enter a DNP numerator.
    pub numerator_support: BTreeSet<usize>,
    pub missing: BTreeSet<usize>,
    pub inclusion_holds: bool,
}

#[derive(Serialize)]
struct SupportReportRepr {
    n: usize,
    ansatz_support_size: usize,
    numerator_support_size: usize,
    missing_count: usize,
    inclusion_holds: bool,
    missing: Vec<String>,
}

impl SupportReport {
    pub fn to_json(&self) -> String {
        let repr = SupportReportRepr {
            n: self.n,
            ansatz_support_size: self.ansatz_support.len(),
            numerator_support_size: self.numerator_support.len(),
            missing_count: self.missing.len(),
            inclusion_holds: self.inclusion_holds,
            missing: self.missing.iter().map(|&s| format_bits(s, self.n)).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("support report serializes")
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json()).expect("valid json")
    }
}

/// Builds `B_a`, `B_M` and `B_M \ B_a` from the ansatz readout and the real
/// measurement circuits in `data`.
pub fn support_report(data: &Dataset) -> SupportReport {
    let n = data.n();
    let ansatz_support: BTreeSet<usize> = data.ansatz.entries().iter().map(|&(s, _)| s).collect();
    let mut numerator_support = ansatz_support.clone();
    for (p, freq) in &data.real {
        let Some(&star) = p.xy_support().first() else { continue };
        for &(s, _) in freq.entries() {
            let a = star_collapse(s, star, n);
            numerator_support.insert(a);
            numerator_support.insert(pair_map(p, a));
        }
    }
    let missing: BTreeSet<usize> = numerator_support.difference(&ansatz_support).copied().collect();
    SupportReport { n, inclusion_holds: missing.is_empty(), ansatz_support, numerator_support, missing }
}

fn harmonic(k: u64) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

fn check_targets(n: usize, n_m: u64) -> Result<()> {
    if n >= 63 || n_m == 0 || n_m > 1u64 << n {
        return Err(Error::InvalidArgument(format!("need 1 <= N_M <= 2^{n}, got {n_m}")));
    }
    Ok(())
}

/// `2^n H_{N_M}`: expected uniform draws until `N_M` fixed strings are all seen.
pub fn coupon_expected_shots(n: usize, n_m: u64) -> Result<f64> {
    check_targets(n, n_m)?;
    Ok((1u64 << n) as f64 * harmonic(n_m))
}

/// `ceil(2^n ln(N_M / delta))`.
pub fn coupon_highprob_shots(n: usize, n_m: u64, delta: f64) -> Result<u64> {
    check_targets(n, n_m)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(((1u64 << n) as f64 * (n_m as f64 / delta).ln()).ceil() as u64)
}

/// Uniform draws over `2^n` strings until targets `0..N_M` are all observed.
pub fn coupon_draws_until_complete<R: Rng + ?Sized>(n: usize, n_m: u64, rng: &mut R) -> Result<u64> {
    check_targets(n, n_m)?;
    let mut seen = vec![false; n_m as usize];
    let mut left = n_m;
    let mut draws = 0u64;
    while left > 0 {
        draws += 1;
        let s = rng.random_range(0..1u64 << n);
        if s < n_m && !seen[s as usize] {
            seen[s as usize] = true;
            left -= 1;
        }
    }
    Ok(draws)
}

/// Whether `budget` uniform draws cover all targets `0..N_M`.
pub fn coupon_covered<R: Rng + ?Sized>(n: usize, n_m: u64, budget: u64, rng: &mut R) -> Result<bool> {
    check_targets(n, n_m)?;
    let mut seen = vec![false; n_m as usize];
    let mut left = n_m;
    for _ in 0..budget {
        let s = rng.random_range(0..1u64 << n);
        if s < n_m && !seen[s as usize] {
            seen[s as usize] = true;
            left -= 1;
            if left == 0 {
                return Ok(true);
            }
        }
    }
    Ok(left == 0)
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch { expected: p.len(), actual: q.len() });
    }
    for (name, d) in [("p", p), ("q", q)] {
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > NORM_TOL || d.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} is not a probability distribution (sum {total})")));
        }
    }
    Ok(())
}

/// `B(p, q) = sum_s sqrt(p(s) q(s))`.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let b: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(b.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenyiOrder {
    Half,
    Infinity,
}

/// Renyi divergence `D_alpha(p || q)` in nats. Order infinity returns
/// `f64::INFINITY` when `p` has mass outside the support of `q`.
pub fn renyi(p: &[f64], q: &[f64], order: RenyiOrder) -> Result<f64> {
    check_pair(p, q)?;
    match order {
        RenyiOrder::Half => {
            let b = bhattacharyya(p, q)?;
            Ok(if b == 0.0 { f64::INFINITY } else { -2.0 * b.ln() })
        }
        RenyiOrder::Infinity => {
            let mut max_ratio: f64 = 0.0;
            for (&a, &b) in p.iter().zip(q) {
                if a > 0.0 {
                    if b == 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    max_ratio = max_ratio.max(a / b);
                }
            }
            Ok(max_ratio.ln())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub bhattacharyya: f64,
    pub renyi_half: f64,
    pub renyi_inf_pq: f64,
    pub renyi_inf_qp: f64,
    /// `max f / min f` with `f = p / q` on the common support.
    pub gamma: f64,
    pub gamma_lower_bound: f64,
}

pub fn divergence_report(p: &[f64], q: &[f64]) -> Result<DivergenceReport> {
    let (gamma, bc) = dynamic_range_bound(p, q)?;
    Ok(DivergenceReport {
        bhattacharyya: bc,
        renyi_half: renyi(p, q, RenyiOrder::Half)?,
        renyi_inf_pq: renyi(p, q, RenyiOrder::Infinity)?,
        renyi_inf_qp: renyi(q, p, RenyiOrder::Infinity)?,
        gamma,
        gamma_lower_bound: bc.powi(-4),
    })
}

/// `(gamma, B)` where `gamma = max f / min f` for the reweighting
/// `f = p / q` on the common support; `gamma >= B^-4` always holds.
pub fn dynamic_range_bound(p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    check_pair(p, q)?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 && b == 0.0 {
            return Err(Error::InvalidArgument("p has mass outside the support of q".into()));
        }
        if a > 0.0 && b > 0.0 {
            let f = a / b;
            lo = lo.min(f);
            hi = hi.max(f);
        }
    }
    if hi == 0.0 {
        return Err(Error::InvalidArgument("p and q share no support".into()));
    }
    Ok((hi / lo, bhattacharyya(p, q)?))
}

/// Reweights `q` by `f`: `p(s) = f(s) q(s) / Z`.
pub fn reweight<F: BitFunction + ?Sized>(q: &[f64], f: &F) -> Result<Vec<f64>> {
    let mut p: Vec<f64> = q.iter().enumerate().map(|(s, &x)| f.eval(s) * x).collect();
    let z: f64 = p.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::DegenerateDenominator);
    }
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

fn validate_shot_inputs(r: f64, epsilon: f64) -> Result<f64> {
    if !(r >= 1.0 && r.is_finite() && epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("need r >= 1 and epsilon > 0, got r={r}, epsilon={epsilon}")));
    }
    Ok(9.0 * r.powi(4) / (4.0 * epsilon * epsilon))
}

/// `ceil(9 r^4 / (4 epsilon^2))`.
pub fn shot_lower_bound(r: f64, epsilon: f64) -> Result<u64> {
    Ok(validate_shot_inputs(r, epsilon)?.ceil() as u64)
}

/// The same budget truncated, as quoted in published shot counts.
pub fn shot_budget_truncated(r: f64, epsilon: f64) -> Result<u64> {
    Ok(validate_shot_inputs(r, epsilon)?.floor() as u64)
}

/// Target distribution `p` for the random-state overlap study.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapTarget {
    /// All mass on `|0...0>`.
    PointMass,
    Uniform,
    /// Explicit distributions keyed by qubit count.
    Explicit(BTreeMap<usize, Vec<f64>>),
}

impl OverlapTarget {
    fn distribution(&self, n: usize) -> Result<Vec<f64>> {
        let d = 1usize << n;
        match self {
            OverlapTarget::PointMass => {
                let mut p = vec![0.0; d];
                p[0] = 1.0;
                Ok(p)
            }
            OverlapTarget::Uniform => Ok(vec![1.0 / d as f64; d]),
            OverlapTarget::Explicit(map) => {
                map.get(&n).cloned().ok_or_else(|| Error::InvalidArgument(format!("no target distribution for n={n}")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateEnsemble {
    /// Normalized complex Gaussian vectors.
    Haar,
    /// `n` brickwork layers of random single-qubit and ZZ rotations.
    RandomCircuit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub n: usize,
    pub mean_bc: f64,
    pub stderr: f64,
    pub analytic_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStudy {
    pub ensemble: StateEnsemble,
    pub trials: usize,
    pub rows: Vec<OverlapRow>,
    /// Least-squares slope of `ln mean_bc` against `n`, in nats per qubit.
    pub slope: f64,
}

impl OverlapStudy {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "mean_bc", "stderr", "analytic_prediction"])?;
        for row in &self.rows {
            w.write_record([
                row.n.to_string(),
                row.mean_bc.to_string(),
                row.stderr.to_string(),
                row.analytic_prediction.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("overlap csv", e))?;
        Ok(())
    }
}

/// `E[sqrt(q)]` for one Born probability of a Haar-random state in dimension `d`.
pub fn haar_sqrt_moment(d: usize) -> f64 {
    (ln_gamma(1.5) + ln_gamma(d as f64) - ln_gamma(d as f64 + 0.5)).exp()
}

fn random_state<R: Rng + ?Sized>(n: usize, ensemble: StateEnsemble, rng: &mut R) -> Result<StateVector> {
    match ensemble {
        StateEnsemble::Haar => {
            let amps = (0..1usize << n)
                .map(|_| num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            StateVector::normalized(n, amps)
        }
        StateEnsemble::RandomCircuit => {
            let mut circuit = Circuit::new(n)?;
            let pairs = chain_pairs(n, Boundary::Open);
            for layer in 0..n {
                for q in 0..n {
                    circuit.push(Gate::Rz(q, rng.random_range(0.0..2.0 * PI)))?;
                    circuit.push(Gate::Rx(q, rng.random_range(0.0..2.0 * PI)))?;
                    circuit.push(Gate::Rz(q, rng.random_range(0.0..2.0 * PI)))?;
                }
                for &(a, b) in pairs.iter().skip(layer % 2).step_by(2) {
                    circuit.push(Gate::Rzz(a, b, rng.random_range(0.0..2.0 * PI)))?;
                }
            }
            Ok(run_circuit(&circuit))
        }
    }
}

/// Mean Bhattacharyya overlap between `target(n)` and the Born distribution
/// of random states, per qubit count.
pub fn haar_bc_study<R: Rng + ?Sized>(
    n_values: &[usize],
    target: &OverlapTarget,
    trials: usize,
    ensemble: StateEnsemble,
    rng: &mut R,
) -> Result<OverlapStudy> {
    if trials < 30 {
        return Err(Error::InvalidArgument(format!("need at least 30 trials, got {trials}")));
    }
    if n_values.is_empty() || n_values.iter().any(|&n| n == 0 || n > 16) {
        return Err(Error::InvalidArgument("qubit counts must lie in 1..=16".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let p = target.distribution(n)?;
        let root_sum: f64 = p.iter().map(|x| x.sqrt()).sum();
        let mut values = Vec::with_capacity(trials);
        for _ in 0..trials {
            let q = random_state(n, ensemble, rng)?.probabilities();
            values.push(bhattacharyya(&p, &q)?);
        }
        let mean = values.iter().sum::<f64>() / trials as f64;
        let var = values.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        rows.push(OverlapRow {
            n,
            mean_bc: mean,
            stderr: (var / trials as f64).sqrt(),
            analytic_prediction: root_sum * haar_sqrt_moment(1 << n),
        });
    }
    let slope = fit_slope(&rows.iter().map(|r| (r.n as f64, r.mean_bc.ln())).collect::<Vec<_>>());
    Ok(OverlapStudy { ensemble, trials, rows, slope })
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub k: f64,
    pub energy: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundednessWitness {
    /// The unsampled string whose weight is scaled.
    pub string: String,
    /// Derivative of the energy with respect to `f(s*)` at the base weights.
    pub slope: f64,
    pub rows: Vec<WitnessRow>,
}

pub const WITNESS_SCALES: [f64; 5] = [1.0, 10.0, 100.0, 1000.0, 10000.0];

/// Searches `B_M \ B_a` for a string whose weight enters the DNP numerator
/// with a negative net coefficient, then scales it by [`WITNESS_SCALES`].
/// Returns `None` when no such string exists.
pub fn unboundedness_witness<F: BitFunction + ?Sized>(
    data: &Dataset,
    h: &Hamiltonian,
    f_base: &F,
) -> Result<Option<UnboundednessWitness>> {
    let n = data.n();
    let report = support_report(data);
    if report.missing.is_empty() {
        return Ok(None);
    }
    let z: f64 = data.ansatz.entries().iter().map(|&(s, w)| w * f_base.eval(s).powi(2)).sum();
    if z == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let coefficients: BTreeMap<&PauliString, f64> = h.terms().iter().map(|(c, p)| (p, *c)).collect();
    let mut slopes: BTreeMap<usize, f64> = BTreeMap::new();
    for (p, freq) in &data.real {
        let (Some(&c), Some(&star)) = (coefficients.get(p), p.xy_support().first()) else { continue };
        for &(s, w) in freq.entries() {
            let a = star_collapse(s, star, n);
            let b = pair_map(p, a);
            let sigma = star_sign(s, star, n);
            for (x, partner) in [(a, b), (b, a)] {
                if report.missing.contains(&x) {
                    *slopes.entry(x).or_insert(0.0) += c * w * sigma * f_base.eval(partner) / z;
                }
            }
        }
    }
    let Some((&star_string, &slope)) =
        slopes.iter().filter(|(_, &d)| d < 0.0).min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
    else {
        return Ok(None);
    };
    let mut rows = Vec::with_capacity(WITNESS_SCALES.len());
    for k in WITNESS_SCALES {
        let f = |s: usize| if s == star_string { k } else { f_base.eval(s) };
        let e = dnp_empirical_energy(data, &f, h)?;
        rows.push(WitnessRow { k, energy: e.value, denominator: e.denominator.expect("dnp has a denominator") });
    }
    Ok(Some(UnboundednessWitness { string: format_bits(star_string, n), slope, rows }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bits;
    use crate::estimators::SampleBundle;
    use crate::rng::stream_rng;
    use crate::simulator::{CircuitTag, SampleSet};

    fn idx(text: &str) -> usize {
        parse_bits(text).unwrap().0
    }

    fn single(n: usize, tag: CircuitTag, counts: &[(&str, u64)]) -> SampleSet {
        SampleSet::from_counts(n, tag, counts.iter().map(|&(b, c)| (idx(b), c)).collect()).unwrap()
    }

    fn xx_dataset(ansatz: &[(&str, u64)], term: &[(&str, u64)]) -> Dataset {
        let xx: PauliString = "XX".parse().unwrap();
        Dataset::from_bundle(&SampleBundle {
            ansatz: single(2, CircuitTag::Ansatz, ansatz),
            real: [(xx.clone(), single(2, CircuitTag::Real(xx), term))].into(),
            imag: BTreeMap::new(),
        })
    }

    fn xx_zz() -> Hamiltonian {
        Hamiltonian::new(2, vec![(-1.0, "ZZ".parse().unwrap()), (1.0, "XX".parse().unwrap())]).unwrap()
    }

    #[test]
    fn support_examples() {
        let full = xx_dataset(&[("00", 1), ("01", 1), ("10", 1), ("11", 1)], &[("00", 3), ("11", 2)]);
        let r = support_report(&full);
        assert!(r.inclusion_holds && r.missing.is_empty());

        // Outcome 11 collapses to 01 and pairs with 10; only 00 and 11 were read out.
        let partial = xx_dataset(&[("00", 7), ("11", 3)], &[("11", 4)]);
        let r = support_report(&partial);
        assert!(!r.inclusion_holds);
        assert_eq!(r.missing, [idx("01"), idx("10")].into());
    }

    #[test]
    fn coupon_formulas() {
        assert_eq!(coupon_expected_shots(3, 1).unwrap(), 8.0);
        assert!((coupon_expected_shots(3, 8).unwrap() - 21.742857142857142).abs() < 1e-12);
        assert!(coupon_expected_shots(3, 9).is_err());
        assert_eq!(coupon_highprob_shots(3, 1, (-1.0f64).exp()).unwrap(), 8);
        assert_eq!(coupon_highprob_shots(10, 1024, 0.01).unwrap(), 11814);
        assert!(coupon_highprob_shots(3, 8, 1.5).is_err());
    }

    #[test]
    fn overlap_examples() {
        let p = vec![0.1, 0.2, 0.3, 0.4];
        assert!((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(bhattacharyya(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let uniform = vec![0.125; 8];
        let mut point = vec![0.0; 8];
        point[3] = 1.0;
        assert!((bhattacharyya(&uniform, &point).unwrap() - 8f64.powf(-0.5)).abs() < 1e-15);
        assert!(bhattacharyya(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn renyi_examples() {
        let p = vec![0.25, 0.25, 0.5];
        assert!(renyi(&p, &p, RenyiOrder::Half).unwrap().abs() < 1e-15);
        assert!(renyi(&p, &p, RenyiOrder::Infinity).unwrap().abs() < 1e-15);
        assert_eq!(renyi(&[0.5, 0.5], &[1.0, 0.0], RenyiOrder::Infinity).unwrap(), f64::INFINITY);

        let q = vec![0.1, 0.4, 0.2, 0.3];
        let f = [3.0, 0.5, 1.0, 2.0];
        let z: f64 = q.iter().zip(&f).map(|(a, b)| a * b).sum();
        let reweighted = reweight(&q, &f.to_vec()).unwrap();
        let expected = 3f64.ln() - z.ln();
        assert!((renyi(&reweighted, &q, RenyiOrder::Infinity).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn dynamic_range_examples() {
        let p = vec![0.3, 0.7];
        let (gamma, bc) = dynamic_range_bound(&p, &p).unwrap();
        assert!((gamma - 1.0).abs() < 1e-15 && (bc - 1.0).abs() < 1e-15);
        assert!(dynamic_range_bound(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn shot_bounds() {
        assert_eq!(shot_lower_bound(3.5, 0.05).unwrap(), 135057);
        assert_eq!(shot_budget_truncated(3.5, 0.05).unwrap(), 135056);
        assert_eq!(shot_lower_bound(1.0, 1.0).unwrap(), 3);
        assert_eq!(shot_lower_bound(2.0, 0.1).unwrap(), 3600);
        assert!(shot_lower_bound(0.5, 0.1).is_err());
        assert!(shot_lower_bound(2.0, 0.0).is_err());
    }

    #[test]
    fn two_dimensional_sqrt_moment() {
        assert!((haar_sqrt_moment(2) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_overlap_study_runs() {
        let mut rng = stream_rng(0, "haar");
        for ensemble in [StateEnsemble::Haar, StateEnsemble::RandomCircuit] {
            let study = haar_bc_study(&[2, 3, 4], &OverlapTarget::PointMass, 40, ensemble, &mut rng).unwrap();
            assert_eq!(study.rows.len(), 3);
            assert!(study.slope < 0.0);
            let mut buf = Vec::new();
            study.write_csv(&mut buf).unwrap();
            assert!(String::from_utf8(buf).unwrap().starts_with("n,mean_bc,stderr,analytic_prediction\n"));
        }
        assert!(haar_bc_study(&[2], &OverlapTarget::Uniform, 10, StateEnsemble::Haar, &mut rng).is_err());
    }

    #[test]
    fn witness_on_crafted_dataset() {
        let data = xx_dataset(&[("00", 7), ("11", 3)], &[("00", 5), ("11", 5)]);
        let w = unboundedness_witness(&data, &xx_zz(), &|_| 1.0).unwrap().expect("witness exists");
        let z0 = w.rows[0].denominator;
        for pair in w.rows.windows(2) {
            assert!(pair[1].energy < pair[0].energy);
            assert_eq!(pair[1].denominator, z0);
        }
        // Linear in k.
        let d1 = w.rows[1].energy - w.rows[0].energy;
        let d2 = w.rows[2].energy - w.rows[1].energy;
        assert!((d2 / d1 - 10.0).abs() < 1e-9);
        assert!((d1 / 9.0 - w.slope).abs() < 1e-12);
    }

    #[test]
    fn no_witness_when_support_is_covered() {
        let data = xx_dataset(&[("00", 1), ("01", 1), ("10", 1), ("11", 1)], &[("00", 5), ("11", 5)]);
        assert!(unboundedness_witness(&data, &xx_zz(), &|_| 1.0).unwrap().is_none());
    }
}
