//! Sequential training: derivative-free VQE on the circuit parameters, then
//! Adam on a post-processing network over the frozen circuit state.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ansatz_state, AnsatzSpec};
use crate::diagnostics::support_report;
use crate::error::{Error, Result};
use crate::estimators::{
    dnp_exact_energy, dnp_loss_gradient, uvqnhe_exact_energy, uvqnhe_loss_gradient, vqe_energy, Dataset,
    EnergyEstimate, SampleBundle,
};
use crate::neural::{adam_step, Activation, AdamConfig, AdamState, NeuralNet, OutputMode};
use crate::pauli::{build_tfim, Boundary, Hamiltonian, PauliString};
use crate::rng::stream_rng;
use crate::simulator::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    Tfim {
        n: usize,
        #[serde(default = "default_field")]
        h: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    PauliSum {
        n: usize,
        terms: Vec<(f64, PauliString)>,
    },
}

fn default_field() -> f64 {
    1.0
}

impl HamiltonianSpec {
    pub fn n(&self) -> usize {
        match self {
            HamiltonianSpec::Tfim { n, .. } | HamiltonianSpec::PauliSum { n, .. } => *n,
        }
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        match self {
            HamiltonianSpec::Tfim { n, h, boundary } => build_tfim(*n, *h, *boundary),
            HamiltonianSpec::PauliSum { n, terms } => Hamiltonian::new(*n, terms.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnsatzConfig {
    pub layers: usize,
    pub boundary: Boundary,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { layers: 1, boundary: Boundary::Open }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqeConfig {
    /// Objective evaluations allowed to the optimizer.
    pub max_evals: usize,
    /// Relative tolerance on the objective.
    pub tolerance: f64,
    /// Initial trust-region radius.
    pub rho_begin: f64,
    /// Exact expectation values instead of sampled ones.
    pub exact: bool,
}

impl Default for VqeConfig {
    fn default() -> Self {
        VqeConfig { max_evals: 4000, tolerance: 1e-10, rho_begin: 0.5, exact: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnConfig {
    /// Output range `[1/r, r]` for amplitude networks; `None` leaves the
    /// output unconstrained (positive). Ignored by the phase network.
    pub r: Option<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub activation: Activation,
    /// Record the exact energy of the post-processed state every epoch.
    pub track_exact: bool,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig { r: None, epochs: 200, learning_rate: 0.01, hidden: 64, activation: Activation::Tanh, track_exact: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotConfig {
    /// Exact-probability mode: Born probabilities instead of shot histograms.
    pub exact: bool,
    /// Shots of the bare ansatz readout.
    pub ansatz: u64,
    /// Shots of each term measurement circuit.
    pub term: u64,
    /// Redraw the dataset every epoch instead of reusing one.
    pub refresh: bool,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig { exact: false, ansatz: 1000, term: 1000, refresh: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub vqe: VqeConfig,
    #[serde(default)]
    pub nn: NnConfig,
    #[serde(default)]
    pub shots: ShotConfig,
    #[serde(default)]
    pub seed: u64,
    /// Fill the wall-time column of traces (breaks byte-identical reruns).
    #[serde(default)]
    pub record_wall_time: bool,
}

impl TrainingConfig {
    pub fn tfim(n: usize, h: f64) -> Self {
        TrainingConfig {
            hamiltonian: HamiltonianSpec::Tfim { n, h, boundary: Boundary::Open },
            ansatz: AnsatzConfig::default(),
            vqe: VqeConfig::default(),
            nn: NnConfig::default(),
            shots: ShotConfig::default(),
            seed: 0,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.ansatz_spec()?;
        if self.nn.epochs == 0 {
            return bad("nn.epochs must be >= 1".into());
        }
        if self.nn.hidden == 0 {
            return bad("nn.hidden must be >= 1".into());
        }
        if !(self.nn.learning_rate > 0.0 && self.nn.learning_rate.is_finite()) {
            return bad(format!("nn.learning_rate must be positive, got {}", self.nn.learning_rate));
        }
        if let Some(r) = self.nn.r {
            if !(r >= 1.0 && r.is_finite()) {
                return bad(format!("nn.r must be >= 1, got {r}"));
            }
        }
        if !self.shots.exact && (self.shots.ansatz == 0 || self.shots.term == 0) {
            return bad("shot counts must be >= 1 outside exact mode".into());
        }
        if self.vqe.max_evals == 0 {
            return bad("vqe.max_evals must be >= 1".into());
        }
        self.hamiltonian.build()?;
        Ok(())
    }

    pub fn ansatz_spec(&self) -> Result<AnsatzSpec> {
        AnsatzSpec::new(self.hamiltonian.n(), self.ansatz.layers, self.ansatz.boundary)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: TrainingConfig = serde_json::from_str(text).map_err(|e| Error::json("training config", e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn amplitude_mode(&self) -> OutputMode {
        match self.nn.r {
            Some(r) => OutputMode::AmpBounded { r },
            None => OutputMode::AmpPositive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub params: Vec<f64>,
    /// Objective at `params` (exact or sampled according to the config).
    pub energy: f64,
    /// Exact energy at `params`.
    pub exact_energy: f64,
    /// Best objective seen after each evaluation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub status: String,
}

/// Minimizes the VQE energy with COBYLA from small random initial angles.
pub fn run_vqe(config: &TrainingConfig) -> Result<VqeResult> {
    config.validate()?;
    let h = config.hamiltonian.build()?;
    let spec = config.ansatz_spec()?;
    let x0 = spec.initial_params(&mut stream_rng(config.seed, "vqe-init"));
    struct Progress {
        rng: crate::rng::StreamRng,
        trace: Vec<f64>,
        failure: Option<Error>,
    }
    let progress =
        RefCell::new(Progress { rng: stream_rng(config.seed, "vqe-shots"), trace: Vec::new(), failure: None });
    let objective = |theta: &[f64], _: &mut ()| -> f64 {
        let mut state = progress.borrow_mut();
        let value = (|| -> Result<f64> {
            let v = ansatz_state(&spec, theta)?;
            if config.vqe.exact {
                crate::pauli::exact_expectation(&h, &v)
            } else {
                let bundle =
                    SampleBundle::draw(&v, &h, config.shots.ansatz, config.shots.term, false, &mut state.rng)?;
                Ok(vqe_energy(&Dataset::from_bundle(&bundle), &h)?.value)
            }
        })();
        match value {
            Ok(e) => {
                let best = state.trace.last().map_or(e, |&b| b.min(e));
                state.trace.push(best);
                e
            }
            Err(err) => {
                state.failure.get_or_insert(err);
                f64::INFINITY
            }
        }
    };
    let bounds = vec![(-4.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI); x0.len()];
    let cons: Vec<&dyn cobyla::Func<()>> = vec![];
    let stop = cobyla::StopTols { ftol_rel: config.vqe.tolerance, ..Default::default() };
    let outcome = cobyla::minimize(
        objective,
        &x0,
        &bounds,
        &cons,
        (),
        config.vqe.max_evals,
        cobyla::RhoBeg::All(config.vqe.rho_begin),
        Some(stop),
    );
    let Progress { trace, failure, .. } = progress.into_inner();
    if let Some(err) = failure {
        return Err(err);
    }
    let (status, params, energy) = match outcome {
        Ok((status, x, f)) => (format!("{status:?}"), x, f),
        // Budget exhaustion and similar stops still return the best point.
        Err((status, x, f)) => (format!("{status:?}"), x, f),
    };
    let exact_energy = crate::pauli::exact_expectation(&h, &ansatz_state(&spec, &params)?)?;
    Ok(VqeResult { evaluations: trace.len(), params, energy, exact_energy, trace, status })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    DenominatorCollapse,
    Nan,
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostProcessing {
    Vqnhe,
    Uvqnhe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Empirical loss before this epoch's update.
    pub energy: f64,
    pub denominator: Option<f64>,
    pub std_error: Option<f64>,
    /// Whether every numerator string was sampled by the ansatz readout.
    pub inclusion: Option<bool>,
    pub exact_energy: Option<f64>,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub kind: PostProcessing,
    pub records: Vec<EpochRecord>,
    pub termination: Termination,
    /// Empirical energy after the last update.
    pub final_energy: Option<f64>,
    pub final_std_error: Option<f64>,
    /// Exact energy of the final post-processed state.
    pub final_exact_energy: Option<f64>,
    pub final_params: Vec<f64>,
    #[serde(skip)]
    pub network: Option<NeuralNet>,
}

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "energy", "denominator", "inclusion_flag", "wall_time_ms"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.energy.to_string(),
                opt(r.denominator),
                r.inclusion.map(|b| (b as u8).to_string()).unwrap_or_default(),
                opt(r.wall_time_ms),
            ])?;
        }
        w.flush().map_err(|e| Error::io("trace csv", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn last_energy(&self) -> Option<f64> {
        self.final_energy.or_else(|| self.records.last().map(|r| r.energy))
    }
}

/// Shots or exact probabilities for one frozen state.
pub fn build_dataset(
    v: &StateVector,
    h: &Hamiltonian,
    shots: &ShotConfig,
    with_imag: bool,
    seed: u64,
    tag: &str,
) -> Result<(Dataset, Option<SampleBundle>)> {
    if shots.exact {
        Ok((Dataset::exact(v, h, with_imag)?, None))
    } else {
        let mut rng = stream_rng(seed, tag);
        let bundle = SampleBundle::draw(v, h, shots.ansatz, shots.term, with_imag, &mut rng)?;
        Ok((Dataset::from_bundle(&bundle), Some(bundle)))
    }
}

/// Trains the amplitude network on the empirical reweighted energy of `state`.
pub fn train_dnp(h: &Hamiltonian, state: &StateVector, config: &TrainingConfig) -> Result<TrainingTrace> {
    let (data, _) = build_dataset(state, h, &config.shots, false, config.seed, "nn-samples")?;
    train_dnp_on(h, state, &data, config)
}

/// As [`train_dnp`] on a given dataset (redrawn per epoch if configured).
pub fn train_dnp_on(h: &Hamiltonian, state: &StateVector, data: &Dataset, config: &TrainingConfig) -> Result<TrainingTrace> {
    train(PostProcessing::Vqnhe, h, state, data, config)
}

/// Trains the phase network on the empirical energy of the rotated state.
pub fn train_uvqnhe(h: &Hamiltonian, state: &StateVector, config: &TrainingConfig) -> Result<TrainingTrace> {
    let (data, _) = build_dataset(state, h, &config.shots, true, config.seed, "nn-samples")?;
    train_uvqnhe_on(h, state, &data, config)
}

pub fn train_uvqnhe_on(h: &Hamiltonian, state: &StateVector, data: &Dataset, config: &TrainingConfig) -> Result<TrainingTrace> {
    train(PostProcessing::Uvqnhe, h, state, data, config)
}

fn loss(kind: PostProcessing, data: &Dataset, net: &NeuralNet, h: &Hamiltonian) -> Result<(EnergyEstimate, Vec<f64>)> {
    match kind {
        PostProcessing::Vqnhe => dnp_loss_gradient(data, net, h),
        PostProcessing::Uvqnhe => uvqnhe_loss_gradient(data, net, h),
    }
}

fn exact_energy(kind: PostProcessing, state: &StateVector, net: &NeuralNet, h: &Hamiltonian) -> Result<f64> {
    match kind {
        PostProcessing::Vqnhe => dnp_exact_energy(state, net, h),
        PostProcessing::Uvqnhe => uvqnhe_exact_energy(state, net, h),
    }
}

fn train(
    kind: PostProcessing,
    h: &Hamiltonian,
    state: &StateVector,
    data: &Dataset,
    config: &TrainingConfig,
) -> Result<TrainingTrace> {
    config.validate()?;
    if h.n() != state.n() || data.n() != state.n() {
        return Err(Error::SizeMismatch { expected: h.n(), actual: state.n() });
    }
    let mode = match kind {
        PostProcessing::Vqnhe => config.amplitude_mode(),
        PostProcessing::Uvqnhe => OutputMode::Phase,
    };
    let mut init_rng = stream_rng(config.seed, "nn-init");
    let mut net = NeuralNet::new(h.n(), config.nn.hidden, mode, config.nn.activation, &mut init_rng)?;
    let mut adam =
        AdamState::new(net.param_count(), AdamConfig { learning_rate: config.nn.learning_rate, ..AdamConfig::default() });
    let guard = 1e3 * h.l1_norm();
    let with_imag = kind == PostProcessing::Uvqnhe;

    let mut data = data.clone();
    let inclusion = |d: &Dataset| (kind == PostProcessing::Vqnhe).then(|| support_report(d).inclusion_holds);
    let mut included = inclusion(&data);
    let start = Instant::now();
    let mut records = Vec::with_capacity(config.nn.epochs);
    let mut termination = Termination::Completed;
    for epoch in 0..config.nn.epochs {
        if config.shots.refresh && epoch > 0 && !config.shots.exact {
            let tag = format!("nn-samples-{epoch}");
            data = build_dataset(state, h, &config.shots, with_imag, config.seed, &tag)?.0;
            included = inclusion(&data);
        }
        let (estimate, grad) = match loss(kind, &data, &net, h) {
            Ok(x) => x,
            Err(Error::DegenerateDenominator) => {
                termination = Termination::DenominatorCollapse;
                break;
            }
            Err(e) => return Err(e),
        };
        let exact = if config.nn.track_exact { exact_energy(kind, state, &net, h).ok() } else { None };
        records.push(EpochRecord {
            epoch,
            energy: estimate.value,
            denominator: estimate.denominator,
            std_error: estimate.std_error,
            inclusion: included,
            exact_energy: exact,
            wall_time_ms: config.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
        if !estimate.value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            termination = Termination::Nan;
            break;
        }
        if estimate.value.abs() > guard {
            termination = Termination::Divergence;
            break;
        }
        adam_step(net.params_mut(), &grad, &mut adam)?;
    }

    let (mut final_energy, mut final_std_error) = (None, None);
    if termination == Termination::Completed {
        if config.shots.refresh && !config.shots.exact {
            data = build_dataset(state, h, &config.shots, with_imag, config.seed, "nn-samples-final")?.0;
        }
        let evaluated = match kind {
            PostProcessing::Vqnhe => crate::estimators::dnp_empirical_energy(&data, &net, h),
            PostProcessing::Uvqnhe => crate::estimators::uvqnhe_empirical_energy(&data, &net, h),
        };
        match evaluated {
            Ok(e) if e.value.is_finite() => {
                final_energy = Some(e.value);
                final_std_error = e.std_error;
            }
            Ok(_) => termination = Termination::Nan,
            Err(Error::DegenerateDenominator) => termination = Termination::DenominatorCollapse,
            Err(e) => return Err(e),
        }
    }
    let final_exact_energy = exact_energy(kind, state, &net, h).ok().filter(|e| e.is_finite());
    Ok(TrainingTrace {
        kind,
        records,
        termination,
        final_energy,
        final_std_error,
        final_exact_energy,
        final_params: net.params().to_vec(),
        network: Some(net),
    })
}

/// Output of a full pipeline run: VQE followed by optional network training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub vqe: VqeResult,
    /// Empirical VQE energy on the network-training dataset.
    pub vqe_empirical: Option<EnergyEstimate>,
    pub trace: Option<TrainingTrace>,
    pub support: Option<serde_json::Value>,
    /// The network-training samples (absent in exact mode).
    #[serde(skip)]
    pub samples: Option<SampleBundle>,
}

/// VQE, then (optionally) network training over the frozen circuit.
pub fn run_pipeline(config: &TrainingConfig, kind: Option<PostProcessing>) -> Result<PipelineResult> {
    config.validate()?;
    let h = config.hamiltonian.build()?;
    let vqe = run_vqe(config)?;
    let state = ansatz_state(&config.ansatz_spec()?, &vqe.params)?;
    let with_imag = kind == Some(PostProcessing::Uvqnhe);
    let (data, samples) = build_dataset(&state, &h, &config.shots, with_imag, config.seed, "nn-samples")?;
    let vqe_empirical = Some(vqe_energy(&data, &h)?);
    let support = (kind == Some(PostProcessing::Vqnhe)).then(|| support_report(&data).to_value());
    let trace = match kind {
        Some(k) => Some(train(k, &h, &state, &data, config)?),
        None => None,
    };
    Ok(PipelineResult { vqe, vqe_empirical, trace, support, samples })
}

/// Writes the circuit parameters as a JSON checkpoint.
pub fn write_params_checkpoint(path: &Path, params: &[f64]) -> Result<()> {
    let body = serde_json::to_string_pretty(&BTreeMap::from([("theta", params)])).expect("params serialize");
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_params_checkpoint(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut map: BTreeMap<String, Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    map.remove("theta").ok_or_else(|| Error::InvalidArgument(format!("{}: missing theta", path.display())))
}
