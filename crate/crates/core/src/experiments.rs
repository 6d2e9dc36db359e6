//! Declarative experiment recipes and the sample-file diagnostics runner.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::ansatz_state;
use crate::bits::format_bits;
use crate::diagnostics::{
    coupon_expected_shots, coupon_highprob_shots, divergence_report, reweight, support_report, unboundedness_witness,
    DivergenceReport, UnboundednessWitness,
};
use crate::error::{Error, Result};
use crate::estimators::{vqe_energy, Dataset, Frequencies, SampleBundle};
use crate::groundtruth::ground_state;
use crate::neural::{Activation, NeuralNet};
use crate::pauli::{Boundary, Hamiltonian};
use crate::rng::derive_seed;
use crate::simulator::SampleSet;
use crate::training::{
    build_dataset, run_vqe, train_dnp_on, train_uvqnhe_on, AnsatzConfig, HamiltonianSpec, NnConfig, PostProcessing,
    ShotConfig, TrainingConfig, TrainingTrace, VqeConfig, VqeResult,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeName {
    Fig1Divergence,
    Fig3ConstrainedSweep,
    Fig4aSizeSweep,
    Fig4bUvqnheVsVqnhe,
}

impl RecipeName {
    pub const ALL: [RecipeName; 4] = [
        RecipeName::Fig1Divergence,
        RecipeName::Fig3ConstrainedSweep,
        RecipeName::Fig4aSizeSweep,
        RecipeName::Fig4bUvqnheVsVqnhe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeName::Fig1Divergence => "fig1_divergence",
            RecipeName::Fig3ConstrainedSweep => "fig3_constrained_sweep",
            RecipeName::Fig4aSizeSweep => "fig4a_size_sweep",
            RecipeName::Fig4bUvqnheVsVqnhe => "fig4b_uvqnhe_vs_vqnhe",
        }
    }
}

impl fmt::Display for RecipeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecipeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RecipeName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown recipe {s:?}")))
    }
}

/// How many shots each circuit receives at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ShotRule {
    Fixed { ansatz: u64, term: u64 },
    /// `floor(9 r^4 / (4 epsilon^2))` for both circuit kinds.
    RangeFormula { epsilon: f64 },
    Exact,
}

impl ShotRule {
    fn resolve(&self, r: Option<f64>) -> Result<(u64, u64, bool)> {
        match *self {
            ShotRule::Fixed { ansatz, term } => Ok((ansatz, term, false)),
            ShotRule::RangeFormula { epsilon } => {
                let r = r.ok_or_else(|| Error::InvalidArgument("range formula needs a bounded network".into()))?;
                let n = crate::diagnostics::shot_budget_truncated(r, epsilon)?;
                Ok((n, n, false))
            }
            ShotRule::Exact => Ok((1, 1, true)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecipe {
    pub name: RecipeName,
    pub n_values: Vec<usize>,
    /// `null` entries train an unconstrained amplitude network.
    pub r_values: Vec<Option<f64>>,
    pub shots: ShotRule,
    pub seeds: usize,
    pub kinds: Vec<PostProcessing>,
    #[serde(default = "default_field")]
    pub field: f64,
    #[serde(default)]
    pub boundary: Boundary,
    pub layers: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub refresh: bool,
    #[serde(default)]
    pub track_exact: bool,
    #[serde(default)]
    pub vqe: VqeConfig,
}

fn default_field() -> f64 {
    1.0
}

fn default_hidden() -> usize {
    64
}

impl ExperimentRecipe {
    pub fn preset(name: RecipeName) -> Self {
        let base = ExperimentRecipe {
            name,
            n_values: vec![7],
            r_values: vec![None],
            shots: ShotRule::Fixed { ansatz: 500, term: 500 },
            seeds: 10,
            kinds: vec![PostProcessing::Vqnhe],
            field: 1.0,
            boundary: Boundary::Open,
            layers: 1,
            epochs: 200,
            learning_rate: 0.01,
            hidden: 64,
            activation: Activation::Tanh,
            refresh: false,
            track_exact: false,
            vqe: VqeConfig::default(),
        };
        match name {
            RecipeName::Fig1Divergence => base,
            RecipeName::Fig3ConstrainedSweep => ExperimentRecipe {
                n_values: vec![10],
                r_values: [1.5, 2.5, 3.5, 4.5, 5.5].into_iter().map(Some).collect(),
                shots: ShotRule::RangeFormula { epsilon: 0.05 },
                seeds: 5,
                refresh: true,
                ..base
            },
            RecipeName::Fig4aSizeSweep => ExperimentRecipe {
                n_values: vec![8, 10, 12],
                r_values: vec![Some(3.0)],
                shots: ShotRule::Fixed { ansatz: 10_000, term: 10_000 },
                seeds: 5,
                ..base
            },
            RecipeName::Fig4bUvqnheVsVqnhe => ExperimentRecipe {
                n_values: vec![12],
                r_values: vec![Some(3.0)],
                shots: ShotRule::Fixed { ansatz: 10_000, term: 10_000 },
                seeds: 5,
                layers: 2,
                kinds: vec![PostProcessing::Vqnhe, PostProcessing::Uvqnhe],
                track_exact: true,
                ..base
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let recipe: ExperimentRecipe = serde_json::from_str(text).map_err(|e| Error::json("recipe", e))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recipe serializes")
    }

    /// The preset with top-level fields replaced by those of `overrides`.
    pub fn with_overrides(name: RecipeName, overrides: &str) -> Result<Self> {
        let patch: serde_json::Value = serde_json::from_str(overrides).map_err(|e| Error::json("recipe config", e))?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(Error::InvalidArgument("recipe config must be a JSON object".into()));
        };
        let mut base = serde_json::to_value(Self::preset(name)).expect("recipe serializes");
        let fields = base.as_object_mut().expect("recipe is an object");
        for (key, value) in patch {
            if !fields.contains_key(&key) {
                return Err(Error::InvalidArgument(format!("unknown recipe field {key:?}")));
            }
            fields.insert(key, value);
        }
        let recipe: ExperimentRecipe = serde_json::from_value(base).map_err(|e| Error::json("recipe config", e))?;
        if recipe.name != name {
            return Err(Error::InvalidArgument(format!("config names recipe {} but {name} was requested", recipe.name)));
        }
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.r_values.is_empty() || self.kinds.is_empty() || self.seeds == 0 {
            return Err(Error::InvalidArgument("recipe grid is empty".into()));
        }
        for point in self.grid(0)? {
            point.config.validate().map_err(|e| Error::InvalidArgument(format!("grid point {}: {e}", point.id)))?;
        }
        Ok(())
    }

    /// Every grid point with a fully resolved training configuration. Seeds
    /// depend on the seed index only, so points that differ in `r` or in the
    /// post-processing share their circuit.
    pub fn grid(&self, master_seed: u64) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &r in &self.r_values {
                let (ansatz, term, exact) = self.shots.resolve(r)?;
                for seed_index in 0..self.seeds {
                    let seed = derive_seed(master_seed, self.name.as_str(), seed_index as u64);
                    for &kind in &self.kinds {
                        let config = TrainingConfig {
                            hamiltonian: HamiltonianSpec::Tfim { n, h: self.field, boundary: self.boundary },
                            ansatz: AnsatzConfig { layers: self.layers, boundary: self.boundary },
                            vqe: self.vqe,
                            nn: NnConfig {
                                r,
                                epochs: self.epochs,
                                learning_rate: self.learning_rate,
                                hidden: self.hidden,
                                activation: self.activation,
                                track_exact: self.track_exact,
                            },
                            shots: ShotConfig { exact, ansatz, term, refresh: self.refresh },
                            seed,
                            record_wall_time: false,
                        };
                        let r_label = r.map_or("free".to_string(), |r| format!("{r}"));
                        let kind_label = match kind {
                            PostProcessing::Vqnhe => "vqnhe",
                            PostProcessing::Uvqnhe => "uvqnhe",
                        };
                        out.push(GridPoint {
                            id: format!("n{n}_r{r_label}_s{seed_index}_{kind_label}"),
                            n,
                            r,
                            seed_index,
                            kind,
                            config,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub id: String,
    pub n: usize,
    pub r: Option<f64>,
    pub seed_index: usize,
    pub kind: PostProcessing,
    pub config: TrainingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub id: String,
    pub n: usize,
    pub r: Option<f64>,
    pub seed_index: usize,
    pub seed: u64,
    pub kind: PostProcessing,
    pub shots_ansatz: Option<u64>,
    pub shots_term: Option<u64>,
    pub e_gs: f64,
    /// Exact energy of the optimized circuit.
    pub e_vqe: f64,
    /// Empirical energy of the optimized circuit on the training dataset.
    pub e_vqe_empirical: f64,
    pub vqe_std_error: Option<f64>,
    pub final_energy: Option<f64>,
    pub final_std_error: Option<f64>,
    pub final_exact_energy: Option<f64>,
    pub min_energy: Option<f64>,
    pub epochs_run: usize,
    pub termination: crate::training::Termination,
    pub crossed_below_gs: bool,
    pub inclusion_holds: Option<bool>,
    pub missing_count: Option<usize>,
    pub witness: Option<UnboundednessWitness>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeReport {
    pub recipe: ExperimentRecipe,
    pub master_seed: u64,
    pub version: String,
    pub ground_energies: BTreeMap<usize, f64>,
    pub points: Vec<PointSummary>,
    #[serde(skip)]
    pub traces: BTreeMap<String, TrainingTrace>,
}

impl RecipeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn points_for(&self, kind: PostProcessing) -> impl Iterator<Item = &PointSummary> {
        self.points.iter().filter(move |p| p.kind == kind)
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Runs every grid point. When `out` is given, writes one trace CSV per point,
/// the JSON summary and recipe-specific plot tables.
pub fn run_recipe(recipe: &ExperimentRecipe, master_seed: u64, out: Option<&Path>) -> Result<RecipeReport> {
    recipe.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    let grid = recipe.grid(master_seed)?;
    let mut ground_energies = BTreeMap::new();
    let mut hamiltonians: BTreeMap<usize, Hamiltonian> = BTreeMap::new();
    for &n in &recipe.n_values {
        let h = HamiltonianSpec::Tfim { n, h: recipe.field, boundary: recipe.boundary }.build()?;
        ground_energies.insert(n, ground_state(&h)?.e_gs);
        hamiltonians.insert(n, h);
    }
    let mut vqe_cache: BTreeMap<(usize, u64), VqeResult> = BTreeMap::new();
    let mut points = Vec::with_capacity(grid.len());
    let mut traces = BTreeMap::new();
    let mut output_tables: Vec<(String, String)> = Vec::new();
    for point in &grid {
        let h = &hamiltonians[&point.n];
        let e_gs = ground_energies[&point.n];
        let cfg = &point.config;
        let key = (point.n, cfg.seed);
        let vqe = match vqe_cache.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(run_vqe(cfg)?),
        };
        let state = ansatz_state(&cfg.ansatz_spec()?, &vqe.params)?;
        let with_imag = point.kind == PostProcessing::Uvqnhe;
        let (data, _) = build_dataset(&state, h, &cfg.shots, with_imag, cfg.seed, "nn-samples")?;
        let vqe_emp = vqe_energy(&data, h)?;
        let support = (point.kind == PostProcessing::Vqnhe).then(|| support_report(&data));
        let witness = match &support {
            Some(s) if !s.inclusion_holds => unboundedness_witness(&data, h, &|_| 1.0)?,
            _ => None,
        };
        let trained = match point.kind {
            PostProcessing::Vqnhe => train_dnp_on(h, &state, &data, cfg),
            PostProcessing::Uvqnhe => train_uvqnhe_on(h, &state, &data, cfg),
        };
        let (trace, error) = match trained {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let energies = trace.as_ref().map(|t| t.records.iter().map(|r| r.energy).collect::<Vec<_>>());
        let min_energy = energies.as_ref().and_then(|e| e.iter().copied().reduce(f64::min));
        let last = trace.as_ref().and_then(|t| t.last_energy());
        points.push(PointSummary {
            id: point.id.clone(),
            n: point.n,
            r: point.r,
            seed_index: point.seed_index,
            seed: cfg.seed,
            kind: point.kind,
            shots_ansatz: (!cfg.shots.exact).then_some(cfg.shots.ansatz),
            shots_term: (!cfg.shots.exact).then_some(cfg.shots.term),
            e_gs,
            e_vqe: vqe.exact_energy,
            e_vqe_empirical: vqe_emp.value,
            vqe_std_error: vqe_emp.std_error,
            final_energy: last,
            final_std_error: trace.as_ref().and_then(|t| t.final_std_error),
            final_exact_energy: trace.as_ref().and_then(|t| t.final_exact_energy),
            min_energy,
            epochs_run: trace.as_ref().map_or(0, |t| t.records.len()),
            termination: trace.as_ref().map_or(crate::training::Termination::Nan, |t| t.termination),
            crossed_below_gs: min_energy.is_some_and(|m| m < e_gs) || last.is_some_and(|e| e < e_gs),
            inclusion_holds: support.as_ref().map(|s| s.inclusion_holds),
            missing_count: support.as_ref().map(|s| s.missing.len()),
            witness,
            error,
        });
        if let Some(trace) = trace {
            if let Some(dir) = out {
                trace.write_csv_file(&dir.join(format!("{}.csv", point.id)))?;
                if let Some(net) = &trace.network {
                    write_file(&dir.join(format!("{}_network.json", point.id)), net.to_checkpoint_json().as_bytes())?;
                }
            }
            if recipe.name == RecipeName::Fig1Divergence {
                if let (Some(net), Some(s)) = (&trace.network, &support) {
                    output_tables.push((format!("{}_outputs.csv", point.id), network_outputs_csv(net, s)?));
                }
            }
            traces.insert(point.id.clone(), trace);
        }
    }
    let report = RecipeReport {
        recipe: recipe.clone(),
        master_seed,
        version: VERSION.to_string(),
        ground_energies,
        points,
        traces,
    };
    if let Some(dir) = out {
        write_file(&dir.join("summary.json"), report.to_json().as_bytes())?;
        write_file(&dir.join("points.csv"), points_csv(&report)?.as_bytes())?;
        for (name, body) in output_tables {
            write_file(&dir.join(name), body.as_bytes())?;
        }
    }
    Ok(report)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per grid point, including the deviations from the ground energy.
fn points_csv(report: &RecipeReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "n",
        "r",
        "seed_index",
        "kind",
        "shots",
        "e_gs",
        "e_vqe",
        "final_energy",
        "final_exact_energy",
        "final_minus_gs",
        "vqe_minus_gs",
        "termination",
        "inclusion_flag",
    ])?;
    for p in &report.points {
        w.write_record([
            p.id.clone(),
            p.n.to_string(),
            opt(p.r),
            p.seed_index.to_string(),
            format!("{:?}", p.kind).to_lowercase(),
            opt(p.shots_term),
            p.e_gs.to_string(),
            p.e_vqe.to_string(),
            opt(p.final_energy),
            opt(p.final_exact_energy),
            opt(p.final_energy.map(|e| e - p.e_gs)),
            (p.e_vqe - p.e_gs).to_string(),
            format!("{:?}", p.termination).to_lowercase(),
            opt(p.inclusion_holds.map(|b| b as u8)),
        ])?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::io("csv buffer", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Final network outputs per bit string, labelled by whether the ansatz
/// readout observed the string.
pub fn network_outputs_csv(net: &NeuralNet, support: &crate::diagnostics::SupportReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "bits", "output", "measured", "in_numerator"])?;
    for s in 0..1usize << support.n {
        w.write_record([
            s.to_string(),
            format_bits(s, support.n),
            net.forward(s).to_string(),
            (support.ansatz_support.contains(&s) as u8).to_string(),
            (support.numerator_support.contains(&s) as u8).to_string(),
        ])?;
    }
    csv_string(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponSummary {
    pub n: usize,
    pub numerator_support: u64,
    pub expected_shots: f64,
    pub delta: f64,
    pub high_probability_shots: u64,
    pub ansatz_shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub mode: crate::neural::OutputMode,
    /// `max f / min f` over all bit strings.
    pub gamma: f64,
    /// `r^2` for bounded networks.
    pub gamma_cap: Option<f64>,
    /// Overlap between the readout distribution and its reweighting by `f`.
    pub divergence: DivergenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseReport {
    pub version: String,
    pub files: Vec<String>,
    pub support: serde_json::Value,
    pub coupon: CouponSummary,
    pub network: Option<NetworkSummary>,
    pub witness: Option<UnboundednessWitness>,
}

impl DiagnoseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Reads sample files: each holds one sample set object or an array of them.
pub fn load_samples(files: &[PathBuf]) -> Result<SampleBundle> {
    let mut sets = Vec::new();
    for path in files {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(&name, e))?;
        let items = match value {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        for (k, item) in items.into_iter().enumerate() {
            let set = SampleSet::from_json(&item.to_string())
                .map_err(|e| Error::InvalidArgument(format!("{name}: sample set {k}: {e}")))?;
            sets.push(set);
        }
    }
    SampleBundle::from_sets(sets)
}

/// Support, coupon and (with a checkpoint) dynamic-range diagnostics for
/// serialized samples. A Hamiltonian enables the unboundedness search.
pub fn diagnose(
    files: &[PathBuf],
    checkpoint: Option<&Path>,
    hamiltonian: Option<&Hamiltonian>,
    delta: f64,
) -> Result<DiagnoseReport> {
    let bundle = load_samples(files)?;
    let data = Dataset::from_bundle(&bundle);
    let n = data.n();
    let support = support_report(&data);
    let n_m = support.numerator_support.len() as u64;
    let coupon = CouponSummary {
        n,
        numerator_support: n_m,
        expected_shots: coupon_expected_shots(n, n_m)?,
        delta,
        high_probability_shots: coupon_highprob_shots(n, n_m, delta)?,
        ansatz_shots: bundle.ansatz.shots(),
    };
    let network = match checkpoint {
        Some(path) => {
            let name = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
            let net = NeuralNet::from_checkpoint_json(&text).map_err(|e| Error::InvalidArgument(format!("{name}: {e}")))?;
            if net.n_in() != n {
                return Err(Error::SizeMismatch { expected: n, actual: net.n_in() });
            }
            let outputs: Vec<f64> = (0..1usize << n).map(|s| net.forward(s)).collect();
            let (lo, hi) = outputs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &f| (lo.min(f), hi.max(f)));
            let q = dense_distribution(&data.ansatz);
            let p = reweight(&q, &outputs)?;
            Some(NetworkSummary {
                mode: net.mode(),
                gamma: hi / lo,
                gamma_cap: net.mode().range_parameter().map(|r| r * r),
                divergence: divergence_report(&p, &q)?,
            })
        }
        None => None,
    };
    let witness = match hamiltonian {
        Some(h) => unboundedness_witness(&data, h, &|_| 1.0)?,
        None => None,
    };
    Ok(DiagnoseReport {
        version: VERSION.to_string(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
        support: support.to_value(),
        coupon,
        network,
        witness,
    })
}

fn dense_distribution(freq: &Frequencies) -> Vec<f64> {
    let mut q = vec![0.0; 1 << freq.n()];
    for &(s, w) in freq.entries() {
        q[s] = w;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_names_round_trip() {
        for name in RecipeName::ALL {
            assert_eq!(name.as_str().parse::<RecipeName>().unwrap(), name);
            let preset = ExperimentRecipe::preset(name);
            assert_eq!(ExperimentRecipe::from_json(&preset.to_json()).unwrap(), preset);
        }
        assert!("fig9".parse::<RecipeName>().is_err());
    }

    #[test]
    fn overrides_replace_top_level_fields() {
        let r = ExperimentRecipe::with_overrides(RecipeName::Fig4aSizeSweep, r#"{"seeds": 2, "n_values": [4, 6]}"#).unwrap();
        assert_eq!(r.seeds, 2);
        assert_eq!(r.n_values, vec![4, 6]);
        assert_eq!(r.r_values, vec![Some(3.0)]);
        assert!(ExperimentRecipe::with_overrides(RecipeName::Fig4aSizeSweep, r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentRecipe::with_overrides(RecipeName::Fig4aSizeSweep, r#"{"seeds": 0}"#).is_err());
        assert!(ExperimentRecipe::with_overrides(RecipeName::Fig4aSizeSweep, r#"{"name": "fig1_divergence"}"#).is_err());
    }

    #[test]
    fn constrained_sweep_uses_published_shot_counts() {
        let grid = ExperimentRecipe::preset(RecipeName::Fig3ConstrainedSweep).grid(1).unwrap();
        let point = grid.iter().find(|p| p.r == Some(3.5)).unwrap();
        assert_eq!(point.config.shots.term, 135_056);
        assert_eq!(point.config.shots.ansatz, 135_056);
        assert_eq!(grid.len(), 25);
    }

    #[test]
    fn grid_seeds_are_shared_across_ranges() {
        let grid = ExperimentRecipe::preset(RecipeName::Fig3ConstrainedSweep).grid(7).unwrap();
        let a: Vec<u64> = grid.iter().filter(|p| p.r == Some(1.5)).map(|p| p.config.seed).collect();
        let b: Vec<u64> = grid.iter().filter(|p| p.r == Some(5.5)).map(|p| p.config.seed).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn small_recipe_writes_outputs_deterministically() {
        let mut recipe = ExperimentRecipe::preset(RecipeName::Fig1Divergence);
        recipe.n_values = vec![3];
        recipe.seeds = 2;
        recipe.epochs = 5;
        recipe.hidden = 4;
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_recipe(&recipe, 11, Some(dir_a.path())).unwrap();
        run_recipe(&recipe, 11, Some(dir_b.path())).unwrap();
        assert_eq!(a.points.len(), 2);
        for point in &a.points {
            let name = format!("{}.csv", point.id);
            let x = std::fs::read(dir_a.path().join(&name)).unwrap();
            assert_eq!(x, std::fs::read(dir_b.path().join(&name)).unwrap());
            assert!(dir_a.path().join(format!("{}_outputs.csv", point.id)).exists());
        }
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir_a.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["version"], VERSION);
        assert_eq!(summary["recipe"]["name"], "fig1_divergence");
    }
}
