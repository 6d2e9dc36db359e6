use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use uvqnhe_core::experiments::{diagnose, run_recipe, ExperimentRecipe, RecipeName, ShotRule, VERSION};
use uvqnhe_core::groundtruth::ground_state;
use uvqnhe_core::training::{run_pipeline, write_params_checkpoint, PostProcessing, TrainingConfig};

#[derive(Parser, Debug)]
#[command(name = "uvqnhe", version, about = "VQE with neural post-processing on a statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Use exact Born probabilities instead of shots.
    #[arg(long, global = true)]
    exact: bool,
    #[arg(long, global = true, value_name = "INT")]
    shots_ansatz: Option<u64>,
    #[arg(long, global = true, value_name = "INT")]
    shots_term: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize the circuit only.
    Vqe(ModelArgs),
    /// VQE followed by amplitude post-processing.
    Vqnhe(ModelArgs),
    /// VQE followed by phase post-processing.
    Uvqnhe(ModelArgs),
    /// Support, overlap and coupon diagnostics for sample files.
    Diagnose(DiagnoseArgs),
    /// Run a named experiment grid.
    Recipe {
        /// fig1_divergence, fig3_constrained_sweep, fig4a_size_sweep or fig4b_uvqnhe_vs_vqnhe.
        name: String,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Transverse-field Ising chain length when no config is given.
    #[arg(long, default_value_t = 6)]
    qubits: usize,
    /// Transverse field when no config is given.
    #[arg(long, default_value_t = 1.0)]
    field: f64,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Sample files (one sample set or an array of them per file).
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Network checkpoint to evaluate against the samples.
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Failure probability for the coupon bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(config_err)
}

fn write_text(path: &Path, body: &str) -> Outcome<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display())).map_err(runtime_err)
}

fn prepare_out(common: &Common, default: &str) -> Outcome<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).map_err(runtime_err)?;
    Ok(dir)
}

fn training_config(common: &Common, model: &ModelArgs) -> Outcome<TrainingConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = read_text(path)?;
            TrainingConfig::from_json(&text).with_context(|| format!("config {}", path.display())).map_err(config_err)?
        }
        None => TrainingConfig::tfim(model.qubits, model.field),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.exact {
        config.shots.exact = true;
        config.vqe.exact = true;
    }
    if let Some(n) = common.shots_ansatz {
        config.shots.ansatz = n;
        config.shots.exact = false;
    }
    if let Some(n) = common.shots_term {
        config.shots.term = n;
        config.shots.exact = false;
    }
    if common.exact && (common.shots_ansatz.is_some() || common.shots_term.is_some()) {
        return Err(config_err(anyhow!("--exact conflicts with explicit shot counts")));
    }
    config.validate().map_err(config_err)?;
    Ok(config)
}

fn run_model(common: &Common, model: &ModelArgs, kind: Option<PostProcessing>) -> Outcome<()> {
    let config = training_config(common, model)?;
    let label = match kind {
        None => "vqe",
        Some(PostProcessing::Vqnhe) => "vqnhe",
        Some(PostProcessing::Uvqnhe) => "uvqnhe",
    };
    let out = prepare_out(common, &format!("runs/{label}"))?;
    let h = config.hamiltonian.build().map_err(config_err)?;
    let truth = ground_state(&h).map_err(runtime_err)?;
    let result = run_pipeline(&config, kind).map_err(runtime_err)?;

    write_text(&out.join("config.json"), &config.to_json())?;
    write_params_checkpoint(&out.join("theta.json"), &result.vqe.params).map_err(runtime_err)?;
    let mut vqe_csv = String::from("evaluation,best_energy\n");
    for (k, e) in result.vqe.trace.iter().enumerate() {
        vqe_csv.push_str(&format!("{},{}\n", k + 1, e));
    }
    write_text(&out.join("vqe_trace.csv"), &vqe_csv)?;
    if let Some(samples) = &result.samples {
        write_text(&out.join("samples.json"), &samples.to_json())?;
    }
    if let Some(trace) = &result.trace {
        trace.write_csv_file(&out.join("trace.csv")).map_err(runtime_err)?;
        if let Some(net) = &trace.network {
            write_text(&out.join("network.json"), &net.to_checkpoint_json())?;
        }
    }
    let trace = result.trace.as_ref();
    let summary = json!({
        "version": VERSION,
        "command": label,
        "config": config,
        "e_gs": truth.e_gs,
        "vqe": {
            "energy": result.vqe.energy,
            "exact_energy": result.vqe.exact_energy,
            "evaluations": result.vqe.evaluations,
            "status": result.vqe.status,
            "empirical": result.vqe_empirical,
        },
        "final_energy": trace.and_then(|t| t.last_energy()),
        "final_std_error": trace.and_then(|t| t.final_std_error),
        "final_exact_energy": trace.and_then(|t| t.final_exact_energy),
        "termination": trace.map(|t| t.termination),
        "support": result.support,
    });
    write_text(&out.join("summary.json"), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;

    println!("E_gs            {:.6}", truth.e_gs);
    println!("VQE (exact)     {:.6}  [{} evaluations]", result.vqe.exact_energy, result.vqe.evaluations);
    if let Some(t) = trace {
        if let Some(e) = t.last_energy() {
            println!("final energy    {e:.6}  ({:?})", t.termination);
        }
        if let Some(e) = t.final_exact_energy {
            println!("final (exact)   {e:.6}");
        }
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn run_diagnose(common: &Common, args: &DiagnoseArgs) -> Outcome<()> {
    let hamiltonian = match &common.config {
        Some(path) => {
            let text = read_text(path)?;
            let config = TrainingConfig::from_json(&text).with_context(|| format!("config {}", path.display())).map_err(config_err)?;
            Some(config.hamiltonian.build().map_err(config_err)?)
        }
        None => None,
    };
    let report = diagnose(&args.files, args.checkpoint.as_deref(), hamiltonian.as_ref(), args.delta).map_err(|e| {
        let e = anyhow::Error::from(e);
        match e.downcast_ref::<uvqnhe_core::Error>() {
            Some(uvqnhe_core::Error::Json { .. } | uvqnhe_core::Error::Io { .. } | uvqnhe_core::Error::InvalidArgument(_)) => {
                config_err(e)
            }
            _ => runtime_err(e),
        }
    })?;
    let out = prepare_out(common, "runs/diagnose")?;
    let body = report.to_json();
    write_text(&out.join("diagnose.json"), &body)?;
    println!("{body}");
    Ok(())
}

fn run_named_recipe(common: &Common, name: &str) -> Outcome<()> {
    let name: RecipeName = name.parse().map_err(config_err)?;
    let seed = common.seed.ok_or_else(|| config_err(anyhow!("recipes need an explicit --seed")))?;
    let mut recipe = match &common.config {
        Some(path) => {
            let text = read_text(path)?;
            ExperimentRecipe::with_overrides(name, &text).with_context(|| format!("config {}", path.display())).map_err(config_err)?
        }
        None => ExperimentRecipe::preset(name),
    };
    if common.exact {
        recipe.shots = ShotRule::Exact;
    }
    if common.shots_ansatz.is_some() || common.shots_term.is_some() {
        if common.exact {
            return Err(config_err(anyhow!("--exact conflicts with explicit shot counts")));
        }
        let (a, t) = match recipe.shots {
            ShotRule::Fixed { ansatz, term } => (ansatz, term),
            _ => (1000, 1000),
        };
        recipe.shots = ShotRule::Fixed { ansatz: common.shots_ansatz.unwrap_or(a), term: common.shots_term.unwrap_or(t) };
    }
    recipe.validate().map_err(config_err)?;
    let out = prepare_out(common, &format!("runs/{name}"))?;
    let report = run_recipe(&recipe, seed, Some(&out)).map_err(runtime_err)?;
    for p in &report.points {
        let fin = p.final_energy.map_or("-".to_string(), |e| format!("{e:.6}"));
        println!("{:<28} E_gs {:.6}  VQE {:.6}  final {fin}  {:?}", p.id, p.e_gs, p.e_vqe, p.termination);
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Vqe(m) => run_model(&cli.common, m, None),
        Command::Vqnhe(m) => run_model(&cli.common, m, Some(PostProcessing::Vqnhe)),
        Command::Uvqnhe(m) => run_model(&cli.common, m, Some(PostProcessing::Uvqnhe)),
        Command::Diagnose(args) => run_diagnose(&cli.common, args),
        Command::Recipe { name } => run_named_recipe(&cli.common, name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
