use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use kex_core::experiments::{
    run_experiment, ExperimentConfig, ExperimentError, Outcome, RealizationConfig, RealizationMode,
    RobustPolicy, DEFAULT_BINS, DEFAULT_TRIALS,
};
use kex_core::fairness::{evaluate_variable_gamma, evaluate_weighted_fair, FairnessError};
use kex_core::instance::{
    generate_instance, parse_instance, serialize_instance, CompatibilityGraph,
};
use kex_core::matchopt::{self, Formulation, MatchError};
use kex_core::milp::SolveStatus;
use kex_core::robust_exist::{self, solve_robust_existence};
use kex_core::robust_weight::{
    self, solve_robust_weight_constant, solve_robust_weight_variable, Method, RobustError,
};
use kex_core::FormulationConfig;

#[derive(Debug, Parser)]
#[command(
    name = "kex",
    version,
    about = "Kidney-exchange clearing under uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum-weight clearing.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Robust clearing under weight or existence uncertainty.
    Robust {
        instance: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        #[arg(long, value_enum, default_value_t = Model::Weight)]
        model: Model,
        /// Uncertainty budget.
        #[arg(long)]
        gamma: Option<f64>,
        /// Protection level (weight model only).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Solution method for a constant weight budget.
        #[arg(long, value_enum, default_value_t = MethodArg::Enumerate)]
        method: MethodArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Weighted fairness towards highly-sensitized patients.
    Fair {
        instance: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        /// CPRA threshold for high sensitization.
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        /// Weight factor γ on edges into highly-sensitized pairs.
        #[arg(long)]
        gamma_weight: Option<f64>,
        /// Price-of-fairness target; with --pf-min, γ becomes a variable.
        #[arg(long, requires = "pf_min")]
        pof_max: Option<f64>,
        /// Fair-score target; with --pof-max, γ becomes a variable.
        #[arg(long, requires = "pof_max")]
        pf_min: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte-Carlo comparison of robust and non-robust matchings.
    Simulate {
        instance: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        #[arg(long, value_enum, default_value_t = Model::Existence)]
        model: Model,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of probabilistic edges (weight model).
        #[arg(long, default_value_t = 0.5)]
        alpha_frac: f64,
        /// Number of failing edges per realization (existence model).
        #[arg(long, default_value_t = 1)]
        gamma_fail: usize,
        /// Robust budget; defaults to --gamma-fail for the existence model.
        #[arg(long)]
        gamma: Option<f64>,
        /// Protection level for the weight model.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Worker threads for the trials.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Random instance from the blood-type / CPRA generator.
    Generate {
        #[arg(long)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        ndds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct FormulationArgs {
    #[arg(long, value_enum, default_value_t = FormulationArg::Picef)]
    formulation: FormulationArg,
    #[arg(long, default_value_t = 3)]
    cycle_cap: usize,
    #[arg(long, default_value_t = 4)]
    chain_cap: usize,
    /// Minimum chain length (PI-TSP and existence-robust solves).
    #[arg(long, default_value_t = 0)]
    min_chain_len: usize,
}

impl FormulationArgs {
    fn config(&self) -> FormulationConfig {
        FormulationConfig {
            formulation: match self.formulation {
                FormulationArg::Picef => Formulation::Picef,
                FormulationArg::Pitsp => Formulation::Pitsp,
            },
            cycle_cap: self.cycle_cap,
            chain_cap: self.chain_cap,
            min_chain_len: self.min_chain_len,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormulationArg {
    Picef,
    Pitsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Weight,
    Existence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Enumerate,
    Linearized,
    Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible(String),
}

impl From<MatchError> for Failure {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::NotOptimal(SolveStatus::Infeasible) => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<RobustError> for Failure {
    fn from(e: RobustError) -> Self {
        match e {
            RobustError::Match(m) => m.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<FairnessError> for Failure {
    fn from(e: FairnessError) -> Self {
        match e {
            FairnessError::Match(m) => m.into(),
            FairnessError::EmptyInterval { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Robust(r) => r.into(),
            ExperimentError::Match(m) => m.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<CompatibilityGraph, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    Err(Failure::Usage(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn emit_json(v: &Value, output: &OutputArgs) -> Result<(), Failure> {
    if output.format != Format::Json {
        return Err(Failure::Usage(
            "only --format json is available for this command".into(),
        ));
    }
    let text = serde_json::to_string_pretty(v).expect("serializable report");
    emit(&(text + "\n"), output.out.as_deref())
}

fn config(args: &FormulationArgs) -> Result<FormulationConfig, Failure> {
    let cfg = args.config();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            formulation,
            output,
        } => {
            let cfg = config(&formulation)?;
            let g = load(&instance)?;
            let m = matchopt::solve(&g, &cfg)?;
            emit_json(&m.to_json(), &output)
        }
        Command::Robust {
            instance,
            formulation,
            model,
            gamma,
            epsilon,
            method,
            output,
        } => {
            let cfg = config(&formulation)?;
            let report = match (model, gamma, epsilon) {
                (_, Some(_), Some(_)) => {
                    return Err(Failure::Usage(
                        "give exactly one of --gamma and --epsilon".into(),
                    ))
                }
                (Model::Weight, Some(gamma), None) => {
                    let method = match method {
                        MethodArg::Enumerate => Method::Enumerate,
                        MethodArg::Linearized => Method::Linearized,
                        MethodArg::Price => Method::BranchAndPrice,
                    };
                    let g = load(&instance)?;
                    let m = solve_robust_weight_constant(&g, &cfg, gamma, method)?;
                    robust_weight::report_json(&m, gamma, None)
                }
                (Model::Weight, None, Some(eps)) => {
                    let g = load(&instance)?;
                    let m = solve_robust_weight_variable(&g, &cfg, eps)?;
                    let gamma = robust_weight::budget_beta(m.num_edges(), eps)?;
                    robust_weight::report_json(&m, gamma, Some(eps))
                }
                (Model::Existence, Some(gamma), None) => {
                    let g = load(&instance)?;
                    let m = solve_robust_existence(&g, &cfg, gamma)?;
                    robust_exist::report_json(&m, gamma)
                }
                (Model::Existence, None, Some(_)) => {
                    return Err(Failure::Usage(
                        "--epsilon applies to the weight model only".into(),
                    ))
                }
                (_, None, None) => {
                    return Err(Failure::Usage(
                        "give exactly one of --gamma and --epsilon".into(),
                    ))
                }
            };
            emit_json(&report, &output)
        }
        Command::Fair {
            instance,
            formulation,
            tau,
            gamma_weight,
            pof_max,
            pf_min,
            output,
        } => {
            let cfg = config(&formulation)?;
            let report = match (gamma_weight, pof_max, pf_min) {
                (Some(gamma), None, None) => {
                    evaluate_weighted_fair(&load(&instance)?, &cfg, tau, gamma)?
                }
                (None, Some(p), Some(f)) => {
                    evaluate_variable_gamma(&load(&instance)?, &cfg, tau, f, p)?
                }
                _ => {
                    return Err(Failure::Usage(
                        "give either --gamma-weight or both --pof-max and --pf-min".into(),
                    ))
                }
            };
            emit_json(&report.to_json(), &output)
        }
        Command::Simulate {
            instance,
            formulation,
            model,
            trials,
            seed,
            alpha_frac,
            gamma_fail,
            gamma,
            epsilon,
            bins,
            jobs,
            output,
        } => {
            let formulation = config(&formulation)?;
            let (mode, policy) = match (model, gamma, epsilon) {
                (_, Some(_), Some(_)) => {
                    return Err(Failure::Usage(
                        "give at most one of --gamma and --epsilon".into(),
                    ))
                }
                (Model::Existence, _, Some(_)) => {
                    return Err(Failure::Usage(
                        "--epsilon applies to the weight model only".into(),
                    ))
                }
                (Model::Existence, gamma, None) => (
                    RealizationMode::Existence { gamma_fail },
                    RobustPolicy::Existence(gamma.unwrap_or(gamma_fail as f64)),
                ),
                (Model::Weight, Some(gamma), None) => (
                    RealizationMode::Weight { alpha_frac },
                    RobustPolicy::WeightBudget(gamma),
                ),
                (Model::Weight, None, eps) => (
                    RealizationMode::Weight { alpha_frac },
                    RobustPolicy::WeightProtection(eps.unwrap_or(0.1)),
                ),
            };
            let cfg = ExperimentConfig {
                formulation,
                policy,
                realization: RealizationConfig { mode, trials, seed },
                bins,
                jobs: jobs.max(1),
            };
            cfg.realization.validate()?;
            let outcome = run_experiment(&load(&instance)?, &cfg)?;
            if let Outcome::Skipped { reason } = &outcome {
                eprintln!("instance skipped: {reason}");
            }
            match output.format {
                Format::Json => {
                    let text = serde_json::to_string_pretty(&outcome.to_json(&cfg))
                        .expect("serializable report");
                    emit(&(text + "\n"), output.out.as_deref())
                }
                Format::Csv => emit(&outcome.to_csv(), output.out.as_deref()),
            }
        }
        Command::Generate {
            pairs,
            ndds,
            seed,
            out,
        } => {
            let g = generate_instance(pairs, ndds, seed);
            emit(&(serialize_instance(&g) + "\n"), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
    }
}
