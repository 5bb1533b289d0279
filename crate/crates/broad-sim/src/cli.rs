//! Command-line interface: solve one scenario, sweep a parameter, or audit
//! a stored plan. Exit codes: 0 success, 1 invalid input, 2 solver failure.

use crate::baselines::{baseline_center_fixed, baseline_grid_search};
use crate::config::apply_config_text;
use crate::emit::{emit_results, format_sig6, OutputFormat};
use crate::planfile::{read_plan_file, write_plan_file, PlanFile};
use crate::scenario::{generate_scenario, ScenarioSpec};
use crate::sweep::{run_sweep, solve_broad, Algorithm, SweepOptions, SweepSpec, SweepVariable};
use broad_core::{validate_plan, AttenuationModel, BroadPlan};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

/// User population with `--full-scale`.
const FULL_SCALE_USERS: usize = 500;

/// Default sweep points per variable, km.
const DELTA_SWEEP_DEFAULT: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const VISIBILITY_SWEEP_DEFAULT: [f64; 4] = [1.0, 2.0, 3.0, 5.0];

#[derive(Parser)]
#[command(
    name = "broad-sim",
    version,
    about = "Backhaul-aware drone base station placement experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated scenario and report the resulting plan.
    Solve(SolveArgs),
    /// Run algorithms over a sweep grid and emit one row per trial.
    Sweep(SweepArgs),
    /// Audit a stored plan file against every deployment constraint.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Broad,
    CenterFixed,
    GridSearch,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Broad => Algorithm::Broad,
            AlgorithmArg::CenterFixed => Algorithm::CenterFixed,
            AlgorithmArg::GridSearch => Algorithm::GridSearch,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariableArg {
    DeltaKm,
    VisibilityKm,
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::DeltaKm => SweepVariable::DeltaKm,
            VariableArg::VisibilityKm => SweepVariable::VisibilityKm,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    JsonLines,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::JsonLines => OutputFormat::JsonLines,
        }
    }
}

/// Scenario-shaping flags shared by `solve` and `sweep`.
#[derive(Args)]
struct ScenarioFlags {
    /// Number of users (default 100, or 500 with --full-scale)
    #[arg(long)]
    users: Option<usize>,
    /// PoI-center-to-MBS distance, km
    #[arg(long)]
    delta_km: Option<f64>,
    /// Meteorological visibility, km; switches the backhaul attenuation to
    /// the visibility-derived model
    #[arg(long)]
    visibility_km: Option<f64>,
    /// Configuration file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Full-scale population (500 users)
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Scenario seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Algorithm to run (exactly one)
    #[arg(long, value_delimiter = ',', default_value = "broad")]
    algorithms: Vec<AlgorithmArg>,
    /// Write the scenario and plan as a JSON plan file
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Swept variable
    #[arg(long, value_enum, default_value = "delta-km")]
    variable: VariableArg,
    /// Sweep points (defaults: 5,10,15,20 for delta-km; 1,2,3,5 for
    /// visibility-km)
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Trials per sweep point
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Base seed; trial t runs on seed base+t
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Algorithms to compare
    #[arg(long, value_delimiter = ',', default_value = "broad,center-fixed")]
    algorithms: Vec<AlgorithmArg>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Report runtime_ms as 0 so repeated runs are byte-identical
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Plan file written by `solve --output`
    plan: PathBuf,
}

/// A failed command, carrying its exit code.
enum Failure {
    /// Bad flags, config, or input files: exit 1.
    InvalidInput(String),
    /// A solver reported an error: exit 2.
    Solver(String),
    /// The audited plan violates constraints: exit 1.
    PlanViolations,
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::InvalidInput(_) | Failure::PlanViolations => 1,
            Failure::Solver(_) => 2,
        }
    }
}

fn invalid<E: std::fmt::Display>(e: E) -> Failure {
    Failure::InvalidInput(e.to_string())
}

fn build_spec(flags: &ScenarioFlags) -> Result<ScenarioSpec, Failure> {
    let mut spec = ScenarioSpec::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        apply_config_text(&mut spec, &text).map_err(invalid)?;
    }
    if flags.full_scale {
        spec.users = FULL_SCALE_USERS;
    }
    if let Some(users) = flags.users {
        spec.users = users;
    }
    if let Some(delta) = flags.delta_km {
        spec.delta_km = delta;
    }
    if let Some(v) = flags.visibility_km {
        spec.config.fso.visibility_km = v;
        spec.config.fso.attenuation = AttenuationModel::FromVisibility;
    }
    spec.validate().map_err(Failure::InvalidInput)?;
    Ok(spec)
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let [algorithm] = args.algorithms.as_slice() else {
        return Err(Failure::InvalidInput(
            "solve runs exactly one algorithm; pass a single --algorithms entry".into(),
        ));
    };
    let algorithm = Algorithm::from(*algorithm);
    let spec = build_spec(&args.scenario)?;
    let scenario = generate_scenario(&spec, args.seed);
    let mut options = SweepOptions::default();
    options.ga.rng_seed = args.seed;
    let outcome = match algorithm {
        Algorithm::Broad => solve_broad(&scenario, &options),
        Algorithm::CenterFixed => baseline_center_fixed(&scenario, &options.ga),
        Algorithm::GridSearch => {
            baseline_grid_search(&scenario, options.grid_blocks, &options.ga)
        }
    };
    let plan: BroadPlan = outcome.map_err(|e| Failure::Solver(e.to_string()))?;

    println!("algorithm: {}", algorithm.name());
    println!(
        "satisfied users: {} of {}",
        plan.satisfied_count,
        scenario.users.len()
    );
    println!(
        "backhaul utilization: {}",
        format_sig6(plan.utilization.backhaul)
    );
    println!(
        "access utilization: {}",
        format_sig6(plan.utilization.access)
    );
    println!(
        "dbs position: x {} m, y {} m, h {} m",
        format_sig6(plan.dbs_position.x),
        format_sig6(plan.dbs_position.y),
        format_sig6(plan.dbs_position.h)
    );
    println!("outer iterations: {}", plan.iterations);

    if let Some(path) = &args.output {
        write_plan_file(path, &PlanFile { scenario, plan }).map_err(invalid)?;
    }
    Ok(())
}

fn run_sweep_command(args: &SweepArgs) -> Result<(), Failure> {
    let template = build_spec(&args.scenario)?;
    let variable = SweepVariable::from(args.variable);
    let values = args.values.clone().unwrap_or_else(|| match variable {
        SweepVariable::DeltaKm => DELTA_SWEEP_DEFAULT.to_vec(),
        SweepVariable::VisibilityKm => VISIBILITY_SWEEP_DEFAULT.to_vec(),
    });
    let spec = SweepSpec {
        variable,
        values,
        trials_per_point: args.trials,
        base_seed: args.seed,
    };
    spec.validate().map_err(Failure::InvalidInput)?;

    let mut algorithms: Vec<Algorithm> = Vec::new();
    for &arg in &args.algorithms {
        let algorithm = Algorithm::from(arg);
        if !algorithms.contains(&algorithm) {
            algorithms.push(algorithm);
        }
    }

    let options = SweepOptions {
        measure_runtime: !args.no_timings,
        ..SweepOptions::default()
    };
    let results = run_sweep(&spec, &template, &algorithms, &options);

    let format = OutputFormat::from(args.format);
    match &args.output {
        Some(path) => {
            let mut file = fs::File::create(path)
                .map_err(|e| invalid(format!("cannot create {}: {e}", path.display())))?;
            emit_results(&results, format, &mut file)
                .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            emit_results(&results, format, &mut lock)
                .and_then(|()| lock.flush())
                .map_err(|e| invalid(format!("cannot write results: {e}")))?;
        }
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let contents = read_plan_file(&args.plan).map_err(invalid)?;
    let violations = validate_plan(
        &contents.plan,
        &contents.scenario.users,
        &contents.scenario.mbs,
        &contents.scenario.config,
    );
    if violations.is_empty() {
        println!("plan satisfies all constraints");
        Ok(())
    } else {
        for violation in &violations {
            println!("violation: {violation}");
        }
        Err(Failure::PlanViolations)
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep_command(args),
        Command::Validate(args) => run_validate(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(failure) => {
            match &failure {
                Failure::InvalidInput(message) => eprintln!("error: {message}"),
                Failure::Solver(message) => eprintln!("solver error: {message}"),
                Failure::PlanViolations => {}
            }
            failure.code()
        }
    }
}
