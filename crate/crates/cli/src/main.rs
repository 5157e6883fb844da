use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowd_core::harness::{
    check_compatible, describe, load_scenario, preset, run_sweep, scenario_presets, write_results, Scenario,
    StrategySpec, Sweep, WorkerModel,
};
use crowd_core::{Error, Training};

const STRATEGY_HELP: &str = "\
Strategies are written <allocator>:<decider>, e.g. greedy-mi:map.
  allocators: uniform, greedy-mi, greedy-ep, greedy-chernoff,
              greedy-maxmin-mi, greedy-maxmin-ep, greedy-maxmin-chernoff
  deciders:   majority, map, omap, lra, lra-blocks, mp, mp-haldane

Sweeps: beta=2:20:2, x=0:1:0.1, K=1,3,6,9, training=0,10,100,inf

Exit status: 0 on success, 1 on a usage error, 2 when a run fails.";

#[derive(Parser, Debug)]
#[command(
    name = "crowdsim",
    version,
    about = "Simulate task allocation and answer aggregation for binary crowdsourcing",
    after_help = STRATEGY_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the error probability of each strategy at one operating point.
    #[command(after_help = STRATEGY_HELP)]
    Run(RunArgs),
    /// Estimate error probabilities over a parameter sweep.
    #[command(after_help = STRATEGY_HELP)]
    Sweep(SweepArgs),
    /// List the built-in scenarios.
    Presets,
    /// Check a scenario file or preset without running it.
    Validate(SourceArgs),
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Built-in scenario: s1, s2, s3 or s4.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// Scenario file (TOML with [scenario], [classes] and [groups]).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Strategy token; repeat for several.
    #[arg(long = "strategy", required = true)]
    strategies: Vec<String>,
    /// Average workers per task, C / T.
    #[arg(long)]
    beta: Option<f64>,
    /// Bimodal spread of worker error probabilities within a class.
    #[arg(long)]
    x: Option<f64>,
    /// Number of reputation classes for individual workers.
    #[arg(long)]
    classes: Option<usize>,
    /// Training answers per worker for individual workers, or "inf".
    #[arg(long)]
    training: Option<String>,
    /// Monte Carlo trials per point.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Variable and values, e.g. beta=2:20:2.
    #[arg(long)]
    sweep: String,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Incompatible(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(source: &SourceArgs) -> Result<Scenario, Failure> {
    Ok(match (&source.scenario, &source.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => load_scenario(path)?,
        _ => return Err(Failure::Usage("give exactly one of --scenario and --config".into())),
    })
}

fn apply_overrides(scenario: &mut Scenario, args: &CommonArgs) -> Result<(), Failure> {
    if let Some(beta) = args.beta {
        scenario.beta = beta;
    }
    if let Some(x) = args.x {
        match scenario.model {
            WorkerModel::Deterministic | WorkerModel::Bimodal(_) => scenario.model = WorkerModel::Bimodal(x),
            _ => {
                return Err(Failure::Usage(format!(
                    "--x does not apply to scenario '{}'",
                    scenario.name
                )))
            }
        }
    }
    if args.classes.is_some() || args.training.is_some() {
        let WorkerModel::UniformIndividual { num_classes, training } = &mut scenario.model else {
            return Err(Failure::Usage(format!(
                "--classes and --training only apply to individual-worker scenarios, not '{}'",
                scenario.name
            )));
        };
        if let Some(k) = args.classes {
            *num_classes = k;
        }
        if let Some(t) = &args.training {
            *training = t.parse::<Training>()?;
        }
    }
    scenario.validate()?;
    Ok(())
}

fn execute(scenario: &Scenario, args: &CommonArgs, sweep: &Sweep) -> Result<(), Failure> {
    let strategies = args
        .strategies
        .iter()
        .map(|s| s.parse::<StrategySpec>())
        .collect::<Result<Vec<_>, _>>()?;
    for s in &strategies {
        check_compatible(scenario, s)?;
    }
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let result = run_sweep(scenario, &strategies, sweep, args.trials, args.seed)?;
    write_results(&result, &args.out)?;
    let last = sweep.values().last().copied();
    for s in &strategies {
        let name = s.to_string();
        if let Some(row) = last.and_then(|v| result.row(&name, v)) {
            println!(
                "{name}: P_e = {:.6} +- {:.6} at {} = {} ({} trials)",
                row.p_e,
                row.ci_halfwidth,
                sweep.name(),
                row.sweep_value,
                row.n_trials
            );
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Presets => {
            for s in scenario_presets() {
                println!("{}", describe(&s));
            }
            Ok(())
        }
        Command::Validate(source) => {
            let scenario = load(&source)?;
            println!("ok: {}", describe(&scenario));
            Ok(())
        }
        Command::Run(RunArgs { common }) => {
            let mut scenario = load(&common.source)?;
            apply_overrides(&mut scenario, &common)?;
            let sweep = Sweep::Beta(vec![scenario.beta]);
            execute(&scenario, &common, &sweep)
        }
        Command::Sweep(SweepArgs { common, sweep }) => {
            let mut scenario = load(&common.source)?;
            apply_overrides(&mut scenario, &common)?;
            let sweep: Sweep = sweep.parse()?;
            execute(&scenario, &common, &sweep)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
