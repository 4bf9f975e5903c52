use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poprl::harness::{
    aggregate_trials, parse_key_values, read_csv_file, run_experiment, write_aggregate, write_csv,
    write_csv_file, ExperimentConfig,
};
use poprl::verify::{run_suite, Suite};

const CONFIG_KEYS_HELP: &str = "\
Config file keys (flat `key = value`, `#` comments):
  algorithm               zoo | poga | arl (required)
  env                     two_state | cartpole | quadratic (required)
  beta                    selection strength (default: 1.0 two_state, 0.05 cartpole)
  alpha                   learning rate (default 0.1)
  sigma                   perturbation / mutation scale (default 0.05; 0.1 quadratic)
  pop_size                population size (default: 1000 two_state, 300 cartpole)
  generations             generations per trial (default: 200 two_state, 300 cartpole)
  trials                  independent seeded trials (default 1)
  master_seed             root seed for all derived streams (default 0)
  lifted_plan             true: share one sampled transition plan per generation (poga/arl)
  gamma                   discount factor (default: 0.9 two_state, 1.0 cartpole)
  horizon                 episode length cap (default: 30 two_state, 500 cartpole)
  moving_average_window   smoothing window used by `aggregate` (default 1)
  init_scale              std of the i.i.d. normal initial parameters (default 0.5)
  dim                     quadratic black-box dimension (default 4)
  arl_mutation            true: add Gaussian mutation to ancestral learning (default false)
  timing                  true: record real per-generation wall time in wallclock_ms;
                          off by default so repeated runs are byte-identical
  out                     default output CSV path";

/// Population-based policy optimization experiments and identity checks.
#[derive(Parser)]
#[command(name = "poprl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and emit a learning-curve CSV.
    #[command(after_long_help = CONFIG_KEYS_HELP)]
    Run(RunArgs),
    /// Run an identity-verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Aggregate a learning-curve CSV across trials.
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file (see --help for the key list).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's algorithm (zoo | poga | arl).
    #[arg(long)]
    algo: Option<String>,
    /// Override the config's environment (two_state | cartpole | quadratic).
    #[arg(long)]
    env: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the number of generations.
    #[arg(long)]
    generations: Option<usize>,
    /// Cap worker parallelism; output is identical at any setting.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path (stdout if neither this nor the config sets one).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record real wall time per generation in the wallclock_ms column.
    #[arg(long)]
    timing: bool,
    /// Override any config key, repeatable (e.g. --set beta=0.5).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Write the final best policy as JSON to this path.
    #[arg(long)]
    save_policy: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// all | theorem1 | theorem2 | lemma1 | variational | lifted | natgrad | zoo_unbiased
    #[arg(long, default_value = "all")]
    suite: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Learning-curve CSV produced by `run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Trailing moving-average window applied per trial before averaging.
    #[arg(long, default_value_t = 1)]
    window: usize,
    /// Comma-separated trial subset to aggregate (e.g. 0,1,2,3).
    #[arg(long, value_delimiter = ',')]
    include_trials: Option<Vec<usize>>,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> poprl::Result<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| poprl::Error::Config(format!("could not set --jobs: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config)?;
    let mut map = parse_key_values(&text)?;
    for pair in &args.sets {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(poprl::Error::ConfigKey {
                key: pair.clone(),
                detail: "expected KEY=VALUE".into(),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    if let Some(algo) = &args.algo {
        map.insert("algorithm".into(), algo.clone());
    }
    if let Some(env) = &args.env {
        map.insert("env".into(), env.clone());
    }
    if let Some(seed) = args.seed {
        map.insert("master_seed".into(), seed.to_string());
    }
    if let Some(trials) = args.trials {
        map.insert("trials".into(), trials.to_string());
    }
    if let Some(generations) = args.generations {
        map.insert("generations".into(), generations.to_string());
    }
    if args.timing {
        map.insert("timing".into(), "true".into());
    }
    let config = ExperimentConfig::from_map(&map)?;
    let outcome = run_experiment(&config)?;
    match args.out.as_ref().or(config.out.as_ref()) {
        Some(path) => write_csv_file(&outcome.records, path)?,
        None => write_csv(&outcome.records, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.save_policy {
        std::fs::write(path, outcome.final_policy.to_json()?)?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> poprl::Result<bool> {
    let suite: Suite = args.suite.parse()?;
    let reports = run_suite(suite)?;
    let mut all_pass = true;
    for report in &reports {
        for check in &report.checks {
            println!(
                "{} {} (residual {:.3e}, tolerance {:.3e})",
                if check.pass { "PASS" } else { "FAIL" },
                check.check,
                check.residual,
                check.tolerance
            );
        }
        all_pass &= report.pass;
    }
    let json = serde_json::to_string_pretty(&reports)?;
    match &args.json {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(all_pass)
}

fn aggregate(args: AggregateArgs) -> poprl::Result<()> {
    let records = read_csv_file(&args.input)?;
    let result = aggregate_trials(&records, args.window, args.include_trials.as_deref())?;
    if result.truncated {
        eprintln!("warning: trials have ragged lengths; truncated to the shortest");
    }
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            write_aggregate(&result.rows, std::io::BufWriter::new(file))?;
        }
        None => write_aggregate(&result.rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Verify(args) => verify(args),
        Command::Aggregate(args) => aggregate(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
