//! Command-line experiment runner.

use clap::{Args, Parser, Subcommand};
use so3_ppf_sim::{
    run_experiment, run_monte_carlo, write_csv, write_ensemble_json, write_summary_json,
    EstimatorKind, ExperimentConfig, Form, SimError,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "so3-ppf-sim",
    about = "Simulates prescribed-performance attitude estimators on SO(3)",
    version
)]
struct Cli {
    /// Print the default benchmark configuration as TOML and exit.
    #[arg(long, global = true)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or a Monte-Carlo ensemble) and write trajectory
    /// CSV and summary JSON files.
    Run(RunArgs),
    /// Print the default benchmark configuration as TOML and exit.
    PrintDefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML); defaults to the benchmark scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Which estimator to run.
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    /// Which filter form to integrate.
    #[arg(long, value_parser = parse_form)]
    form: Option<Form>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Monte-Carlo run count override.
    #[arg(long)]
    runs: Option<usize>,
    /// Abort at the first envelope breach (exit code 2).
    #[arg(long, conflicts_with = "explore")]
    strict: bool,
    /// Record envelope breaches but keep running.
    #[arg(long)]
    explore: bool,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    match s {
        "semi" => Ok(EstimatorKind::Semi),
        "direct" => Ok(EstimatorKind::Direct),
        "both" => Ok(EstimatorKind::Both),
        _ => Err("expected semi, direct or both".into()),
    }
}

fn parse_form(s: &str) -> Result<Form, String> {
    match s {
        "cont" | "continuous" => Ok(Form::Continuous),
        "disc" | "discrete" => Ok(Form::Discrete),
        "quat" | "quaternion" => Ok(Form::Quaternion),
        _ => Err("expected cont, disc or quat".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        None if cli.print_default_config => {
            print!("{}", ExperimentConfig::default().to_toml());
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("no command given; try `so3-ppf-sim run` or --print-default-config");
            ExitCode::FAILURE
        }
        Some(Command::PrintDefaultConfig) => {
            print!("{}", ExperimentConfig::default().to_toml());
            ExitCode::SUCCESS
        }
        Some(Command::Run(args)) => match run(args) {
            Ok(all_passed) => {
                if all_passed {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("envelope breached; see summaries");
                    ExitCode::from(2)
                }
            }
            Err(SimError::EnvelopeBreach { step, t, dist, xi }) => {
                eprintln!("envelope breached at step {step} (t = {t}): dist {dist} >= xi {xi}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}

fn run(args: RunArgs) -> Result<bool, SimError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = args.estimator {
        cfg.estimator = kind;
    }
    if let Some(form) = args.form {
        cfg.form = form;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if args.strict {
        cfg.strict = true;
    }
    if args.explore {
        cfg.strict = false;
    }

    std::fs::create_dir_all(&args.out)?;
    let mut all_passed = true;

    if cfg.runs > 1 {
        for stats in run_monte_carlo(&cfg, cfg.runs)? {
            let tag = format!("{}_{}", stats.estimator, stats.form);
            let path = args.out.join(format!("summary_{tag}.json"));
            write_ensemble_json(&stats, &path)?;
            println!(
                "{tag}: runs {} mean_of_means {:.3e} pass_rate {:.2}",
                stats.runs, stats.mean_of_means, stats.envelope_pass_rate
            );
            if stats.envelope_pass_rate < 1.0 {
                all_passed = false;
            }
        }
    } else {
        for outcome in run_experiment(&cfg)? {
            let traj_path = args.out.join(format!("trajectory_{}.csv", outcome.tag));
            let summary_path = args.out.join(format!("summary_{}.json", outcome.tag));
            write_csv(&outcome.record, &traj_path)?;
            write_summary_json(&outcome.summary, &summary_path)?;
            println!(
                "{}: mean {:.3e} std {:.3e} envelope {} ({} rows -> {})",
                outcome.tag,
                outcome.summary.mean_dist,
                outcome.summary.std_dist,
                if outcome.summary.envelope_pass { "pass" } else { "FAIL" },
                outcome.record.rows.len(),
                traj_path.display(),
            );
            if !outcome.summary.envelope_pass {
                all_passed = false;
            }
        }
    }
    Ok(all_passed)
}
