use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use needle_core::planner::{Budget, CostMode};
use needle_core::runner::{self, sig3, Outcome, INPUT_ERROR_EXIT};

#[derive(Parser)]
#[command(name = "needle-planner", version, about = "Steerable-needle force modeling and planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan with the anytime bottleneck planner and write per-run artifacts.
    Plan(PlanCmd),
    /// Compute the internal/tissue force profile of a path file.
    Force(ForceCmd),
    /// Fit piercing force and friction to straight-insertion data.
    Fit(FitCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Optimizer {
    Force,
    Length,
}

#[derive(Args)]
struct PlanCmd {
    #[arg(long)]
    scenario: PathBuf,
    /// Wall-clock budget per run (s).
    #[arg(long, required_unless_present = "iterations", conflicts_with = "iterations")]
    time: Option<f64>,
    /// Iteration budget per run; makes every artifact reproducible.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: u32,
    #[arg(long, value_enum, default_value = "force")]
    optimizer: Optimizer,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct ForceCmd {
    #[arg(long)]
    path: PathBuf,
    /// Tissue parameters as `c,mu,fp`; defaults to the file's own or the
    /// built-in values.
    #[arg(long)]
    tissue: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct FitCmd {
    #[arg(long)]
    data: PathBuf,
    /// Directory receiving `fit.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn run(cli: Cli) -> needle_core::Result<Outcome> {
    match cli.command {
        Command::Plan(cmd) => {
            let budget = match (cmd.time, cmd.iterations) {
                (Some(seconds), _) => Budget::Time { seconds },
                (None, Some(count)) => Budget::Iterations { count },
                (None, None) => unreachable!("clap requires one budget"),
            };
            let optimizer = match cmd.optimizer {
                Optimizer::Force => CostMode::Force,
                Optimizer::Length => CostMode::Length,
            };
            let report = runner::cmd_plan(&runner::PlanArgs {
                scenario: cmd.scenario,
                budget,
                seed: cmd.seed,
                runs: cmd.runs,
                optimizer,
                out: cmd.out,
                epsilon: cmd.epsilon,
            })?;
            for (seed, outcome) in &report.runs {
                match &outcome.best {
                    Some(plan) => println!(
                        "seed {seed}: {} improvements, bottleneck {} N/m, length {} m",
                        outcome.log.entries.len(),
                        sig3(plan.bottleneck_cost),
                        sig3(plan.length),
                    ),
                    None => println!("seed {seed}: no solution"),
                }
            }
            if let Some(s) = &report.summary {
                let show = |v: Option<f64>| v.map_or("n/a".to_string(), sig3);
                println!(
                    "{}/{} runs solved; median first cost {}, median final cost {}",
                    s.solved,
                    s.runs,
                    show(s.median_first_cost),
                    show(s.median_final_cost),
                );
            }
            Ok(report.outcome)
        }
        Command::Force(cmd) => {
            let tissue = cmd.tissue.as_deref().map(runner::parse_tissue_triple).transpose()?;
            let profile = runner::cmd_force(&runner::ForceArgs {
                path: cmd.path,
                tissue,
                resolution: cmd.resolution,
                out: cmd.out,
            })?;
            println!("insertion force n(0) = {} N", profile.insertion_force);
            println!("max tissue force = {} N/m", profile.max_tissue_force);
            println!("argmax s = {} m", profile.argmax_s);
            Ok(Outcome::Solved)
        }
        Command::Fit(cmd) => {
            let fit = runner::cmd_fit(&runner::FitArgs {
                data: cmd.data,
                out: cmd.out,
            })?;
            println!("F_p = {} N", fit.piercing_force);
            println!("C = {} N/m", fit.c_friction);
            println!("R^2 = {}", fit.r_squared);
            if let Some(adj) = fit.adjusted_r_squared {
                println!("adjusted R^2 = {adj}");
            }
            if fit.negative_piercing_force {
                eprintln!("warning: fitted piercing force is negative");
            }
            Ok(Outcome::Solved)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(INPUT_ERROR_EXIT as u8)
        }
    }
}
