//! The `plan`, `force` and `fit` commands as library calls. Each writes its
//! artifacts and returns a report; the binary only parses flags and maps the
//! outcome to an exit status.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::environment::{load_scenario_file, Scenario};
use crate::error::{Error, Result};
use crate::fit::{fit_straight_insertion, parse_insertion_csv, StraightInsertionFit};
use crate::force::{internal_force_profile, ForceProfile, TissueParams};
use crate::kinematics::NeedlePath;
use crate::planner::{ano_plan, AnoOutcome, Budget, CostMode, PlannerConfig};
use crate::stats::{median, quartiles};

/// Caps the number of planning runs executed at once.
pub const THREADS_ENV: &str = "NEEDLE_PLANNER_THREADS";

/// Minimum rows accepted by the `fit` command.
pub const MIN_FIT_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Solved,
    NoSolution,
}

impl Outcome {
    /// 0 when at least one plan was found, 2 otherwise. Input errors exit 1.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Solved => 0,
            Outcome::NoSolution => 2,
        }
    }
}

pub const INPUT_ERROR_EXIT: i32 = 1;

#[derive(Debug, Clone)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    pub budget: Budget,
    pub seed: u64,
    pub runs: u32,
    pub optimizer: CostMode,
    pub out: PathBuf,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub first_cost: Option<f64>,
    pub final_cost: Option<f64>,
    /// Bottleneck force of the final plan, whatever the optimizer (N/m).
    pub final_bottleneck_cost: Option<f64>,
    pub final_length_m: Option<f64>,
    pub improvements: usize,
    pub iterations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    /// Seconds or iterations, per [`BatchSummary::axis`].
    pub at: f64,
    /// Quartiles over runs; `None` while fewer than a quarter/half/three
    /// quarters of the runs have any solution.
    pub lower: Option<f64>,
    pub median: Option<f64>,
    pub upper: Option<f64>,
}

/// Cross-run statistics of a batch.
#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub optimizer: CostMode,
    pub runs: usize,
    pub solved: usize,
    /// `wall_time_s` for time budgets, `iteration` for iteration budgets.
    pub axis: &'static str,
    pub per_run: Vec<RunSummary>,
    pub median_final_cost: Option<f64>,
    pub median_first_cost: Option<f64>,
    pub curve: Vec<CurvePoint>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl BatchSummary {
    /// Builds the summary from per-run outcomes. Each run's anytime curve is
    /// piecewise constant, `+inf` before its first solution.
    pub fn from_runs(optimizer: CostMode, budget: Budget, runs: &[(u64, AnoOutcome)]) -> Self {
        let axis = match budget {
            Budget::Time { .. } => "wall_time_s",
            Budget::Iterations { .. } => "iteration",
        };
        let coord = |e: &crate::planner::ConvergenceEntry| match budget {
            Budget::Time { .. } => e.wall_time_s,
            Budget::Iterations { .. } => e.iteration as f64,
        };

        let per_run: Vec<RunSummary> = runs
            .iter()
            .map(|(seed, o)| RunSummary {
                seed: *seed,
                first_cost: o.log.entries.first().map(|e| e.cost),
                final_cost: o.log.entries.last().map(|e| e.cost),
                final_bottleneck_cost: o.best.as_ref().map(|p| p.bottleneck_cost),
                final_length_m: o.best.as_ref().map(|p| p.length),
                improvements: o.log.entries.len(),
                iterations: o.iterations,
            })
            .collect();

        let mut points: Vec<f64> = runs.iter().flat_map(|(_, o)| o.log.entries.iter().map(coord)).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let curve = points
            .into_iter()
            .map(|at| {
                let costs: Vec<f64> = runs
                    .iter()
                    .map(|(_, o)| {
                        o.log
                            .entries
                            .iter()
                            .take_while(|e| coord(e) <= at)
                            .last()
                            .map_or(f64::INFINITY, |e| e.cost)
                    })
                    .collect();
                let (lo, mid, hi) = quartiles(&costs).expect("at least one run and no NaN costs");
                CurvePoint {
                    at,
                    lower: finite(lo),
                    median: finite(mid),
                    upper: finite(hi),
                }
            })
            .collect();

        let pick = |f: fn(&RunSummary) -> Option<f64>| {
            let v: Vec<f64> = per_run.iter().map(|r| f(r).unwrap_or(f64::INFINITY)).collect();
            median(&v).and_then(finite)
        };
        Self {
            optimizer,
            runs: runs.len(),
            solved: runs.iter().filter(|(_, o)| o.best.is_some()).count(),
            axis,
            median_final_cost: pick(|r| r.final_cost),
            median_first_cost: pick(|r| r.first_cost),
            per_run,
            curve,
        }
    }
}

#[derive(Debug)]
pub struct PlanReport {
    pub runs: Vec<(u64, AnoOutcome)>,
    pub summary: Option<BatchSummary>,
    pub outcome: Outcome,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the anytime planner once per seed (`seed`, `seed + 1`, ...) and
/// writes `solution_<seed>.json` (when solved), `profile_<seed>.csv` and
/// `convergence_<seed>.csv` per run, plus `summary.json` for batches.
pub fn cmd_plan(args: &PlanArgs) -> Result<PlanReport> {
    let scenario = load_scenario_file(&args.scenario)?;
    if args.runs == 0 {
        return Err(Error::InvalidConfig("--runs must be at least 1".into()));
    }
    let mut base = PlannerConfig {
        budget: args.budget,
        cost_mode: args.optimizer,
        ..PlannerConfig::for_scenario(&scenario)
    };
    if let Some(eps) = args.epsilon {
        base.epsilon = eps;
    }
    base.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let seeds: Vec<u64> = (0..args.runs as u64).map(|i| args.seed.wrapping_add(i)).collect();
    let run = |seed: u64| -> Result<(u64, AnoOutcome)> {
        let config = PlannerConfig {
            rng_seed: seed,
            ..base.clone()
        };
        let outcome = ano_plan(&scenario, &config, |_, _| {})?;
        write_run_artifacts(&args.out, seed, &scenario, &outcome)?;
        Ok((seed, outcome))
    };
    let runs: Vec<(u64, AnoOutcome)> = if seeds.len() == 1 {
        vec![run(seeds[0])?]
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(|&s| run(s)).collect::<Result<_>>())?
    };

    let summary = (runs.len() > 1).then(|| BatchSummary::from_runs(args.optimizer, args.budget, &runs));
    if let Some(summary) = &summary {
        let json = serde_json::to_string_pretty(summary).expect("summary serialization is infallible");
        write(&args.out.join("summary.json"), json + "\n")?;
    }
    let outcome = if runs.iter().any(|(_, o)| o.best.is_some()) {
        Outcome::Solved
    } else {
        Outcome::NoSolution
    };
    Ok(PlanReport { runs, summary, outcome })
}

fn write_run_artifacts(out: &Path, seed: u64, scenario: &Scenario, outcome: &AnoOutcome) -> Result<()> {
    write(
        &out.join(format!("convergence_{seed}.csv")),
        outcome.log.to_csv_string(),
    )?;
    let profile = out.join(format!("profile_{seed}.csv"));
    let solution = out.join(format!("solution_{seed}.json"));
    match &outcome.best {
        Some(plan) => {
            write(&solution, plan.to_json(&scenario.tissue) + "\n")?;
            write(&profile, plan.profile.to_csv_string())?;
        }
        None => {
            // stale artifacts from an earlier run would be misleading
            for stale in [&solution, &profile] {
                if stale.exists() {
                    fs::remove_file(stale).map_err(|e| Error::io(stale, e))?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ForceArgs {
    pub path: PathBuf,
    pub tissue: Option<TissueParams>,
    pub resolution: f64,
    pub out: PathBuf,
}

/// Parses `c,mu,fp`.
pub fn parse_tissue_triple(text: &str) -> Result<TissueParams> {
    let bad = || Error::validation("tissue", format!("expected `c,mu,fp`, got `{text}`"));
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [c, mu, fp] => TissueParams::new(c, mu, fp),
        _ => Err(bad()),
    }
}

/// Tissue recorded in a path or solution file, if any.
fn tissue_from_document(text: &str) -> Result<Option<TissueParams>> {
    let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: ".".into(),
        message: e.to_string(),
    })?;
    match doc.get("tissue") {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(t) => serde_path_to_error::deserialize(t)
            .map(Some)
            .map_err(|e| Error::from_json(e).within("tissue")),
    }
}

/// Force profile of a path file. Tissue comes from `--tissue`, else the
/// file's own `tissue` field, else the defaults.
pub fn cmd_force(args: &ForceArgs) -> Result<ForceProfile> {
    let text = fs::read_to_string(&args.path).map_err(|e| Error::io(&args.path, e))?;
    let path = NeedlePath::from_json(&text)?;
    let tissue = match args.tissue {
        Some(t) => t,
        None => tissue_from_document(&text)?.unwrap_or_default(),
    };
    let profile = internal_force_profile(&path, &tissue, args.resolution)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write(&args.out, profile.to_csv_string())?;
    Ok(profile)
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub data: PathBuf,
    pub out: PathBuf,
}

/// Fits the straight-insertion model to a `depth_m,force_N` CSV and writes
/// `fit.json` into the output directory.
pub fn cmd_fit(args: &FitArgs) -> Result<StraightInsertionFit> {
    let text = fs::read_to_string(&args.data).map_err(|e| Error::io(&args.data, e))?;
    let rows = parse_insertion_csv(&text)?;
    if rows.len() < MIN_FIT_ROWS {
        return Err(Error::validation(
            "data",
            format!("need at least {MIN_FIT_ROWS} rows, got {}", rows.len()),
        ));
    }
    let fit = fit_straight_insertion(&rows)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let json = serde_json::to_string_pretty(&fit).expect("fit serialization is infallible");
    write(&args.out.join("fit.json"), json + "\n")?;
    Ok(fit)
}

/// Rounds to three significant digits for display.
pub fn sig3(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format!("{v}");
    }
    let digits = 2 - v.abs().log10().floor() as i32;
    if digits > 0 {
        format!("{:.*}", digits as usize, v)
    } else {
        let scale = 10f64.powi(-digits);
        format!("{}", (v / scale).round() * scale)
    }
}
