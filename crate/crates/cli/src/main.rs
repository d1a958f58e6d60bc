//! `varheat`: runs, convergence tables, the `k1` sweep and property suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use varheat_core::experiments::{
    compare_k1, converge, run_check, run_single, ExperimentSpec, Preset, RunOutput, SchemeKind, Suite,
};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Solver(#[from] varheat_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "varheat",
    version,
    about = "Schemes for the degenerate variational heat equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One solve; writes snapshots and a JSON run report.
    Run(SpecArgs),
    /// Refinement ladder against a fine reference; writes CSV tables.
    Converge(SpecArgs),
    /// Distances of `k1 > 0` solutions to the `k1 = 0` solution.
    CompareK1(SpecArgs),
    /// Property suite; exits nonzero on any violation.
    Check {
        /// harten, bounds, weakform or transforms
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Experiment flags. Applied in order: preset, config file, flags.
#[derive(Args, Debug, Default)]
struct SpecArgs {
    /// odd, v, even, steady, full
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` file
    #[arg(long)]
    config: Option<PathBuf>,
    /// w or v
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    k1: Option<String>,
    #[arg(long)]
    k2: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated grid labels `N + 1`; `run` uses the first
    #[arg(long)]
    grid: Option<String>,
    /// Label of the reference grid
    #[arg(long)]
    reference: Option<String>,
    /// odd, even or as_given
    #[arg(long)]
    parity: Option<String>,
    #[arg(long = "T", alias = "t-end")]
    t_end: Option<String>,
    /// point or cell
    #[arg(long)]
    init: Option<String>,
    /// exact, tan or both
    #[arg(long)]
    v_init: Option<String>,
    /// w or u
    #[arg(long)]
    compare_in: Option<String>,
    /// fine or coarse
    #[arg(long)]
    sampling: Option<String>,
    /// strict, warn or off
    #[arg(long)]
    cfl: Option<String>,
    /// Comma-separated snapshot times for `run`
    #[arg(long)]
    snapshots: Option<String>,
    /// Comma-separated positive k1 values for `compare-k1`
    #[arg(long)]
    k1_list: Option<String>,
    #[arg(long)]
    k1_grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
}

impl SpecArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let base = match &self.preset {
            Some(p) => ExperimentSpec::preset(p.parse::<Preset>()?),
            None => ExperimentSpec::default(),
        };
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_config(&read(path)?, base)?,
            None => base,
        };
        let flags = [
            ("scheme", &self.scheme),
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("theta", &self.theta),
            ("lambda", &self.lambda),
            ("grid", &self.grid),
            ("reference", &self.reference),
            ("parity", &self.parity),
            ("T", &self.t_end),
            ("init", &self.init),
            ("v_init", &self.v_init),
            ("compare_in", &self.compare_in),
            ("sampling", &self.sampling),
            ("cfl", &self.cfl),
            ("snapshots", &self.snapshots),
            ("k1_list", &self.k1_list),
            ("k1_grid", &self.k1_grid),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                spec.set(key, value)?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io = |source| CliError::Io {
        path: dir.join(name),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io)?;
    Ok(path)
}

fn out_dir(spec: &ExperimentSpec) -> PathBuf {
    PathBuf::from(spec.out.as_deref().unwrap_or("."))
}

/// Returns whether the run respected every bound it was entitled to.
fn cmd_run(spec: &ExperimentSpec) -> Result<bool> {
    let label = spec.ladder[0];
    let output = run_single(spec, label)?;
    let dir = out_dir(spec);
    let variable = match spec.scheme {
        SchemeKind::W => "w",
        SchemeKind::V => "v",
    };
    for (k, level) in output.trajectory.levels.iter().enumerate() {
        let mut text = format!("# t = {}\n", level.t);
        let grid = level.grid();
        for (x, value) in grid.nodes().zip(level.values.values()) {
            text.push_str(&format!("{x:.12e} {value:.15e}\n"));
        }
        write(&dir, &format!("{variable}_{k:03}.txt"), &text)?;
    }
    write(
        &dir,
        "report.json",
        &serde_json::to_string_pretty(&run_report(spec, label, &output))?,
    )?;

    let clean = output
        .bounds
        .as_ref()
        .map_or(true, |b| !b.cfl_satisfied || b.violations() == 0);
    let last = output.trajectory.last();
    println!(
        "{variable} on {} cells: {} steps to t = {}, {} levels written to {}",
        last.grid().n(),
        output.trajectory.steps(),
        last.t,
        output.trajectory.levels.len(),
        dir.display()
    );
    if let Some(first) = output.bounds.as_ref().and_then(|b| b.first_violation()) {
        let note = if clean {
            "CFL condition not met, recorded only"
        } else {
            "violation"
        };
        println!("bounds: first exceeded at step {} ({note})", first.step_index);
    }
    Ok(clean)
}

fn run_report(spec: &ExperimentSpec, label: usize, output: &RunOutput) -> serde_json::Value {
    let traj = &output.trajectory;
    json!({
        "spec": spec,
        "grid_label": label,
        "cells": traj.grid().n(),
        "dt": traj.dt,
        "final_time": traj.final_time,
        "cfl_satisfied": traj.cfl_satisfied(),
        "snapshot_times": traj.levels.iter().map(|l| l.t).collect::<Vec<_>>(),
        "steps": traj.reports,
        "bounds": output.bounds,
    })
}

fn cmd_converge(spec: &ExperimentSpec) -> Result<()> {
    let dir = out_dir(spec);
    for table in converge(spec)? {
        let csv = table.table.to_csv();
        println!("{} (reference {} cells)", table.label, table.reference_cells);
        print!("{csv}");
        write(&dir, &format!("convergence_{}.csv", table.label), &csv)?;
    }
    Ok(())
}

fn cmd_compare_k1(spec: &ExperimentSpec) -> Result<()> {
    let comparison = compare_k1(spec)?;
    let csv = comparison.to_string();
    println!("baseline k1 = 0 on {} cells", comparison.baseline_cells);
    print!("{csv}");
    write(&out_dir(spec), "k1_distances.csv", &csv)?;
    Ok(())
}

fn cmd_check(suite: &str, seed: u64) -> Result<bool> {
    let report = run_check(suite.parse::<Suite>()?, seed)?;
    for o in &report.outcomes {
        println!("{} {}: {}", if o.passed { "pass" } else { "FAIL" }, o.name, o.detail);
    }
    println!("{suite}: {} passed, {} failed", report.passed(), report.failed());
    Ok(report.failed() == 0)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => cmd_run(&args.spec()?),
        Command::Converge(args) => cmd_converge(&args.spec()?).map(|()| true),
        Command::CompareK1(args) => cmd_compare_k1(&args.spec()?).map(|()| true),
        Command::Check { suite, seed } => cmd_check(&suite, seed),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
