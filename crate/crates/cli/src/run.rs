//! The `run` and `validate` subcommands.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::initial;
use crate::report::CsvSink;
use crate::threads::ThreadedExecutor;
use std::fs;
use std::path::Path;
use swarmsim_core::{
    RunSummary, SequentialExecutor, Simulation, SolverError, SolverMode, StepExecutor,
};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Default, Clone)]
pub struct RunOverrides {
    pub mode: Option<SolverMode>,
    pub dump_every: Option<u64>,
    pub threads: Option<usize>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    RunConfig::parse(&text, &path.display().to_string())
}

fn apply_overrides(cfg: &mut RunConfig, overrides: &RunOverrides) {
    if let Some(mode) = overrides.mode {
        cfg.solver.mode = mode;
    }
    if let Some(every) = overrides.dump_every {
        cfg.output.snapshot_every = every;
        if every > 0 && cfg.output.snapshot_dir.is_none() {
            cfg.output.snapshot_dir = Some("snapshots".into());
        }
    }
    if let Some(threads) = overrides.threads {
        cfg.solver.threads = threads;
    }
}

/// Check structure and initial data; returns warnings, errors are fatal.
fn validate_all(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let violations = cfg.validate_structure();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::ConfigInvalid(lines.join("\n")));
    }
    let (space, age) = cfg.build_grids()?;
    let data = initial::build(cfg, space, age)?;
    let (errors, warnings) = initial::validate_data(cfg, &data);
    if !errors.is_empty() {
        let lines: Vec<String> = errors.iter().map(|v| v.to_string()).collect();
        return Err(CliError::ConfigInvalid(lines.join("\n")));
    }
    Ok(warnings)
}

/// Execute one configuration to completion, writing its CSV report.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let (space, age) = cfg.build_grids()?;
    let data = initial::build(cfg, space, age)?;
    let executor: Box<dyn StepExecutor> = if cfg.solver.threads > 1 {
        Box::new(ThreadedExecutor {
            threads: cfg.solver.threads,
        })
    } else {
        Box::new(SequentialExecutor)
    };
    let mut sim = Simulation::new(
        cfg.coefficient_set(),
        cfg.solver_config(),
        data.rho0,
        data.q0,
        data.m0,
        executor.as_ref(),
    )
    .map_err(solver_setup_error)?;
    let mut sink = CsvSink::create(&cfg.output, cfg.tau)?;
    let summary = sim.run(&mut sink)?;
    sink.finish()?;
    Ok(summary)
}

fn solver_setup_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidSetup(_) | SolverError::CflViolation { .. } => {
            CliError::ConfigInvalid(e.to_string())
        }
        other => CliError::Step(other),
    }
}

/// `swarmsim run`: validate, integrate, report.
pub fn cmd_run(
    config_path: &Path,
    overrides: &RunOverrides,
    seed_check: bool,
) -> Result<(), CliError> {
    let mut cfg = load_config(config_path)?;
    apply_overrides(&mut cfg, overrides);
    let warnings = validate_all(&cfg)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let summary = execute(&cfg)?;
    println!(
        "completed {} steps; max biomass residual {:e}; max L2 ratio {:e}{}",
        summary.steps,
        summary.max_biomass_residual,
        summary.max_l2_ratio,
        if summary.zero_initial_biomass {
            " (zero initial biomass: residuals are absolute)"
        } else {
            ""
        }
    );
    println!("report: {}", cfg.output.csv);

    if seed_check {
        // Repeat the identical run into a scratch directory and require
        // byte-identical output.
        let first = fs::read(&cfg.output.csv)
            .map_err(|e| CliError::io(cfg.output.csv.clone(), e))?;
        let scratch = std::env::temp_dir().join(format!(
            "swarmsim-seed-check-{}",
            std::process::id()
        ));
        fs::create_dir_all(&scratch)
            .map_err(|e| CliError::io(scratch.display().to_string(), e))?;
        let mut cfg2 = cfg.clone();
        cfg2.output.csv = scratch.join("run.csv").display().to_string();
        cfg2.output.snapshot_dir = cfg
            .output
            .snapshot_dir
            .as_ref()
            .map(|_| scratch.join("snapshots").display().to_string());
        execute(&cfg2)?;
        let second = fs::read(&cfg2.output.csv)
            .map_err(|e| CliError::io(cfg2.output.csv.clone(), e))?;
        let identical = first == second;
        let _ = fs::remove_dir_all(&scratch);
        if identical {
            println!("determinism check: reports are byte-identical");
        } else {
            return Err(CliError::Other(
                "determinism check failed: repeated run produced different bytes".into(),
            ));
        }
    }
    Ok(())
}

/// `swarmsim validate`: print every violated hypothesis.
pub fn cmd_validate(config_path: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let mut errors: Vec<String> = cfg
        .validate_structure()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let mut warnings = Vec::new();
    if errors.is_empty() {
        let (space, age) = cfg.build_grids()?;
        match initial::build(&cfg, space, age) {
            Ok(data) => {
                let (data_errors, data_warnings) = initial::validate_data(&cfg, &data);
                errors.extend(data_errors.iter().map(|v| v.to_string()));
                warnings = data_warnings;
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    for w in &warnings {
        println!("warning: {w}");
    }
    if errors.is_empty() {
        println!("configuration admissible");
        Ok(())
    } else {
        for e in &errors {
            println!("{e}");
        }
        Err(CliError::ConfigInvalid(format!(
            "{} violation(s)",
            errors.len()
        )))
    }
}
