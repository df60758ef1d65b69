//! The `convergence` subcommand: refinement studies over `(dt, da, dx, dy)`.
//!
//! Each level halves the time step and both grid spacings together (the age
//! spacing follows `dt` through the characteristic alignment). Two error
//! series are reported: the worst-over-time biomass-identity residual per
//! level, and the weighted L² difference between consecutive-level solutions
//! restricted to the coarser grid. Error pairs below the resolution floor
//! report an infinite order (the sequence is already at rounding level).

use crate::config::RunConfig;
use crate::error::CliError;
use crate::initial;
use crate::run::load_config;
use crate::threads::ThreadedExecutor;
use std::path::Path;
use swarmsim_core::float;
use swarmsim_core::solver::{weighted_l2_difference, VecSink};
use swarmsim_core::{
    RunSummary, ScalarField, SequentialExecutor, Simulation, StepExecutor,
    SwarmerField, SystemState,
};

/// Residuals this small are indistinguishable from rounding noise; order
/// estimation reports `inf` instead of a meaningless log ratio.
pub const ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct LevelRow {
    pub level: u32,
    pub nx: usize,
    pub na: usize,
    pub dt: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub rows: Vec<LevelRow>,
    /// Orders of the biomass residual between consecutive levels.
    pub residual_orders: Vec<f64>,
    /// Weighted L² differences between consecutive-level solutions.
    pub solution_diffs: Vec<f64>,
    pub diff_orders: Vec<f64>,
    pub zero_biomass: bool,
}

/// Double the spatial resolution and halve the time/age step `level` times.
pub fn refine(cfg: &RunConfig, level: u32) -> RunConfig {
    let mut out = cfg.clone();
    let factor = 1usize << level;
    out.grid.nx = cfg.grid.nx * factor;
    out.grid.ny = cfg.grid.ny * factor;
    out.age.da = cfg.age.da / factor as f64;
    out.solver.dt = out.age.da;
    out
}

fn run_in_memory(cfg: &RunConfig) -> Result<(RunSummary, SystemState), CliError> {
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
    .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let mut sink = VecSink::default();
    let summary = sim.run(&mut sink)?;
    Ok((summary, sim.state().clone()))
}

/// Restrict a fine scalar field to the coarse grid by 2×2 cell means.
fn restrict_scalar(fine: &ScalarField, coarse_grid: &swarmsim_core::SpaceGrid) -> ScalarField {
    let fg = fine.grid();
    debug_assert_eq!(fg.nx, 2 * coarse_grid.nx);
    let mut values = Vec::with_capacity(coarse_grid.cells());
    for j in 0..coarse_grid.ny {
        for i in 0..coarse_grid.nx {
            let sum = fine.get(2 * i, 2 * j)
                + fine.get(2 * i + 1, 2 * j)
                + fine.get(2 * i, 2 * j + 1)
                + fine.get(2 * i + 1, 2 * j + 1);
            values.push(0.25 * sum);
        }
    }
    ScalarField::from_values(*coarse_grid, fine.role(), values).expect("restricted dims")
}

/// Restrict a fine swarmer field: even age levels align with coarse nodes,
/// space restricts by 2×2 means.
fn restrict_swarmer(
    fine: &SwarmerField,
    coarse_space: &swarmsim_core::SpaceGrid,
    coarse_age: &swarmsim_core::AgeGrid,
) -> SwarmerField {
    let mut values = Vec::with_capacity(coarse_age.na * coarse_space.cells());
    let fg = fine.space();
    for k in 0..coarse_age.na {
        let level = fine.level(2 * k);
        for j in 0..coarse_space.ny {
            for i in 0..coarse_space.nx {
                let sum = level[fg.idx(2 * i, 2 * j)]
                    + level[fg.idx(2 * i + 1, 2 * j)]
                    + level[fg.idx(2 * i, 2 * j + 1)]
                    + level[fg.idx(2 * i + 1, 2 * j + 1)];
                values.push(0.25 * sum);
            }
        }
    }
    SwarmerField::from_values(*coarse_space, *coarse_age, values).expect("restricted dims")
}

fn pair_order(coarse_err: f64, fine_err: f64, floor: f64) -> f64 {
    if coarse_err <= floor && fine_err <= floor {
        f64::INFINITY
    } else {
        float::log2(coarse_err / fine_err)
    }
}

/// Run the study at `levels` refinement levels (at least 2 for any order).
pub fn study(cfg: &RunConfig, levels: u32) -> Result<StudyResult, CliError> {
    if levels < 2 {
        return Err(CliError::ConfigInvalid(
            "convergence study needs at least 2 levels".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut states: Vec<SystemState> = Vec::new();
    let mut zero_biomass = false;
    for level in 0..levels {
        let refined = refine(cfg, level);
        let violations = refined.validate_structure();
        if !violations.is_empty() {
            return Err(CliError::ConfigInvalid(format!(
                "level {level}: {}",
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        let (summary, state) = run_in_memory(&refined)?;
        zero_biomass |= summary.zero_initial_biomass;
        rows.push(LevelRow {
            level,
            nx: refined.grid.nx,
            na: state.rho.age().na,
            dt: refined.solver.dt,
            max_residual: summary.max_biomass_residual,
        });
        states.push(state);
    }

    let residual_orders: Vec<f64> = rows
        .windows(2)
        .map(|w| pair_order(w[0].max_residual, w[1].max_residual, ERROR_FLOOR))
        .collect();

    let mut solution_diffs = Vec::new();
    for pair in states.windows(2) {
        let coarse = &pair[0];
        let fine = &pair[1];
        let coarse_space = *coarse.rho.space();
        let coarse_age = *coarse.rho.age();
        let rho_restricted = restrict_swarmer(&fine.rho, &coarse_space, &coarse_age);
        let rho_diff = weighted_l2_difference(&coarse.rho, &rho_restricted, cfg.tau);
        let q_restricted = restrict_scalar(&fine.q, &coarse_space);
        let area = coarse_space.cell_area();
        let q_diff = float::sqrt(
            coarse
                .q
                .values()
                .iter()
                .zip(q_restricted.values())
                .map(|(&a, &b)| (a - b) * (a - b) * area)
                .sum(),
        );
        solution_diffs.push(rho_diff + q_diff);
    }
    let scale = states
        .last()
        .map(|s| {
            let n = swarmsim_core::compute_norms(&s.rho, &s.q, cfg.tau, false);
            n.rho_l2 + n.q_l2
        })
        .unwrap_or(1.0);
    let diff_floor = ERROR_FLOOR * (1.0 + scale);
    let diff_orders: Vec<f64> = solution_diffs
        .windows(2)
        .map(|w| pair_order(w[0], w[1], diff_floor))
        .collect();

    Ok(StudyResult {
        rows,
        residual_orders,
        solution_diffs,
        diff_orders,
        zero_biomass,
    })
}

fn fmt_order(o: f64) -> String {
    if o.is_infinite() {
        "inf (at rounding floor)".into()
    } else {
        format!("{o:.2}")
    }
}

/// `swarmsim convergence`: print the refinement table.
pub fn cmd_convergence(config_path: &Path, levels: u32) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let violations = cfg.validate_structure();
    if !violations.is_empty() {
        return Err(CliError::ConfigInvalid(
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        ));
    }
    let result = study(&cfg, levels)?;
    println!("level  nx    na    dt            max_biomass_residual");
    for row in &result.rows {
        println!(
            "{:<6} {:<5} {:<5} {:<13e} {:e}",
            row.level, row.nx, row.na, row.dt, row.max_residual
        );
    }
    if result.zero_biomass {
        println!("note: zero initial biomass; residuals are absolute");
    }
    for (i, order) in result.residual_orders.iter().enumerate() {
        println!("residual order {}->{}: {}", i, i + 1, fmt_order(*order));
    }
    for (i, diff) in result.solution_diffs.iter().enumerate() {
        println!("solution difference {}->{}: {diff:e}", i, i + 1);
    }
    for (i, order) in result.diff_orders.iter().enumerate() {
        println!("solution order {}->{}: {}", i, i + 1, fmt_order(*order));
    }
    Ok(())
}
