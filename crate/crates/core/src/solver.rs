//! Time integration of the coupled swarmer/swimmer/memory system.
//!
//! One step of size `dt` (with `dt = da` enforced so the age transport is an
//! exact index shift) proceeds in the dependency order of the linearized
//! scheme: the active biomass `P` is read from the current `rho`, the memory
//! `M` advances driven by that `P`, the diffusion coefficient `D(M, Q, P)`
//! is evaluated per cell, the swimmer equation advances with a Heun step,
//! and finally `rho` is shifted in age (renewal from the just-updated `Q`),
//! decayed, and diffused.
//!
//! Direct mode performs that sequence once. Picard mode repeats the
//! `rho`-update with the diffusion coefficient re-frozen at the latest
//! iterate until successive iterates agree in the weighted L² metric, which
//! makes direct mode the one-iteration truncation of picard mode.

use crate::coefficients::{chi, CoefficientSet};
use crate::diagnostics::{biomass_residual_at, compute_norms};
use crate::diffusion::{
    diffuse_level_explicit, diffuse_level_implicit, explicit_cfl_limit, CgFailure, DiffusionScheme,
};
use crate::field::{age_quadrature_with, weighted_age_integral, FieldRole, ScalarField, SwarmerField};
use crate::float;
use crate::hysteresis::memory_step;
use crate::stencil::FaceCoeffs;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Coupling mode of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    /// Single pass through the sub-steps (frozen coefficients from the
    /// start-of-step state).
    Direct,
    /// Fixed-point iteration on the frozen diffusion coefficient.
    Picard,
}

/// Time-stepping configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Time step; must equal the age spacing bit-for-bit.
    pub dt: f64,
    /// Final time; must be an integer number of steps.
    pub t_end: f64,
    pub mode: SolverMode,
    pub scheme: DiffusionScheme,
    /// Weighted L² threshold on successive picard iterates. Must sit above
    /// the diffusion solver's own noise floor (roughly `cg_tol` times the
    /// field scale), or the iteration can stall on solver rounding.
    pub picard_tol: f64,
    pub picard_max_iters: u32,
    /// Abort threshold for `(‖rho‖₂ + ‖Q‖₂) / (‖rho₀‖₂ + ‖Q₀‖₂)`.
    pub l2_blowup_factor: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            mode: SolverMode::Direct,
            scheme: DiffusionScheme::implicit_default(),
            picard_tol: 1e-8,
            picard_max_iters: 50,
            l2_blowup_factor: 1e3,
        }
    }
}

/// Full state of the coupled system at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub rho: SwarmerField,
    pub q: ScalarField,
    /// Active swarmer biomass, always consistent with `rho`.
    pub p: ScalarField,
    /// Memory field in `[0, 1]`.
    pub m: ScalarField,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub rho_l1: f64,
    pub q_l1: f64,
    pub rho_l2: f64,
    pub q_l2: f64,
    /// Relative residual of the exponential biomass identity (absolute when
    /// the initial biomass is zero).
    pub biomass_residual: f64,
    pub min_rho: f64,
    pub min_q: f64,
    pub picard_iters: u32,
    pub cg_iters: u32,
}

/// Error reported by a report sink (I/O lives outside this crate).
#[derive(Debug, Clone, PartialEq)]
pub struct SinkError(pub String);

impl fmt::Display for SinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "report sink failed: {}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Structural configuration problem caught at construction.
    InvalidSetup(String),
    /// The conjugate gradient stalled on an age level.
    Cg { level: usize, failure: CgFailure },
    /// Picard iteration exhausted its budget; carries the last iterate
    /// difference.
    PicardNoConvergence { iters: u32, last_diff: f64 },
    /// A field went negative beyond scheme guarantees.
    Positivity { what: &'static str, min: f64 },
    /// Explicit scheme stepped past its stability bound.
    CflViolation { dt: f64, limit: f64 },
    /// L² blow-up tripwire fired.
    L2BlowUp { t: f64, ratio: f64, factor: f64 },
    Sink(SinkError),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidSetup(msg) => write!(f, "invalid setup: {msg}"),
            SolverError::Cg { level, failure } => {
                write!(f, "diffusion solve failed on age level {level}: {failure}")
            }
            SolverError::PicardNoConvergence { iters, last_diff } => write!(
                f,
                "picard iteration did not converge after {iters} iterations \
                 (last difference {last_diff:e})"
            ),
            SolverError::Positivity { what, min } => {
                write!(f, "{what} lost nonnegativity (min {min:e})")
            }
            SolverError::CflViolation { dt, limit } => write!(
                f,
                "explicit diffusion unstable: dt = {dt:e} exceeds CFL limit {limit:e}"
            ),
            SolverError::L2BlowUp { t, ratio, factor } => write!(
                f,
                "L² monitor tripped at t = {t}: growth ratio {ratio:e} exceeds {factor:e}"
            ),
            SolverError::Sink(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

/// Strategy for mapping independent per-age-level work.
///
/// Implementations may parallelize, but each level must be processed by the
/// task exactly once, writing only its own slice and result slot; the solver
/// reduces results in level order afterward, so any partitioning yields
/// bitwise-identical output.
pub trait StepExecutor: Sync {
    fn run_levels(
        &self,
        values: &mut [f64],
        level_len: usize,
        results: &mut [Result<u32, CgFailure>],
        task: &(dyn Fn(usize, &mut [f64]) -> Result<u32, CgFailure> + Sync),
    );
}

/// Processes levels one after another on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequentialExecutor;

impl StepExecutor for SequentialExecutor {
    fn run_levels(
        &self,
        values: &mut [f64],
        level_len: usize,
        results: &mut [Result<u32, CgFailure>],
        task: &(dyn Fn(usize, &mut [f64]) -> Result<u32, CgFailure> + Sync),
    ) {
        for (k, chunk) in values.chunks_exact_mut(level_len).enumerate() {
            results[k] = task(k, chunk);
        }
    }
}

/// Receives one report per completed step (plus the initial state).
pub trait StepSink {
    fn on_report(&mut self, state: &SystemState, report: &StepReport) -> Result<(), SinkError>;
}

/// Sink that keeps reports in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub reports: Vec<StepReport>,
}

impl StepSink for VecSink {
    fn on_report(&mut self, _state: &SystemState, report: &StepReport) -> Result<(), SinkError> {
        self.reports.push(*report);
        Ok(())
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub max_biomass_residual: f64,
    /// Largest observed `(‖rho‖₂ + ‖Q‖₂) / (‖rho₀‖₂ + ‖Q₀‖₂)`.
    pub max_l2_ratio: f64,
    /// Initial biomass was zero; residuals are absolute values.
    pub zero_initial_biomass: bool,
}

/// A configured simulation holding the evolving state.
pub struct Simulation<'e> {
    coeffs: CoefficientSet,
    config: SolverConfig,
    executor: &'e dyn StepExecutor,
    state: SystemState,
    step_index: u64,
    n_steps: u64,
    initial_biomass: f64,
    initial_l2: f64,
    max_residual: f64,
    max_l2_ratio: f64,
}

impl fmt::Debug for Simulation<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("t", &self.state.t)
            .field("step_index", &self.step_index)
            .field("n_steps", &self.n_steps)
            .finish_non_exhaustive()
    }
}

impl<'e> Simulation<'e> {
    /// Assemble a simulation from validated pieces.
    ///
    /// Structural requirements (checked here): all fields share the grids,
    /// `dt = da` bit-for-bit, a finite maximum age must coincide with the
    /// numerical age horizon, `t_end` must be an integer number of steps,
    /// and the explicit scheme must satisfy its CFL bound for the largest
    /// admissible coefficient. Model hypotheses (`d > 0`, threshold order,
    /// ...) are reported by [`CoefficientSet::validate`] and deliberately
    /// not enforced here, so reduced configurations remain testable.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        coeffs: CoefficientSet,
        config: SolverConfig,
        rho0: SwarmerField,
        q0: ScalarField,
        m0: ScalarField,
        executor: &'e dyn StepExecutor,
    ) -> Result<Self, SolverError> {
        let space = *rho0.space();
        let age = *rho0.age();
        if q0.grid() != &space || m0.grid() != &space {
            return Err(SolverError::InvalidSetup(String::from(
                "initial fields live on different grids",
            )));
        }
        if q0.role() != FieldRole::Q || m0.role() != FieldRole::M {
            return Err(SolverError::InvalidSetup(String::from(
                "initial scalar fields carry wrong role tags",
            )));
        }
        if config.dt.to_bits() != age.da.to_bits() {
            return Err(SolverError::InvalidSetup(format!(
                "dt = {} must equal the age spacing da = {} exactly",
                config.dt, age.da
            )));
        }
        if coeffs.max_age.is_finite() && coeffs.max_age.to_bits() != age.a_max_num.to_bits() {
            return Err(SolverError::InvalidSetup(format!(
                "finite max age {} must equal na·da = {} exactly",
                coeffs.max_age, age.a_max_num
            )));
        }
        if !(config.t_end >= 0.0) {
            return Err(SolverError::InvalidSetup(format!(
                "t_end must be nonnegative, got {}",
                config.t_end
            )));
        }
        let steps_f = config.t_end / config.dt;
        let n_steps = if steps_f < 0.5 {
            0
        } else {
            (steps_f + 0.5) as u64
        };
        if (n_steps as f64 * config.dt - config.t_end).abs() > 1e-9 * config.t_end.max(1.0) {
            return Err(SolverError::InvalidSetup(format!(
                "t_end = {} is not an integer number of steps of dt = {}",
                config.t_end, config.dt
            )));
        }
        if let DiffusionScheme::Explicit = config.scheme {
            let limit = explicit_cfl_limit(&space, coeffs.law.max_value() + coeffs.d);
            if config.dt > limit {
                return Err(SolverError::CflViolation {
                    dt: config.dt,
                    limit,
                });
            }
        }

        let p0 = weighted_age_integral(&rho0, 1.0 / coeffs.tau, age.a_min_index);
        let norms = compute_norms(&rho0, &q0, coeffs.tau, false);
        let state = SystemState {
            t: 0.0,
            rho: rho0,
            q: q0,
            p: p0,
            m: m0,
        };
        Ok(Simulation {
            coeffs,
            config,
            executor,
            state,
            step_index: 0,
            n_steps,
            initial_biomass: norms.rho_l1 + norms.q_l1,
            initial_l2: norms.rho_l2 + norms.q_l2,
            max_residual: 0.0,
            max_l2_ratio: if norms.rho_l2 + norms.q_l2 > 0.0 {
                1.0
            } else {
                0.0
            },
        })
    }

    #[inline]
    pub fn state(&self) -> &SystemState {
        &self.state
    }

    #[inline]
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    #[inline]
    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    #[inline]
    pub fn planned_steps(&self) -> u64 {
        self.n_steps
    }

    /// Diagnostics of the current state (used for the step-zero report).
    pub fn report_current(&self, picard_iters: u32, cg_iters: u32) -> StepReport {
        let norms = compute_norms(&self.state.rho, &self.state.q, self.coeffs.tau, false);
        StepReport {
            t: self.state.t,
            rho_l1: norms.rho_l1,
            q_l1: norms.q_l1,
            rho_l2: norms.rho_l2,
            q_l2: norms.q_l2,
            biomass_residual: biomass_residual_at(
                norms.rho_l1 + norms.q_l1,
                self.initial_biomass,
                self.state.t,
                self.coeffs.tau,
            ),
            min_rho: self.state.rho.min_value(),
            min_q: self.state.q.min_value(),
            picard_iters,
            cg_iters,
        }
    }

    /// Advance one step in the configured mode.
    pub fn step(&mut self) -> Result<StepReport, SolverError> {
        let dt = self.config.dt;
        // Memory advances on the start-of-step drive in both modes.
        let (m_start, _) = memory_step(
            &self.state.m,
            &self.state.p,
            &self.coeffs.thresholds,
            dt,
        );
        // The swimmer update only reads the start-of-step rho, so it is
        // shared by every picard iterate.
        let q_next = self.q_step(dt)?;

        let (rho_next, p_next, m_next, picard_iters, cg_iters) = match self.config.mode {
            SolverMode::Direct => {
                let d_cells = self.eval_d_field(&m_start, &self.state.q, &self.state.p);
                let (rho, cg) = self.rho_step(&d_cells, &q_next, dt)?;
                let p = weighted_age_integral(
                    &rho,
                    1.0 / self.coeffs.tau,
                    rho.age().a_min_index,
                );
                (rho, p, m_start, 1, cg)
            }
            SolverMode::Picard => self.picard_loop(&m_start, &q_next, dt)?,
        };

        let min_q = q_next.min_value();
        if min_q < 0.0 {
            return Err(SolverError::Positivity {
                what: "Q",
                min: min_q,
            });
        }
        let min_rho = rho_next.min_value();
        if min_rho < 0.0 {
            return Err(SolverError::Positivity {
                what: "rho",
                min: min_rho,
            });
        }

        self.step_index += 1;
        self.state.t = self.step_index as f64 * dt;
        self.state.rho = rho_next;
        self.state.q = q_next;
        self.state.p = p_next;
        self.state.m = m_next;

        let report = self.report_current(picard_iters, cg_iters);
        self.max_residual = self.max_residual.max(report.biomass_residual);
        if self.initial_l2 > 0.0 {
            let ratio = (report.rho_l2 + report.q_l2) / self.initial_l2;
            self.max_l2_ratio = self.max_l2_ratio.max(ratio);
        }
        Ok(report)
    }

    /// Run to `t_end`, reporting every step (and the initial state) to the
    /// sink. Any step failure aborts; the L² tripwire aborts likewise.
    pub fn run(&mut self, sink: &mut dyn StepSink) -> Result<RunSummary, SolverError> {
        let initial = self.report_current(0, 0);
        sink.on_report(&self.state, &initial).map_err(SolverError::Sink)?;
        while self.step_index < self.n_steps {
            let report = self.step()?;
            sink.on_report(&self.state, &report).map_err(SolverError::Sink)?;
            if self.initial_l2 > 0.0 {
                let ratio = (report.rho_l2 + report.q_l2) / self.initial_l2;
                if ratio > self.config.l2_blowup_factor {
                    return Err(SolverError::L2BlowUp {
                        t: report.t,
                        ratio,
                        factor: self.config.l2_blowup_factor,
                    });
                }
            }
        }
        Ok(RunSummary {
            steps: self.step_index,
            max_biomass_residual: self.max_residual,
            max_l2_ratio: self.max_l2_ratio,
            zero_initial_biomass: self.initial_biomass == 0.0,
        })
    }

    /// Heun step of the swimmer equation
    /// `dQ/dt = ((1 - xi)/tau) Q + ∫ mu rho e^{a/tau} da + chi(A) rho(A) e^{A/tau}`,
    /// with the swarmer-derived source frozen over the step.
    fn q_step(&self, dt: f64) -> Result<ScalarField, SolverError> {
        let coeffs = &self.coeffs;
        let tau = coeffs.tau;
        let rho = &self.state.rho;
        let n = rho.space().cells();

        let mut source = vec![0.0; n];
        if coeffs.mu != crate::coefficients::MuModel::Zero {
            let mu_quad = age_quadrature_with(
                rho,
                0,
                |a| coeffs.eval_mu(a) * float::exp(a / tau),
                |v| v,
            );
            source.copy_from_slice(&mu_quad);
        }
        if chi(coeffs.max_age) == 1.0 {
            let growth = float::exp(coeffs.max_age / tau);
            let top = rho.level(rho.age().na - 1);
            for (s, &r) in source.iter_mut().zip(top) {
                *s += growth * r;
            }
        }

        let mut q_next = self.state.q.clone();
        for (qv, &s) in q_next.values_mut().iter_mut().zip(&source) {
            let q0 = *qv;
            let f = |q: f64| (1.0 - coeffs.eval_xi(q)) / tau * q + s;
            let k1 = f(q0);
            let k2 = f(q0 + dt * k1);
            *qv = q0 + 0.5 * dt * (k1 + k2);
        }
        let min_q = q_next.min_value();
        if min_q < 0.0 {
            // The scheme guarantees nonnegativity for admissible
            // coefficients; reject the step rather than continue.
            return Err(SolverError::Positivity {
                what: "Q",
                min: min_q,
            });
        }
        Ok(q_next)
    }

    /// Shift in age with renewal from the updated swimmers, apply the exact
    /// decay factor, then diffuse every level but the newborn one.
    fn rho_step(
        &self,
        d_cells: &[f64],
        q_next: &ScalarField,
        dt: f64,
    ) -> Result<(SwarmerField, u32), SolverError> {
        let coeffs = &self.coeffs;
        let mut rho = self.state.rho.clone();
        let age = *rho.age();
        let space = *rho.space();
        let n = space.cells();

        // Renewal trace at the new time level.
        let renewal: Vec<f64> = q_next
            .values()
            .iter()
            .map(|&q| coeffs.eval_xi(q) / coeffs.tau * q)
            .collect();
        rho.shift_age_up(&renewal);

        // Pointwise decay along the characteristic, exact for frozen mu.
        if coeffs.mu != crate::coefficients::MuModel::Zero {
            for k in 1..age.na {
                let factor = float::exp(-coeffs.eval_mu(age.level_age(k)) * dt);
                for v in rho.level_mut(k) {
                    *v *= factor;
                }
            }
        }

        // Diffusion on the shifted levels; the newborn level is the boundary
        // trace at the new time and is not diffused this step.
        if age.na == 1 {
            return Ok((rho, 0));
        }
        let faces = FaceCoeffs::build(&space, d_cells, coeffs.d);
        if let DiffusionScheme::Explicit = self.config.scheme {
            let limit = explicit_cfl_limit(&space, faces.max_cell_coeff());
            if dt > limit {
                return Err(SolverError::CflViolation { dt, limit });
            }
        }
        let scheme = self.config.scheme;
        let task = move |_k: usize, level: &mut [f64]| -> Result<u32, CgFailure> {
            let iters = match scheme {
                DiffusionScheme::Implicit {
                    cg_tol,
                    cg_max_iters,
                } => diffuse_level_implicit(&faces, dt, level, cg_tol, cg_max_iters)?,
                DiffusionScheme::Explicit => {
                    diffuse_level_explicit(&faces, dt, level);
                    0
                }
            };
            // The exact solution of the M-matrix system is nonnegative for
            // nonnegative data; floor the iterative solver's rounding noise.
            for v in level.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            Ok(iters)
        };
        let mut results = vec![Ok(0u32); age.na - 1];
        self.executor
            .run_levels(&mut rho.values_mut()[n..], n, &mut results, &task);
        let mut cg_total = 0u32;
        for (k, res) in results.iter().enumerate() {
            match res {
                Ok(iters) => cg_total = cg_total.saturating_add(*iters),
                Err(failure) => {
                    return Err(SolverError::Cg {
                        level: k + 1,
                        failure: *failure,
                    })
                }
            }
        }
        Ok((rho, cg_total))
    }

    /// Freeze the diffusion coefficient, solve, and repeat until successive
    /// iterates agree (or the coefficient stops changing bit-for-bit, which
    /// makes further iterations no-ops).
    ///
    /// The memory field is advanced once, on the beginning-of-step drive
    /// (explicit coupling), so only `(Q, P)` feed back into the frozen
    /// coefficient across iterates.
    fn picard_loop(
        &self,
        m_start: &ScalarField,
        q_next: &ScalarField,
        dt: f64,
    ) -> Result<(SwarmerField, ScalarField, ScalarField, u32, u32), SolverError> {
        let tau = self.coeffs.tau;
        let mut d_prev = self.eval_d_field(m_start, &self.state.q, &self.state.p);
        let (mut rho_k, mut cg_total) = self.rho_step(&d_prev, q_next, dt)?;
        let mut p_k = weighted_age_integral(&rho_k, 1.0 / tau, rho_k.age().a_min_index);
        let mut iters = 1u32;
        let mut last_diff = f64::INFINITY;
        loop {
            let d_next = self.eval_d_field(m_start, q_next, &p_k);
            if d_next == d_prev {
                // Identical frozen coefficient reproduces the same solve.
                break;
            }
            if iters >= self.config.picard_max_iters {
                return Err(SolverError::PicardNoConvergence { iters, last_diff });
            }
            let (rho_new, cg) = self.rho_step(&d_next, q_next, dt)?;
            cg_total = cg_total.saturating_add(cg);
            iters += 1;
            let diff = weighted_l2_difference(&rho_new, &rho_k, tau);
            rho_k = rho_new;
            p_k = weighted_age_integral(&rho_k, 1.0 / tau, rho_k.age().a_min_index);
            d_prev = d_next;
            last_diff = diff;
            if diff < self.config.picard_tol {
                break;
            }
        }
        Ok((rho_k, p_k, m_start.clone(), iters, cg_total))
    }

    /// Swarm diffusion coefficient per cell from `(M, Q, P)`.
    fn eval_d_field(&self, m: &ScalarField, q: &ScalarField, p: &ScalarField) -> Vec<f64> {
        m.values()
            .iter()
            .zip(q.values())
            .zip(p.values())
            .map(|((&mv, &qv), &pv)| self.coeffs.eval_diffusion(mv, qv, pv))
            .collect()
    }
}

/// Weighted L² distance `(∫∫ (a - b)² e^{a/tau} dx da)^{1/2}` between two
/// swarmer fields, used as the picard iterate metric.
pub fn weighted_l2_difference(a: &SwarmerField, b: &SwarmerField, tau: f64) -> f64 {
    debug_assert_eq!(a.space(), b.space());
    debug_assert_eq!(a.age(), b.age());
    let diff = SwarmerField::from_values(
        *a.space(),
        *a.age(),
        a.values()
            .iter()
            .zip(b.values())
            .map(|(&x, &y)| x - y)
            .collect(),
    )
    .expect("same dimensions");
    let cells = crate::field::age_quadrature(&diff, 1.0 / tau, 0, |v| v * v);
    let area = a.space().cell_area();
    float::sqrt(cells.iter().map(|&c| c * area).sum())
}
