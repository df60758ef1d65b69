//! Deterministic simulator core for a two-phase, age-structured bacterial
//! swarm-colony model.
//!
//! The model couples three unknowns on a rectangular domain:
//!
//! * `rho(t, a, x)` — density of swarmer cells of age `a`, transported along
//!   age characteristics, decaying at rate `mu`, and spreading under a
//!   nonlinear diffusion coefficient `D(M, Q, P) + d`;
//! * `Q(t, x)` — swimmer biomass, fed by swarmer dedifferentiation and
//!   drained by the renewal condition `rho(·, 0, ·) = (xi / tau) Q`;
//! * `M(t, x)` — a memory (hysteresis) field in `[0, 1]` driven by the active
//!   swarmer biomass `P` through a regularized relay ODE.
//!
//! Biomass is weighted by `exp(a / tau)`, so the exact law
//! `‖rho(t)‖₁ + ‖Q(t)‖₁ = (‖rho₀‖₁ + ‖Q₀‖₁) · exp(t / tau)` holds regardless
//! of the other coefficients; the solver monitors the discrete residual of
//! that identity every step, along with positivity and an L² blow-up
//! tripwire.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the default
//! `std` feature and enable `libm` instead. All I/O (config files, snapshots,
//! CSV reports, CLI) lives in the companion `swarmsim-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("swarmsim-core requires either the `std` or the `libm` feature");

pub mod coefficients;
pub mod diagnostics;
pub mod diffusion;
pub mod field;
pub mod float;
pub mod grid;
pub mod hysteresis;
pub mod solver;
pub mod stencil;

pub use coefficients::{
    chi, heaviside, ramp_hr, CoefficientSet, DiffusionLaw, GammaVariant, MuModel, Thresholds,
    Violation, XiModel,
};
pub use diagnostics::{biomass_residual_series, compute_norms, order_of_convergence, NormSet};
pub use field::{weighted_age_integral, FieldRole, ScalarField, SwarmerField};
pub use grid::{AgeGrid, GridError, SpaceGrid};
pub use solver::{
    RunSummary, SequentialExecutor, Simulation, SolverConfig, SolverError, SolverMode,
    StepExecutor, StepReport, StepSink, SystemState,
};
