//! Per-age-level diffusion solves for `∂u/∂t = ∇·[(D + d) ∇u]`.
//!
//! The implicit path solves `(I - dt·L) u' = u` with a Jacobi-preconditioned
//! conjugate gradient; `I - dt·L` is symmetric positive definite and an
//! M-matrix (unit diagonal dominance, nonpositive off-diagonals), so the
//! exact solution of a nonnegative right-hand side is nonnegative. The
//! explicit path applies one forward Euler step and is only stable under the
//! CFL bound `dt·max(D + d)·(2/dx² + 2/dy²) <= 1`.

use crate::grid::SpaceGrid;
use crate::stencil::FaceCoeffs;
use alloc::vec;
use core::fmt;

/// Time discretization of the diffusion sub-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionScheme {
    Implicit { cg_tol: f64, cg_max_iters: u32 },
    Explicit,
}

impl DiffusionScheme {
    /// Defaults: relative residual 1e-10, 500 iterations.
    pub fn implicit_default() -> Self {
        DiffusionScheme::Implicit {
            cg_tol: 1e-10,
            cg_max_iters: 500,
        }
    }
}

/// Conjugate-gradient failure: the relative residual after `iters` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgFailure {
    pub iters: u32,
    pub relative_residual: f64,
}

impl fmt::Display for CgFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conjugate gradient stalled after {} iterations (relative residual {:e})",
            self.iters, self.relative_residual
        )
    }
}

/// Largest stable explicit time step for the given face coefficients.
pub fn explicit_cfl_limit(grid: &SpaceGrid, max_coeff: f64) -> f64 {
    let rate = max_coeff * (2.0 / (grid.dx * grid.dx) + 2.0 / (grid.dy * grid.dy));
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// One forward Euler step in place.
pub fn diffuse_level_explicit(faces: &FaceCoeffs, dt: f64, level: &mut [f64]) {
    let mut lap = vec![0.0; level.len()];
    faces.apply(level, &mut lap);
    for (u, l) in level.iter_mut().zip(&lap) {
        *u += dt * l;
    }
}

/// One backward Euler step in place; returns the CG iteration count.
///
/// The iteration starts from the right-hand side itself (diffusion is a
/// perturbation of the identity here) and measures convergence against
/// `cg_tol · ‖b‖₂`. A zero right-hand side or an all-zero coefficient field
/// short-circuits exactly.
pub fn diffuse_level_implicit(
    faces: &FaceCoeffs,
    dt: f64,
    level: &mut [f64],
    cg_tol: f64,
    cg_max_iters: u32,
) -> Result<u32, CgFailure> {
    let n = level.len();
    if faces.max_cell_coeff() == 0.0 {
        return Ok(0); // identity system
    }
    let bb: f64 = level.iter().map(|&v| v * v).sum();
    if bb == 0.0 {
        return Ok(0); // exact zeros propagate exactly
    }

    let g = &faces.grid;
    let (nx, ny) = (g.nx, g.ny);
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    let inv_dy2 = 1.0 / (g.dy * g.dy);

    // Jacobi preconditioner: the diagonal of I - dt·L.
    let mut diag = vec![1.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let c = g.idx(i, j);
            let mut sum = 0.0;
            if i > 0 {
                sum += faces.ew[j * (nx - 1) + i - 1] * inv_dx2;
            }
            if i + 1 < nx {
                sum += faces.ew[j * (nx - 1) + i] * inv_dx2;
            }
            if j > 0 {
                sum += faces.ns[(j - 1) * nx + i] * inv_dy2;
            }
            if j + 1 < ny {
                sum += faces.ns[j * nx + i] * inv_dy2;
            }
            diag[c] += dt * sum;
        }
    }

    let matvec = |x: &[f64], out: &mut [f64], lap: &mut [f64]| {
        faces.apply(x, lap);
        for ((o, &xv), &l) in out.iter_mut().zip(x).zip(lap.iter()) {
            *o = xv - dt * l;
        }
    };

    let mut lap = vec![0.0; n];
    let mut x = level.to_vec();
    let mut ax = vec![0.0; n];
    matvec(&x, &mut ax, &mut lap);
    let mut r: alloc::vec::Vec<f64> = level.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
    let mut z: alloc::vec::Vec<f64> = r.iter().zip(&diag).map(|(&rv, &d)| rv / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let tol2 = cg_tol * cg_tol * bb;

    let mut iters = 0u32;
    loop {
        let rr: f64 = r.iter().map(|&v| v * v).sum();
        if rr <= tol2 {
            level.copy_from_slice(&x);
            return Ok(iters);
        }
        if iters >= cg_max_iters {
            return Err(CgFailure {
                iters,
                relative_residual: crate::float::sqrt(rr / bb),
            });
        }
        matvec(&p, &mut ax, &mut lap);
        let pap: f64 = p.iter().zip(&ax).map(|(&a, &b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(CgFailure {
                iters,
                relative_residual: crate::float::sqrt(rr / bb),
            });
        }
        let alpha = rz / pap;
        for ((xv, &pv), (rv, &av)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ax)) {
            *xv += alpha * pv;
            *rv -= alpha * av;
        }
        for ((zv, &rv), &d) in z.iter_mut().zip(&r).zip(&diag) {
            *zv = rv / d;
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for (pv, &zv) in p.iter_mut().zip(&z) {
            *pv = zv + beta * *pv;
        }
        iters += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn grid(nx: usize) -> SpaceGrid {
        SpaceGrid::new(nx, 3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_coefficients_are_identity() {
        let g = grid(8);
        let faces = FaceCoeffs::constant(&g, 0.0);
        let mut level: Vec<f64> = (0..g.cells()).map(|i| i as f64 * 0.1).collect();
        let before = level.clone();
        let iters = diffuse_level_implicit(&faces, 0.5, &mut level, 1e-10, 100).unwrap();
        assert_eq!(iters, 0);
        assert_eq!(level, before);
    }

    #[test]
    fn zero_rhs_stays_exactly_zero() {
        let g = grid(8);
        let faces = FaceCoeffs::constant(&g, 1.0);
        let mut level = vec![0.0; g.cells()];
        diffuse_level_implicit(&faces, 0.5, &mut level, 1e-10, 100).unwrap();
        assert!(level.iter().all(|&v| v.to_bits() == 0));
    }

    #[test]
    fn implicit_step_damps_neumann_mode_by_discrete_factor() {
        // u = 1 + cos(pi x / lx): the cosine is an exact eigenvector, the
        // constant is in the kernel, so one backward Euler step divides the
        // mode by 1 + dt·λ_h with λ_h = 4 k sin²(θ/2) / dx².
        let k = 0.3;
        let g = grid(32);
        let faces = FaceCoeffs::constant(&g, k);
        let dt = 0.05;
        let theta = core::f64::consts::PI / g.nx as f64;
        let lambda_h = 4.0 * k * (theta / 2.0).sin().powi(2) / (g.dx * g.dx);
        let mode = |i: usize| (core::f64::consts::PI * (i as f64 + 0.5) / g.nx as f64).cos();
        let mut level: Vec<f64> = (0..g.cells()).map(|c| 1.0 + mode(c % g.nx)).collect();
        diffuse_level_implicit(&faces, dt, &mut level, 1e-12, 500).unwrap();
        let damp = 1.0 / (1.0 + dt * lambda_h);
        for (c, &v) in level.iter().enumerate() {
            let expected = 1.0 + damp * mode(c % g.nx);
            assert!((v - expected).abs() < 1e-9, "cell {c}: {v} vs {expected}");
        }
    }

    #[test]
    fn implicit_conserves_mass() {
        let g = grid(16);
        let cells: Vec<f64> = (0..g.cells())
            .map(|i| 0.2 + ((i * 2654435761) % 97) as f64 / 97.0)
            .collect();
        let faces = FaceCoeffs::build(&g, &cells, 1e-3);
        let mut level: Vec<f64> = (0..g.cells())
            .map(|i| ((i * 40503) % 101) as f64 / 101.0)
            .collect();
        let before: f64 = level.iter().sum();
        diffuse_level_implicit(&faces, 0.1, &mut level, 1e-12, 1000).unwrap();
        let after: f64 = level.iter().sum();
        assert!(
            (before - after).abs() <= 1e-9 * before.abs(),
            "mass drift: {before} -> {after}"
        );
    }

    #[test]
    fn implicit_preserves_nonnegativity_up_to_solver_noise() {
        let g = grid(12);
        let faces = FaceCoeffs::constant(&g, 2.0);
        let mut level = vec![0.0; g.cells()];
        level[g.idx(5, 1)] = 1.0; // delta spike
        diffuse_level_implicit(&faces, 1.0, &mut level, 1e-12, 1000).unwrap();
        for &v in &level {
            assert!(v >= -1e-12, "negative beyond solver noise: {v}");
        }
    }

    #[test]
    fn explicit_at_cfl_keeps_nonnegativity() {
        let g = grid(10);
        let faces = FaceCoeffs::constant(&g, 1.0);
        let dt = explicit_cfl_limit(&g, faces.max_cell_coeff());
        let mut level = vec![0.0; g.cells()];
        level[g.idx(4, 1)] = 1.0;
        for _ in 0..50 {
            diffuse_level_explicit(&faces, dt, &mut level);
            assert!(level.iter().all(|&v| v >= -1e-15));
        }
        let total: f64 = level.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_failure_reports_residual() {
        let g = grid(24);
        let faces = FaceCoeffs::constant(&g, 50.0);
        let mut level: Vec<f64> = (0..g.cells()).map(|i| (i % 7) as f64).collect();
        let err = diffuse_level_implicit(&faces, 10.0, &mut level, 1e-14, 1).unwrap_err();
        assert_eq!(err.iters, 1);
        assert!(err.relative_residual > 0.0);
    }
}
