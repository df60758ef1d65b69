//! Five-point flux-form stencil for `∇·[c ∇u]` with zero-flux boundaries.
//!
//! Face coefficients are the arithmetic mean of the two adjacent cell values
//! of `c`; boundary faces carry zero flux, which realizes the homogeneous
//! Neumann condition of the model exactly on the cell-centered grid.

use crate::field::ScalarField;
use crate::grid::SpaceGrid;
use alloc::vec;
use alloc::vec::Vec;

/// Precomputed face coefficients for one diffusion operator.
///
/// `ew[j * (nx - 1) + i]` is the coefficient on the face between cells
/// `(i, j)` and `(i + 1, j)`; `ns[j * nx + i]` between `(i, j)` and
/// `(i, j + 1)`. Boundary faces are implicit (zero flux, never stored).
#[derive(Debug, Clone)]
pub struct FaceCoeffs {
    pub grid: SpaceGrid,
    pub ew: Vec<f64>,
    pub ns: Vec<f64>,
    max_cell: f64,
}

impl FaceCoeffs {
    /// Arithmetic-mean face coefficients of `cell_coeff + d`.
    ///
    /// `cell_coeff >= 0` and `d >= 0` keep every face nonnegative; with
    /// `d > 0` faces are strictly positive.
    pub fn build(grid: &SpaceGrid, cell_coeff: &[f64], d: f64) -> Self {
        debug_assert_eq!(cell_coeff.len(), grid.cells());
        let (nx, ny) = (grid.nx, grid.ny);
        let mut ew = vec![0.0; (nx - 1) * ny];
        let mut ns = vec![0.0; nx * (ny - 1)];
        let mut max_cell = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let c = cell_coeff[grid.idx(i, j)] + d;
                max_cell = max_cell.max(c);
                if i + 1 < nx {
                    ew[j * (nx - 1) + i] = 0.5 * (c + cell_coeff[grid.idx(i + 1, j)] + d);
                }
                if j + 1 < ny {
                    ns[j * nx + i] = 0.5 * (c + cell_coeff[grid.idx(i, j + 1)] + d);
                }
            }
        }
        FaceCoeffs {
            grid: *grid,
            ew,
            ns,
            max_cell,
        }
    }

    /// Uniform coefficient on every cell.
    pub fn constant(grid: &SpaceGrid, c: f64) -> Self {
        let cells = vec![c; grid.cells()];
        FaceCoeffs::build(grid, &cells, 0.0)
    }

    /// Largest cell-centered coefficient, for CFL checks.
    #[inline]
    pub fn max_cell_coeff(&self) -> f64 {
        self.max_cell
    }

    /// Apply `∇·[c ∇u]` to `u`, writing into `out`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        debug_assert_eq!(u.len(), g.cells());
        debug_assert_eq!(out.len(), g.cells());
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        let inv_dy2 = 1.0 / (g.dy * g.dy);
        for j in 0..ny {
            for i in 0..nx {
                let c = g.idx(i, j);
                let mut acc = 0.0;
                if i > 0 {
                    acc += self.ew[j * (nx - 1) + i - 1] * (u[c - 1] - u[c]) * inv_dx2;
                }
                if i + 1 < nx {
                    acc += self.ew[j * (nx - 1) + i] * (u[c + 1] - u[c]) * inv_dx2;
                }
                if j > 0 {
                    acc += self.ns[(j - 1) * nx + i] * (u[c - nx] - u[c]) * inv_dy2;
                }
                if j + 1 < ny {
                    acc += self.ns[j * nx + i] * (u[c + nx] - u[c]) * inv_dy2;
                }
                out[c] = acc;
            }
        }
    }
}

/// Flux-form variable-coefficient Laplacian of a scalar field.
///
/// Requires `coeff >= 0` everywhere; the result carries `u`'s role tag.
pub fn laplacian_variable_coeff(u: &ScalarField, coeff: &ScalarField) -> ScalarField {
    debug_assert_eq!(u.grid(), coeff.grid());
    let faces = FaceCoeffs::build(u.grid(), coeff.values(), 0.0);
    let mut out = vec![0.0; u.grid().cells()];
    faces.apply(u.values(), &mut out);
    ScalarField::from_values(*u.grid(), u.role(), out).expect("length preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;
    use crate::float;

    #[test]
    fn constant_field_has_zero_laplacian() {
        let g = SpaceGrid::new(7, 5, 2.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, FieldRole::Q, |_, _| 3.25);
        let c = ScalarField::from_fn(g, FieldRole::Q, |x, y| 1.0 + x + y * y);
        let lap = laplacian_variable_coeff(&u, &c);
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn neumann_cosine_is_discrete_eigenfunction() {
        // u = cos(pi x / lx) with constant coefficient k: the cell-centered
        // reflection stencil has exact eigenvalue -4 k sin²(θ/2)/dx²,
        // θ = pi dx / lx, which approaches -k (pi/lx)² at second order.
        let k = 0.7;
        for nx in [16usize, 32, 64] {
            let g = SpaceGrid::new(nx, 3, 1.0, 1.0).unwrap();
            let u = ScalarField::from_fn(g, FieldRole::Q, |x, _| {
                (core::f64::consts::PI * x / g.lx).cos()
            });
            let c = ScalarField::from_fn(g, FieldRole::Q, |_, _| k);
            let lap = laplacian_variable_coeff(&u, &c);
            let lambda = k * (core::f64::consts::PI / g.lx).powi(2);
            let theta = core::f64::consts::PI * g.dx / g.lx;
            let bound = lambda * theta * theta / 12.0 * 1.05 + 1e-12;
            for (idx, (&l, &uv)) in lap.values().iter().zip(u.values()).enumerate() {
                assert!(
                    (l + lambda * uv).abs() <= bound.max(1e-10),
                    "nx = {nx}, cell {idx}: lap = {l}, -λu = {}",
                    -lambda * uv
                );
            }
        }
    }

    #[test]
    fn divergence_theorem_on_random_like_data() {
        let g = SpaceGrid::new(13, 9, 1.5, 0.75).unwrap();
        // Deterministic wiggly data; no RNG needed.
        let u = ScalarField::from_fn(g, FieldRole::Q, |x, y| {
            float::exp((23.0 * x).cos() + 0.3 * y) - y * x
        });
        let c = ScalarField::from_fn(g, FieldRole::Q, |x, y| 0.5 + (7.0 * x * y).cos().abs());
        let lap = laplacian_variable_coeff(&u, &c);
        let total: f64 = lap.values().iter().map(|v| v * g.cell_area()).sum();
        let max_flux = lap
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs() * g.cell_area()));
        assert!(
            total.abs() <= 1e-12 * g.cells() as f64 * max_flux.max(1e-300),
            "total = {total}, max_flux = {max_flux}"
        );
    }
}
