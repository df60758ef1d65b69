//! Field containers and the weighted age quadrature.
//!
//! A `SwarmerField` samples `rho(a, x)` on the `na × ny × nx` lattice; a
//! `ScalarField` samples one of `Q`, `P` or `M` on the space lattice. Fields
//! are plain value types: solver steps consume the previous state and produce
//! a new one, so a published state is never mutated.

use crate::float;
use crate::grid::{AgeGrid, SpaceGrid};
use alloc::vec;
use alloc::vec::Vec;

/// Which model quantity a scalar field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    /// Swimmer biomass density.
    Q,
    /// Active swarmer biomass (age integral of `rho` above `a_min`).
    P,
    /// Memory (hysteresis) field, constrained to `[0, 1]`.
    M,
}

impl FieldRole {
    pub fn tag(&self) -> &'static str {
        match self {
            FieldRole::Q => "q",
            FieldRole::P => "p",
            FieldRole::M => "m",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "q" => Some(FieldRole::Q),
            "p" => Some(FieldRole::P),
            "m" => Some(FieldRole::M),
            _ => None,
        }
    }
}

/// Scalar field on the space lattice, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: SpaceGrid,
    role: FieldRole,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: SpaceGrid, role: FieldRole) -> Self {
        ScalarField {
            grid,
            role,
            values: vec![0.0; grid.cells()],
        }
    }

    /// Fill from a function of the cell-center coordinates.
    pub fn from_fn(grid: SpaceGrid, role: FieldRole, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField { grid, role, values }
    }

    /// Wrap an existing value vector; `values.len()` must match the grid.
    pub fn from_values(grid: SpaceGrid, role: FieldRole, values: Vec<f64>) -> Option<Self> {
        (values.len() == grid.cells()).then_some(ScalarField { grid, role, values })
    }

    #[inline]
    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    #[inline]
    pub fn role(&self) -> FieldRole {
        self.role
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Minimum value (fixed scan order).
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Maximum value (fixed scan order).
    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Age-structured swarmer density on the `na × ny × nx` lattice.
///
/// Values are stored age-major: level `k` occupies the contiguous slice
/// `[k · ny · nx, (k + 1) · ny · nx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmerField {
    space: SpaceGrid,
    age: AgeGrid,
    values: Vec<f64>,
}

impl SwarmerField {
    pub fn zeros(space: SpaceGrid, age: AgeGrid) -> Self {
        SwarmerField {
            space,
            age,
            values: vec![0.0; age.na * space.cells()],
        }
    }

    /// Fill from a function of `(a, x, y)` at level ages and cell centers.
    pub fn from_fn(
        space: SpaceGrid,
        age: AgeGrid,
        mut f: impl FnMut(f64, f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(age.na * space.cells());
        for k in 0..age.na {
            let a = age.level_age(k);
            for j in 0..space.ny {
                for i in 0..space.nx {
                    let (x, y) = space.center(i, j);
                    values.push(f(a, x, y));
                }
            }
        }
        SwarmerField { space, age, values }
    }

    pub fn from_values(space: SpaceGrid, age: AgeGrid, values: Vec<f64>) -> Option<Self> {
        (values.len() == age.na * space.cells()).then_some(SwarmerField { space, age, values })
    }

    #[inline]
    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    #[inline]
    pub fn age(&self) -> &AgeGrid {
        &self.age
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Age level `k` as a space-lattice slice.
    #[inline]
    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.space.cells();
        &self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.space.cells();
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Shift all levels one step up in age and fill level 0 with `renewal`.
    ///
    /// The value shifted out of the top level is discarded here; the solver
    /// routes it into the swimmer equation's boundary term beforehand.
    pub fn shift_age_up(&mut self, renewal: &[f64]) {
        let n = self.space.cells();
        debug_assert_eq!(renewal.len(), n);
        for k in (1..self.age.na).rev() {
            let (lo, hi) = self.values.split_at_mut(k * n);
            hi[..n].copy_from_slice(&lo[(k - 1) * n..]);
        }
        self.values[..n].copy_from_slice(renewal);
    }
}

/// Trapezoidal age quadrature with an arbitrary per-level factor.
///
/// Computes `∫ factor(a) · map(f) da` over `[lower_index · da, a_max_num]`
/// per cell, left-to-right in age. The half-open age interval stores levels
/// up to `a_max_num - da`; the final panel uses a virtual node at `a_max_num`
/// carrying the last level's values (the same convention the solver uses for
/// the `rho(·, A, ·)` trace), which keeps the quadrature second order in `da`
/// for smooth integrands.
pub(crate) fn age_quadrature_with(
    f: &SwarmerField,
    lower_index: usize,
    level_factor: impl Fn(f64) -> f64,
    map: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let age = f.age();
    let n = f.space().cells();
    assert!(lower_index < age.na, "lower_index out of range");

    // Composite trapezoid: da/2 at the first node, da at interior nodes
    // (including the last stored one), da/2 at the virtual top node.
    let mut out = vec![0.0; n];
    let da = age.da;
    for k in lower_index..age.na {
        let w_level = if k == lower_index { 0.5 * da } else { da };
        let factor = level_factor(age.level_age(k));
        let level = f.level(k);
        for (o, &v) in out.iter_mut().zip(level) {
            *o += w_level * factor * map(v);
        }
    }
    // Virtual node at a_max_num, carrying the last level's values.
    let factor_top = level_factor(age.a_max_num);
    let last = f.level(age.na - 1);
    for (o, &v) in out.iter_mut().zip(last) {
        *o += 0.5 * da * factor_top * map(v);
    }
    out
}

/// Trapezoidal quadrature of `map(f) · exp(weight_exponent · a)` over
/// `[lower_index · da, a_max_num]` for every cell.
pub(crate) fn age_quadrature(
    f: &SwarmerField,
    weight_exponent: f64,
    lower_index: usize,
    map: impl Fn(f64) -> f64,
) -> Vec<f64> {
    age_quadrature_with(f, lower_index, |a| float::exp(weight_exponent * a), map)
}

/// Biomass-weighted age integral `∫ f · exp(weight_exponent · a) da` from
/// level `lower_index` to the numerical age horizon, per cell.
///
/// With `weight_exponent = 1/tau` and `lower_index = a_min_index` this is the
/// active swarmer biomass `P`.
pub fn weighted_age_integral(
    f: &SwarmerField,
    weight_exponent: f64,
    lower_index: usize,
) -> ScalarField {
    let values = age_quadrature(f, weight_exponent, lower_index, |v| v);
    ScalarField {
        grid: *f.space(),
        role: FieldRole::P,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SpaceGrid {
        SpaceGrid::new(3, 3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_integrand_gives_zero_field() {
        let age = AgeGrid::new(16, 1.0 / 16.0, 0.0).unwrap();
        let f = SwarmerField::zeros(small_grid(), age);
        let p = weighted_age_integral(&f, 1.0, 0);
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_density_matches_closed_form_exponential() {
        // f ≡ 1, tau = 1, a in [0, 1]: ∫₀¹ e^a da = e - 1, within O(da²).
        let expected = core::f64::consts::E - 1.0;
        for na in [32usize, 64] {
            let da = 1.0 / na as f64;
            let age = AgeGrid::new(na, da, 0.0).unwrap();
            let f = SwarmerField::from_fn(small_grid(), age, |_, _, _| 1.0);
            let p = weighted_age_integral(&f, 1.0, 0);
            for &v in p.values() {
                assert!(
                    (v - expected).abs() <= 3.0 * da * da,
                    "na = {na}: got {v}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn decaying_density_cancels_weight() {
        // f(a) = e^{-a}: integrand ≡ 1, so the quadrature returns the exact
        // interval length a_max_num - a_lower up to the top-node substitution.
        let na = 40;
        let da = 0.025;
        let age = AgeGrid::new(na, da, 0.0).unwrap();
        let f = SwarmerField::from_fn(small_grid(), age, |a, _, _| float::exp(-a));
        for lower in [0usize, 7] {
            let p = weighted_age_integral(&f, 1.0, lower);
            let expected = age.a_max_num - lower as f64 * da;
            for &v in p.values() {
                assert!(
                    (v - expected).abs() <= 3.0 * da * da,
                    "lower = {lower}: got {v}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn integral_is_linear() {
        let age = AgeGrid::new(12, 0.05, 0.1).unwrap();
        let g = small_grid();
        let f1 = SwarmerField::from_fn(g, age, |a, x, y| a + x * y);
        let f2 = SwarmerField::from_fn(g, age, |a, x, _| (a * 3.1 - x).abs());
        let (alpha, beta) = (0.7, -1.3);
        let combo = SwarmerField::from_values(
            g,
            age,
            f1.values()
                .iter()
                .zip(f2.values())
                .map(|(&u, &v)| alpha * u + beta * v)
                .collect(),
        )
        .unwrap();
        let lhs = weighted_age_integral(&combo, 2.0, age.a_min_index);
        let i1 = weighted_age_integral(&f1, 2.0, age.a_min_index);
        let i2 = weighted_age_integral(&f2, 2.0, age.a_min_index);
        for ((&l, &a), &b) in lhs.values().iter().zip(i1.values()).zip(i2.values()) {
            let rhs = alpha * a + beta * b;
            let scale = l.abs().max(rhs.abs()).max(1e-300);
            assert!((l - rhs).abs() / scale <= 1e-12);
        }
    }

    #[test]
    fn single_level_quadrature_is_one_panel() {
        let age = AgeGrid::new(1, 0.5, 0.0).unwrap();
        let f = SwarmerField::from_fn(small_grid(), age, |_, _, _| 2.0);
        let p = weighted_age_integral(&f, 1.0, 0);
        // One panel [0, 0.5]: 0.5 · (2·e⁰ + 2·e^{0.5}) / 2
        let expected = 0.5 * (2.0 + 2.0 * float::exp(0.5)) / 2.0;
        for &v in p.values() {
            assert!((v - expected).abs() < 1e-15, "got {v}, want {expected}");
        }
    }

    #[test]
    fn shift_moves_levels_and_installs_renewal() {
        let g = small_grid();
        let age = AgeGrid::new(3, 0.1, 0.0).unwrap();
        let mut f = SwarmerField::from_fn(g, age, |a, _, _| a);
        let renewal = vec![7.0; g.cells()];
        f.shift_age_up(&renewal);
        assert!(f.level(0).iter().all(|&v| v == 7.0));
        assert!(f.level(1).iter().all(|&v| v == 0.0));
        assert!(f.level(2).iter().all(|&v| v == 0.1));
    }
}
