//! Discrete representation of the rectangular domain and the age interval.
//!
//! Space is a cell-centered `nx × ny` lattice on `[0, lx] × [0, ly]` with
//! zero-normal-derivative boundaries handled by ghost reflection. Age levels
//! sit at `a_k = k · da`, `k = 0 .. na-1`; the numerical age horizon is
//! `a_max_num = na · da` (equal to the maximum age `A` when `A` is finite,
//! a truncation horizon otherwise).

use crate::float;
use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Cell counts below the 5-point stencil minimum.
    TooFewCells(String),
    /// Non-positive physical extent or spacing.
    NonPositive(String),
    /// Activation age outside `[0, (na-1)·da]`.
    ActivationAgeOutOfRange { a_min: f64, last_level: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewCells(s) => write!(f, "too few cells: {s}"),
            GridError::NonPositive(s) => write!(f, "non-positive dimension: {s}"),
            GridError::ActivationAgeOutOfRange { a_min, last_level } => write!(
                f,
                "activation age {a_min} exceeds the last age level {last_level}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}

/// Cell-centered rectangular grid on `[0, lx] × [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
}

impl SpaceGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 3 || ny < 3 {
            return Err(GridError::TooFewCells(alloc::format!(
                "nx = {nx}, ny = {ny} (need at least 3 each)"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(GridError::NonPositive(alloc::format!(
                "lx = {lx}, ly = {ly}"
            )));
        }
        Ok(SpaceGrid {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    /// Number of cells.
    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell area `dx · dy`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Flat index of cell `(i, j)` in row-major order (`j` is the row).
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Physical coordinates of the center of cell `(i, j)`.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy)
    }
}

/// Uniform age lattice `a_k = k · da`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    /// Number of stored age levels.
    pub na: usize,
    /// Age spacing; the solver enforces `da = dt`.
    pub da: f64,
    /// Numerical age horizon `na · da`.
    pub a_max_num: f64,
    /// First level index with `a_k >= a_min`.
    pub a_min_index: usize,
}

impl AgeGrid {
    /// Build a grid of `na` levels with activation age `a_min`.
    ///
    /// `a_min_index` is the smallest `k` with `k · da >= a_min`; it must not
    /// exceed the last stored level.
    pub fn new(na: usize, da: f64, a_min: f64) -> Result<Self, GridError> {
        if na == 0 {
            return Err(GridError::TooFewCells(String::from("na = 0")));
        }
        if !(da > 0.0) {
            return Err(GridError::NonPositive(alloc::format!("da = {da}")));
        }
        if a_min < 0.0 {
            return Err(GridError::NonPositive(alloc::format!("a_min = {a_min}")));
        }
        let a_min_index = float::ceil(a_min / da) as usize;
        let last_level = (na - 1) as f64 * da;
        if a_min_index > na - 1 {
            return Err(GridError::ActivationAgeOutOfRange { a_min, last_level });
        }
        Ok(AgeGrid {
            na,
            da,
            a_max_num: na as f64 * da,
            a_min_index,
        })
    }

    /// Age of level `k`.
    #[inline]
    pub fn level_age(&self, k: usize) -> f64 {
        k as f64 * self.da
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_grid_spacings() {
        let g = SpaceGrid::new(4, 8, 1.0, 2.0).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.dy, 0.25);
        assert_eq!(g.cells(), 32);
        assert_eq!(g.idx(3, 0), 3);
        assert_eq!(g.idx(0, 1), 4);
        assert_eq!(g.center(0, 0), (0.125, 0.125));
    }

    #[test]
    fn space_grid_rejects_degenerate() {
        assert!(SpaceGrid::new(2, 8, 1.0, 1.0).is_err());
        assert!(SpaceGrid::new(4, 4, 0.0, 1.0).is_err());
        assert!(SpaceGrid::new(4, 4, 1.0, -1.0).is_err());
    }

    #[test]
    fn age_grid_levels_and_horizon() {
        let a = AgeGrid::new(32, 1.0 / 32.0, 0.0).unwrap();
        assert_eq!(a.a_max_num, 1.0);
        assert_eq!(a.level_age(31), 31.0 / 32.0);
        assert_eq!(a.a_min_index, 0);
    }

    #[test]
    fn activation_index_straddles_a_min() {
        // a_min_index · da >= a_min > (a_min_index - 1) · da
        let a = AgeGrid::new(10, 0.1, 0.25).unwrap();
        assert_eq!(a.a_min_index, 3);
        let exact = AgeGrid::new(10, 0.1, 0.2).unwrap();
        assert_eq!(exact.a_min_index, 2);
    }

    #[test]
    fn activation_age_beyond_last_level_rejected() {
        assert!(AgeGrid::new(4, 0.1, 0.35).is_err());
        assert!(AgeGrid::new(4, 0.1, 0.3).is_ok());
    }
}
