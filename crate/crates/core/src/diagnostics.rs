//! Weighted norms, the exponential biomass-growth monitor, and
//! convergence-order estimation.

use crate::field::{age_quadrature, ScalarField, SwarmerField};
use crate::float;
use alloc::vec::Vec;

/// Discrete norms of one state snapshot.
///
/// Swarmer norms carry the biomass weight:
/// `‖rho‖_p = (∫∫ |rho|^p e^{a/tau} dx da)^{1/p}`; swimmer norms are plain
/// space integrals. All reductions run in a fixed left-to-right order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSet {
    pub rho_l1: f64,
    pub rho_l2: f64,
    pub q_l1: f64,
    pub q_l2: f64,
    /// L² of `rho` under the doubled weight `e^{2a/tau}`.
    pub rho_l2_w2: f64,
    pub sup_rho: f64,
    pub sup_q: f64,
    /// `(∫∫ |∇rho|² e^{a/tau})^{1/2}`, only when requested.
    pub grad_rho_l2: Option<f64>,
}

fn space_sum(values: &[f64], area: f64, map: impl Fn(f64) -> f64) -> f64 {
    values.iter().map(|&v| map(v) * area).sum()
}

/// Compute the norm set of `(rho, Q)` with growth time `tau`.
pub fn compute_norms(
    rho: &SwarmerField,
    q: &ScalarField,
    tau: f64,
    with_gradient: bool,
) -> NormSet {
    let area = rho.space().cell_area();
    let w = 1.0 / tau;

    let l1_cells = age_quadrature(rho, w, 0, |v| v.abs());
    let rho_l1 = space_sum(&l1_cells, area, |v| v);
    let l2_cells = age_quadrature(rho, w, 0, |v| v * v);
    let rho_l2 = float::sqrt(space_sum(&l2_cells, area, |v| v));
    let l2w2_cells = age_quadrature(rho, 2.0 * w, 0, |v| v * v);
    let rho_l2_w2 = float::sqrt(space_sum(&l2w2_cells, area, |v| v));

    let q_l1 = space_sum(q.values(), area, |v| v.abs());
    let q_l2 = float::sqrt(space_sum(q.values(), area, |v| v * v));

    let sup_rho = rho.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let sup_q = q.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let grad_rho_l2 = with_gradient.then(|| {
        let grad_sq = gradient_squared(rho);
        let cells = age_quadrature(&grad_sq, w, 0, |v| v);
        float::sqrt(space_sum(&cells, area, |v| v))
    });

    NormSet {
        rho_l1,
        rho_l2,
        q_l1,
        q_l2,
        rho_l2_w2,
        sup_rho,
        sup_q,
        grad_rho_l2,
    }
}

/// `|∇rho|²` per level, central differences with reflected ghosts.
fn gradient_squared(rho: &SwarmerField) -> SwarmerField {
    let g = *rho.space();
    let mut out = SwarmerField::zeros(g, *rho.age());
    for k in 0..rho.age().na {
        let level = rho.level(k);
        let dst = out.level_mut(k);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.idx(i, j);
                let e = if i + 1 < g.nx { level[c + 1] } else { level[c] };
                let w = if i > 0 { level[c - 1] } else { level[c] };
                let n = if j + 1 < g.ny { level[c + g.nx] } else { level[c] };
                let s = if j > 0 { level[c - g.nx] } else { level[c] };
                let gx = (e - w) / (2.0 * g.dx);
                let gy = (n - s) / (2.0 * g.dy);
                dst[c] = gx * gx + gy * gy;
            }
        }
    }
    out
}

/// One time sample of the biomass monitor input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiomassSample {
    pub t: f64,
    pub rho_l1: f64,
    pub q_l1: f64,
}

/// Per-time residual of the exponential biomass identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub values: Vec<f64>,
    /// Set when the initial biomass is zero: residuals are then absolute
    /// rather than relative.
    pub absolute: bool,
}

/// Residual of `‖rho(t)‖₁ + ‖Q(t)‖₁ = (‖rho₀‖₁ + ‖Q₀‖₁) e^{t/tau}` against
/// the first sample of the stream.
pub fn biomass_residual_series(samples: &[BiomassSample], tau: f64) -> ResidualSeries {
    assert!(!samples.is_empty(), "empty report stream");
    let b0 = samples[0].rho_l1 + samples[0].q_l1;
    let t0 = samples[0].t;
    let absolute = b0 == 0.0;
    let values = samples
        .iter()
        .map(|s| {
            let b = s.rho_l1 + s.q_l1;
            if absolute {
                b.abs()
            } else {
                let reference = b0 * float::exp((s.t - t0) / tau);
                (b - reference).abs() / reference
            }
        })
        .collect();
    ResidualSeries { values, absolute }
}

/// Residual of one sample against a fixed initial biomass (streaming form).
pub fn biomass_residual_at(b: f64, b0: f64, t: f64, tau: f64) -> f64 {
    if b0 == 0.0 {
        b.abs()
    } else {
        let reference = b0 * float::exp(t / tau);
        (b - reference).abs() / reference
    }
}

/// Estimated convergence orders from errors at resolutions `h, h/2, h/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOrders {
    /// `log2` ratios for the pairs `(h, h/2)` and `(h/2, h/4)`.
    pub orders: [f64; 2],
    /// Cleared when the error sequence fails to decrease strictly.
    pub monotone: bool,
}

/// Order estimation by successive `log2` ratios; non-monotone or
/// non-positive inputs are flagged, never panicked on.
pub fn order_of_convergence(errors: [f64; 3]) -> ConvergenceOrders {
    let monotone = errors[0] > errors[1] && errors[1] > errors[2] && errors[2] > 0.0;
    ConvergenceOrders {
        orders: [
            float::log2(errors[0] / errors[1]),
            float::log2(errors[1] / errors[2]),
        ],
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;
    use crate::grid::{AgeGrid, SpaceGrid};

    fn unit_square(n: usize) -> SpaceGrid {
        SpaceGrid::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let g = unit_square(4);
        let age = AgeGrid::new(8, 0.125, 0.0).unwrap();
        let rho = SwarmerField::zeros(g, age);
        let q = ScalarField::zeros(g, FieldRole::Q);
        let n = compute_norms(&rho, &q, 1.0, true);
        assert_eq!(n.rho_l1, 0.0);
        assert_eq!(n.rho_l2, 0.0);
        assert_eq!(n.q_l1, 0.0);
        assert_eq!(n.sup_rho, 0.0);
        assert_eq!(n.grad_rho_l2, Some(0.0));
    }

    #[test]
    fn uniform_density_l1_matches_exponential_integral() {
        // rho ≡ 1 on the unit square with tau = 1, A = 1:
        // ‖rho‖₁ = ∫₀¹ e^a da = e - 1 within O(da²).
        let expected = core::f64::consts::E - 1.0;
        for na in [32usize, 64] {
            let g = unit_square(5);
            let da = 1.0 / na as f64;
            let age = AgeGrid::new(na, da, 0.0).unwrap();
            let rho = SwarmerField::from_fn(g, age, |_, _, _| 1.0);
            let q = ScalarField::zeros(g, FieldRole::Q);
            let n = compute_norms(&rho, &q, 1.0, false);
            assert!(
                (n.rho_l1 - expected).abs() <= 3.0 * da * da,
                "na = {na}: {} vs {expected}",
                n.rho_l1
            );
        }
    }

    #[test]
    fn l2_interpolates_between_l1_and_sup() {
        // Cauchy–Schwarz on the same weighted measure:
        // ‖rho‖₂² <= sup|rho| · ‖rho‖₁.
        let g = unit_square(6);
        let age = AgeGrid::new(10, 0.1, 0.0).unwrap();
        let rho = SwarmerField::from_fn(g, age, |a, x, y| (x - y + a * 0.5).abs() + 0.1);
        let q = ScalarField::zeros(g, FieldRole::Q);
        let n = compute_norms(&rho, &q, 0.7, false);
        assert!(n.rho_l2 * n.rho_l2 <= n.sup_rho * n.rho_l1 * (1.0 + 1e-12));
    }

    #[test]
    fn norms_scale_exactly_under_power_of_two() {
        let g = unit_square(5);
        let age = AgeGrid::new(6, 0.125, 0.25).unwrap();
        let rho = SwarmerField::from_fn(g, age, |a, x, y| a + 3.0 * x + y * y);
        let q = ScalarField::from_fn(g, FieldRole::Q, |x, y| x * y + 0.5);
        let base = compute_norms(&rho, &q, 1.0, false);
        for alpha in [2.0f64, 0.5, 4.0] {
            let rho_s = SwarmerField::from_values(
                g,
                age,
                rho.values().iter().map(|&v| alpha * v).collect(),
            )
            .unwrap();
            let q_s = ScalarField::from_values(
                g,
                FieldRole::Q,
                q.values().iter().map(|&v| alpha * v).collect(),
            )
            .unwrap();
            let scaled = compute_norms(&rho_s, &q_s, 1.0, false);
            assert_eq!(scaled.rho_l1, alpha * base.rho_l1);
            assert_eq!(scaled.rho_l2, alpha * base.rho_l2);
            assert_eq!(scaled.q_l1, alpha * base.q_l1);
            assert_eq!(scaled.q_l2, alpha * base.q_l2);
            assert_eq!(scaled.sup_rho, alpha * base.sup_rho);
        }
    }

    #[test]
    fn residual_of_exact_exponential_stream_is_zero() {
        let samples: Vec<BiomassSample> = (0..20)
            .map(|n| {
                let t = n as f64 * 0.05;
                BiomassSample {
                    t,
                    rho_l1: 0.0,
                    q_l1: 2.5 * float::exp(t / 0.8),
                }
            })
            .collect();
        let series = biomass_residual_series(&samples, 0.8);
        assert!(!series.absolute);
        assert!(series.values.iter().all(|&r| r <= 1e-14));
    }

    #[test]
    fn zero_initial_biomass_switches_to_absolute() {
        let samples = [
            BiomassSample {
                t: 0.0,
                rho_l1: 0.0,
                q_l1: 0.0,
            },
            BiomassSample {
                t: 1.0,
                rho_l1: 0.25,
                q_l1: 0.0,
            },
        ];
        let series = biomass_residual_series(&samples, 1.0);
        assert!(series.absolute);
        assert_eq!(series.values[1], 0.25);
    }

    #[test]
    fn order_estimation_geometric_sequences() {
        let second = order_of_convergence([1.0, 0.25, 0.0625]);
        assert!(second.monotone);
        assert!((second.orders[0] - 2.0).abs() < 1e-12);
        assert!((second.orders[1] - 2.0).abs() < 1e-12);

        let first = order_of_convergence([1.0, 0.5, 0.25]);
        assert!(first.monotone);
        assert!((first.orders[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_estimation_flags_non_monotone() {
        let flagged = order_of_convergence([1.0, 1.5, 0.25]);
        assert!(!flagged.monotone);
        let zero = order_of_convergence([1.0, 0.5, 0.0]);
        assert!(!zero.monotone);
    }

    #[test]
    fn permutation_within_one_level_leaves_norms_nearly_unchanged() {
        let g = unit_square(7);
        let age = AgeGrid::new(5, 0.2, 0.0).unwrap();
        let rho = SwarmerField::from_fn(g, age, |a, x, y| 1.0 + (13.0 * (x + y + a)).sin());
        let q = ScalarField::zeros(g, FieldRole::Q);
        let base = compute_norms(&rho, &q, 1.0, false);
        // Reverse every level: same multiset of values per age weight.
        let mut reversed = rho.clone();
        for k in 0..age.na {
            reversed.level_mut(k).reverse();
        }
        let permuted = compute_norms(&reversed, &q, 1.0, false);
        for (a, b) in [
            (base.rho_l1, permuted.rho_l1),
            (base.rho_l2, permuted.rho_l2),
            (base.rho_l2_w2, permuted.rho_l2_w2),
        ] {
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
        }
    }
}
