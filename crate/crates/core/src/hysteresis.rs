//! Memory field evolution: the regularized relay ODE and an ideal-relay
//! oracle used to cross-validate it.
//!
//! Per cell, `M` obeys
//!
//! ```text
//! dM/dt =  H_r((P - up_start)/up_gap)   · H_r(1 - M) / up_gap
//!        - H_r((down_start - P)/down_gap) · H_r(M)   / down_gap
//! ```
//!
//! so `M` charges toward 1 while `P` sits above the upper band, discharges
//! toward 0 below the lower band, and holds in between. The ideal relay it
//! regularizes jumps to 1 when `P` reaches `up_full` and to 0 when `P` falls
//! to `down_full`.

use crate::coefficients::{ramp_hr, Thresholds, Violation};
use crate::field::{FieldRole, ScalarField};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Right-hand side of the regularized relay ODE at one point.
#[inline]
pub fn memory_rhs(m: f64, p: f64, thr: &Thresholds) -> f64 {
    let up_gap = thr.up_gap();
    let down_gap = thr.down_gap();
    ramp_hr((p - thr.up_start) / up_gap) * ramp_hr(1.0 - m) / up_gap
        - ramp_hr((thr.down_start - p) / down_gap) * ramp_hr(m) / down_gap
}

/// Diagnostics of one memory step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryStepStats {
    /// Largest clamp correction applied; stays below 1e-14 whenever
    /// `dt <= min(up_gap, down_gap)`.
    pub max_clamp: f64,
}

/// Advance the memory field by one explicit trapezoidal (Heun) step, driven
/// by `p` held constant over the step, then clamp to `[0, 1]`.
pub fn memory_step(
    m: &ScalarField,
    p: &ScalarField,
    thr: &Thresholds,
    dt: f64,
) -> (ScalarField, MemoryStepStats) {
    debug_assert_eq!(m.grid(), p.grid());
    debug_assert!(dt > 0.0);
    let mut out = m.clone();
    let mut max_clamp = 0.0f64;
    for (mv, &pv) in out.values_mut().iter_mut().zip(p.values()) {
        let m0 = *mv;
        let k1 = memory_rhs(m0, pv, thr);
        let predictor = m0 + dt * k1;
        let k2 = memory_rhs(predictor, pv, thr);
        let raw = m0 + 0.5 * dt * (k1 + k2);
        let clamped = raw.clamp(0.0, 1.0);
        max_clamp = max_clamp.max((raw - clamped).abs());
        *mv = clamped;
    }
    (out, MemoryStepStats { max_clamp })
}

/// Ideal relay state per cell: 0 or 1, switching only on threshold hits.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayState {
    state: Vec<u8>,
}

impl RelayState {
    pub fn all_zero(cells: usize) -> Self {
        RelayState {
            state: vec![0; cells],
        }
    }

    pub fn from_states(state: Vec<u8>) -> Self {
        debug_assert!(state.iter().all(|&s| s <= 1));
        RelayState { state }
    }

    #[inline]
    pub fn state(&self) -> &[u8] {
        &self.state
    }

    /// Value as a float, for comparison against the regularized field.
    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        f64::from(self.state[idx])
    }
}

/// Advance the relay oracle to the next sample of `P`.
///
/// Crossing detection compares sample values only (`>=` / `<=`), with no
/// sub-step root finding, so switching times are resolution-dependent.
pub fn relay_step(relay: &RelayState, p_now: &ScalarField, thr: &Thresholds) -> RelayState {
    let state = relay
        .state
        .iter()
        .zip(p_now.values())
        .map(|(&s, &p)| {
            if p >= thr.up_full {
                1
            } else if p <= thr.down_full {
                0
            } else {
                s
            }
        })
        .collect();
    RelayState { state }
}

/// Check the initial-memory compatibility conditions: `M0` in `[0, 1]`,
/// `M0 = 0` wherever `P0 < down_full`, `M0 = 1` wherever `P0 > up_full`.
pub fn validate_m0(m0: &ScalarField, p0: &ScalarField, thr: &Thresholds) -> Vec<Violation> {
    debug_assert_eq!(m0.grid(), p0.grid());
    debug_assert_eq!(m0.role(), FieldRole::M);
    let mut out = Vec::new();
    for (idx, (&m, &p)) in m0.values().iter().zip(p0.values()).enumerate() {
        if !(0.0..=1.0).contains(&m) {
            out.push(Violation::new(
                "Hypm0",
                format!("cell {idx}: M0 = {m} out of [0, 1]"),
            ));
        } else if p < thr.down_full && m != 0.0 {
            out.push(Violation::new(
                "Hypm0",
                format!("cell {idx}: M0 = {m} but P0 = {p} below the lower threshold"),
            ));
        } else if p > thr.up_full && m != 1.0 {
            out.push(Violation::new(
                "Hypm0",
                format!("cell {idx}: M0 = {m} but P0 = {p} above the upper threshold"),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;

    fn thr() -> Thresholds {
        Thresholds::new(0.18, 0.2, 1.0, 1.05)
    }

    fn grid() -> SpaceGrid {
        SpaceGrid::new(3, 3, 1.0, 1.0).unwrap()
    }

    fn uniform(v: f64, role: FieldRole) -> ScalarField {
        ScalarField::from_fn(grid(), role, |_, _| v)
    }

    #[test]
    fn rhs_vanishes_in_dead_band() {
        let t = thr();
        for m in [0.0, 0.3, 1.0] {
            assert_eq!(memory_rhs(m, 0.5, &t), 0.0);
            assert_eq!(memory_rhs(m, 0.2, &t), 0.0);
            assert_eq!(memory_rhs(m, 1.0, &t), 0.0);
        }
    }

    #[test]
    fn rhs_saturates_above_upper_band() {
        let t = thr();
        // Both ramps saturate at 1: slope is 1 / up_gap.
        let expected = 1.0 / t.up_gap();
        assert_eq!(memory_rhs(0.0, 1.05, &t), expected);
        assert_eq!(memory_rhs(0.0, 3.0, &t), expected);
        // Fully charged: the gain factor H_r(1 - M) kills the slope.
        assert_eq!(memory_rhs(1.0, 3.0, &t), 0.0);
    }

    #[test]
    fn dead_band_leaves_memory_unchanged() {
        let t = thr();
        let m = uniform(0.42, FieldRole::M);
        let p = uniform(0.6, FieldRole::P);
        let (next, stats) = memory_step(&m, &p, &t, 0.01);
        assert_eq!(next, m);
        assert_eq!(stats.max_clamp, 0.0);
    }

    #[test]
    fn charging_matches_exponential_closed_form() {
        // Held P >= up_full turns the ODE into dM/dt = (1 - M)/up_gap, so
        // M(t) = 1 - exp(-t/up_gap); Heun converges at second order.
        let t = Thresholds::new(1.0, 2.0, 3.0, 4.0); // unit gaps
        let p = uniform(4.5, FieldRole::P);
        let mut errs = Vec::new();
        for &dt in &[1e-2, 5e-3] {
            let mut m = uniform(0.0, FieldRole::M);
            let steps = (2.0 / dt) as usize;
            let mut worst = 0.0f64;
            for n in 1..=steps {
                let (next, stats) = memory_step(&m, &p, &t, dt);
                m = next;
                assert!(stats.max_clamp <= 1e-14);
                let exact = 1.0 - (-(n as f64) * dt).exp();
                worst = worst.max((m.values()[0] - exact).abs());
            }
            errs.push(worst);
        }
        // Second order: halving dt shrinks the error by about 4.
        assert!(errs[1] <= errs[0] / 3.0, "errs = {errs:?}");
        assert!(errs[0] < 1e-4);
    }

    #[test]
    fn discharging_matches_exponential_closed_form() {
        let t = Thresholds::new(1.0, 2.0, 3.0, 4.0);
        let p = uniform(0.5, FieldRole::P); // below down_full
        let dt = 1e-3;
        let mut m = uniform(1.0, FieldRole::M);
        let steps = 3000;
        let mut worst = 0.0f64;
        for n in 1..=steps {
            let (next, stats) = memory_step(&m, &p, &t, dt);
            m = next;
            assert!(stats.max_clamp <= 1e-14);
            let exact = (-(n as f64) * dt).exp();
            worst = worst.max((m.values()[0] - exact).abs());
        }
        assert!(worst <= 1e-6, "worst = {worst}");
    }

    #[test]
    fn monotone_response_under_held_drives() {
        let t = thr();
        let high = uniform(2.0, FieldRole::P);
        let low = uniform(0.0, FieldRole::P);
        let dt = 0.01;
        let mut up = uniform(0.25, FieldRole::M);
        let mut down = uniform(0.75, FieldRole::M);
        for _ in 0..400 {
            let (next, _) = memory_step(&up, &high, &t, dt);
            assert!(next
                .values()
                .iter()
                .zip(up.values())
                .all(|(&a, &b)| a >= b));
            up = next;
            let (next, _) = memory_step(&down, &low, &t, dt);
            assert!(next
                .values()
                .iter()
                .zip(down.values())
                .all(|(&a, &b)| a <= b));
            down = next;
        }
        assert!(up.values()[0] > 0.999);
        assert!(down.values()[0] < 0.001);
    }

    #[test]
    fn relay_switches_on_threshold_crossings() {
        let t = thr();
        let relay = RelayState::all_zero(grid().cells());
        // Rising through up_full switches on.
        let relay = relay_step(&relay, &uniform(1.06, FieldRole::P), &t);
        assert!(relay.state().iter().all(|&s| s == 1));
        // Dead band holds the state.
        let relay = relay_step(&relay, &uniform(0.5, FieldRole::P), &t);
        assert!(relay.state().iter().all(|&s| s == 1));
        // Falling through down_full switches off.
        let relay = relay_step(&relay, &uniform(0.1, FieldRole::P), &t);
        assert!(relay.state().iter().all(|&s| s == 0));
        // And stays off inside the band.
        let relay = relay_step(&relay, &uniform(0.5, FieldRole::P), &t);
        assert!(relay.state().iter().all(|&s| s == 0));
    }

    #[test]
    fn m0_compatibility_checks() {
        let t = thr();
        let p_low = uniform(0.0, FieldRole::P);
        assert!(validate_m0(&uniform(0.0, FieldRole::M), &p_low, &t).is_empty());
        // Memory without biomass history is inconsistent.
        assert!(!validate_m0(&uniform(0.5, FieldRole::M), &p_low, &t).is_empty());
        // Saturated biomass requires saturated memory.
        let p_high = uniform(2.0, FieldRole::P);
        assert!(!validate_m0(&uniform(0.5, FieldRole::M), &p_high, &t).is_empty());
        assert!(validate_m0(&uniform(1.0, FieldRole::M), &p_high, &t).is_empty());
        // Out-of-range memory is always rejected.
        assert!(!validate_m0(&uniform(1.5, FieldRole::M), &p_high, &t).is_empty());
    }
}
