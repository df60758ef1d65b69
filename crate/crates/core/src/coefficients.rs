//! Model coefficients: death rate `mu`, differentiation fraction `xi`, the
//! age cutoff `chi`, the ramp `H_r`, switching thresholds, and the diffusion
//! laws gating swarm motility.

use crate::float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// A violated model hypothesis, reported rather than panicked on.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Which hypothesis block the violation falls under.
    pub tag: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(tag: &'static str, message: String) -> Self {
        Violation { tag, message }
    }
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.tag, self.message)
    }
}

/// Age cutoff: 1 for any finite maximum age, 0 for an unbounded age span.
#[inline]
pub fn chi(max_age: f64) -> f64 {
    if max_age.is_finite() {
        1.0
    } else {
        0.0
    }
}

/// Piecewise-linear ramp: 0 below 0, identity on `[0, 1]`, 1 above 1.
#[inline]
pub fn ramp_hr(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Step function with `H(0) := 0`, which keeps the ramp-shifted diffusion
/// profile continuous at its kink.
#[inline]
pub fn heaviside(p: f64) -> f64 {
    if p > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// The four switching thresholds of the memory field,
/// `down_full < down_start < up_start < up_full`.
///
/// `M` ramps toward 1 while the active biomass `P` sits in
/// `[up_start, up_full]` and saturates above `up_full`; it ramps toward 0 in
/// `[down_full, down_start]` and below. Between `down_start` and `up_start`
/// nothing moves (dead band).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Lower outer threshold (downward switching completes).
    pub down_full: f64,
    /// Lower inner threshold (downward switching begins).
    pub down_start: f64,
    /// Upper inner threshold (upward switching begins).
    pub up_start: f64,
    /// Upper outer threshold (upward switching completes).
    pub up_full: f64,
}

impl Thresholds {
    pub fn new(down_full: f64, down_start: f64, up_start: f64, up_full: f64) -> Self {
        Thresholds {
            down_full,
            down_start,
            up_start,
            up_full,
        }
    }

    #[inline]
    pub fn up_gap(&self) -> f64 {
        self.up_full - self.up_start
    }

    #[inline]
    pub fn down_gap(&self) -> f64 {
        self.down_start - self.down_full
    }

    pub fn ordered(&self) -> bool {
        self.down_full < self.down_start
            && self.down_start < self.up_start
            && self.up_start < self.up_full
    }
}

/// Death / dedifferentiation rate `mu(a)`, uniform in time and space.
#[derive(Debug, Clone, PartialEq)]
pub enum MuModel {
    Zero,
    Constant(f64),
    /// Piecewise-linear table of `(age, value)` pairs, sorted by age;
    /// clamped to the end values outside the table span.
    AgeTable(Vec<(f64, f64)>),
}

/// Differentiation fraction `xi`, a function of the swimmer biomass only.
#[derive(Debug, Clone, PartialEq)]
pub enum XiModel {
    Constant(f64),
    /// `xi0 / (1 + Q / q_scale)`, clamped to `[0, 1]`: differentiation
    /// shuts down where the swimmer density is high.
    LogisticInQ { xi0: f64, q_scale: f64 },
}

/// Shape of the biomass factor in the swarm diffusion law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaVariant {
    /// `(p - r) H(p - r)` with `r = down_full / up_full`.
    RampShifted,
    /// `p - r`, possibly negative (the result is floored at zero).
    LinearShifted,
    /// `p²`.
    Square,
    /// Constant 1.
    One,
}

/// Swarm diffusion coefficient `D(M, Q, P)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionLaw {
    /// `d0_bar · M · gamma(P / up_full) · exp(-Q / q_sat)`.
    EsipovShapiro {
        d0_bar: f64,
        q_sat: f64,
        gamma: GammaVariant,
    },
    /// `d0_bar · P / (P + k Q)`, defined as 0 at `P = Q = 0`.
    MedvedevKaperKoppel { d0_bar: f64, k: f64 },
    ConstantZero,
}

impl DiffusionLaw {
    /// Upper bound of the law over the admissible input box, for CFL checks.
    pub fn max_value(&self) -> f64 {
        match self {
            DiffusionLaw::EsipovShapiro { d0_bar, .. } => *d0_bar,
            DiffusionLaw::MedvedevKaperKoppel { d0_bar, .. } => *d0_bar,
            DiffusionLaw::ConstantZero => 0.0,
        }
    }
}

/// All model coefficients and their hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Biomass growth time `tau`.
    pub tau: f64,
    /// Baseline diffusion, strictly positive.
    pub d: f64,
    /// Maximum swarmer age; `f64::INFINITY` selects the unbounded variant.
    pub max_age: f64,
    /// Activation age below which swarmers do not count toward `P`.
    pub a_min: f64,
    pub mu: MuModel,
    pub xi: XiModel,
    pub law: DiffusionLaw,
    pub thresholds: Thresholds,
}

impl CoefficientSet {
    /// Evaluate `mu` at age `a` (time- and space-uniform presets).
    pub fn eval_mu(&self, a: f64) -> f64 {
        match &self.mu {
            MuModel::Zero => 0.0,
            MuModel::Constant(m) => *m,
            MuModel::AgeTable(table) => {
                if table.is_empty() {
                    return 0.0;
                }
                if a <= table[0].0 {
                    return table[0].1;
                }
                for pair in table.windows(2) {
                    let (a0, v0) = pair[0];
                    let (a1, v1) = pair[1];
                    if a <= a1 {
                        let s = if a1 > a0 { (a - a0) / (a1 - a0) } else { 0.0 };
                        return v0 + s * (v1 - v0);
                    }
                }
                table[table.len() - 1].1
            }
        }
    }

    /// Limit of `mu` at the maximum age, used by the swimmer equation's
    /// virtual top node and by validation.
    pub fn mu_at_max_age(&self) -> f64 {
        match &self.mu {
            MuModel::Zero => 0.0,
            MuModel::Constant(m) => *m,
            MuModel::AgeTable(table) => table.last().map_or(0.0, |&(_, v)| v),
        }
    }

    /// Evaluate `xi` at swimmer biomass `q`, clamped to `[0, 1]`.
    pub fn eval_xi(&self, q: f64) -> f64 {
        match &self.xi {
            XiModel::Constant(x) => *x,
            XiModel::LogisticInQ { xi0, q_scale } => {
                (xi0 / (1.0 + q.max(0.0) / q_scale)).clamp(0.0, 1.0)
            }
        }
    }

    /// Evaluate the swarm diffusion coefficient at one point.
    ///
    /// `q` and `p` are clamped to `>= 0` before evaluation, the ramp argument
    /// `p / up_full` is clamped to `[0, 1]`, and the result is floored at 0,
    /// so the law stays within `[0, d0_bar]` on any input.
    pub fn eval_diffusion(&self, m: f64, q: f64, p: f64) -> f64 {
        let q = q.max(0.0);
        let p = p.max(0.0);
        match &self.law {
            DiffusionLaw::EsipovShapiro {
                d0_bar,
                q_sat,
                gamma,
            } => {
                let arg = (p / self.thresholds.up_full).clamp(0.0, 1.0);
                let shift = self.thresholds.down_full / self.thresholds.up_full;
                let g = match gamma {
                    GammaVariant::RampShifted => (arg - shift) * heaviside(arg - shift),
                    GammaVariant::LinearShifted => arg - shift,
                    GammaVariant::Square => arg * arg,
                    GammaVariant::One => 1.0,
                };
                (d0_bar * m * g * float::exp(-q / q_sat)).max(0.0)
            }
            DiffusionLaw::MedvedevKaperKoppel { d0_bar, k } => {
                if p == 0.0 {
                    // Limit along the Q axis; keeps the coefficient zero in
                    // empty regions.
                    0.0
                } else {
                    d0_bar * p / (p + k * q)
                }
            }
            DiffusionLaw::ConstantZero => 0.0,
        }
    }

    /// Check every coefficient hypothesis; an empty list means admissible.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.tau > 0.0) {
            out.push(Violation::new(
                "Model",
                format!("tau must be positive, got {}", self.tau),
            ));
        }
        if !(self.d > 0.0) {
            out.push(Violation::new(
                "HypD",
                format!("baseline diffusion d must be positive, got {}", self.d),
            ));
        }
        if !(self.max_age > 0.0) {
            out.push(Violation::new(
                "Model",
                format!("max age must be positive, got {}", self.max_age),
            ));
        }
        if !(self.a_min >= 0.0 && self.a_min < self.max_age) {
            out.push(Violation::new(
                "DefP",
                format!(
                    "activation age must satisfy 0 <= a_min < A, got a_min = {}, A = {}",
                    self.a_min, self.max_age
                ),
            ));
        }
        if !self.thresholds.ordered() {
            out.push(Violation::new(
                "Defm",
                format!(
                    "threshold order violated: need {} < {} < {} < {}",
                    self.thresholds.down_full,
                    self.thresholds.down_start,
                    self.thresholds.up_start,
                    self.thresholds.up_full
                ),
            ));
        }
        match &self.mu {
            MuModel::Zero => {}
            MuModel::Constant(m) => {
                if !(*m >= 0.0) {
                    out.push(Violation::new(
                        "Hypmu",
                        format!("mu must be nonnegative, got {m}"),
                    ));
                }
            }
            MuModel::AgeTable(table) => {
                if table.is_empty() {
                    out.push(Violation::new("Hypmu", String::from("empty mu table")));
                }
                if table.iter().any(|&(_, v)| !(v >= 0.0)) {
                    out.push(Violation::new(
                        "Hypmu",
                        String::from("mu table contains negative values"),
                    ));
                }
                if table.windows(2).any(|w| w[0].0 >= w[1].0) {
                    out.push(Violation::new(
                        "Hypmu",
                        String::from("mu table ages must be strictly increasing"),
                    ));
                }
            }
        }
        if !self.max_age.is_finite() {
            // Unbounded age span: dedifferentiation must stay bounded away
            // from zero at large ages, enforced as a positive constant rate.
            match &self.mu {
                MuModel::Constant(m) if *m > 0.0 => {}
                _ => out.push(Violation::new(
                    "Hypmu",
                    String::from(
                        "unbounded max age requires a constant positive mu (exponential \
                         dedifferentiation)",
                    ),
                )),
            }
        }
        match &self.xi {
            XiModel::Constant(x) => {
                if !(*x >= 0.0 && *x <= 1.0) {
                    out.push(Violation::new(
                        "Hypxi",
                        format!("xi out of [0, 1]: got {x}"),
                    ));
                }
            }
            XiModel::LogisticInQ { xi0, q_scale } => {
                if !(*xi0 >= 0.0 && *xi0 <= 1.0) {
                    out.push(Violation::new(
                        "Hypxi",
                        format!("xi0 out of [0, 1]: got {xi0}"),
                    ));
                }
                if !(*q_scale > 0.0) {
                    out.push(Violation::new(
                        "Hypxi",
                        format!("q_scale must be positive, got {q_scale}"),
                    ));
                }
            }
        }
        match &self.law {
            DiffusionLaw::EsipovShapiro { d0_bar, q_sat, .. } => {
                if !(*d0_bar >= 0.0) {
                    out.push(Violation::new(
                        "HypD",
                        format!("d0_bar must be nonnegative, got {d0_bar}"),
                    ));
                }
                if !(*q_sat > 0.0) {
                    out.push(Violation::new(
                        "HypD",
                        format!("q_sat must be positive, got {q_sat}"),
                    ));
                }
            }
            DiffusionLaw::MedvedevKaperKoppel { d0_bar, k } => {
                if !(*d0_bar >= 0.0) {
                    out.push(Violation::new(
                        "HypD",
                        format!("d0_bar must be nonnegative, got {d0_bar}"),
                    ));
                }
                if !(*k > 0.0) {
                    out.push(Violation::new(
                        "HypD",
                        format!("k must be positive, got {k}"),
                    ));
                }
            }
            DiffusionLaw::ConstantZero => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thresholds() -> Thresholds {
        Thresholds::new(0.18, 0.2, 1.0, 1.05)
    }

    fn base_set() -> CoefficientSet {
        CoefficientSet {
            tau: 1.0,
            d: 1e-3,
            max_age: 1.0,
            a_min: 0.125,
            mu: MuModel::Zero,
            xi: XiModel::Constant(0.5),
            law: DiffusionLaw::EsipovShapiro {
                d0_bar: 1.0,
                q_sat: 1.0,
                gamma: GammaVariant::RampShifted,
            },
            thresholds: thresholds(),
        }
    }

    #[test]
    fn chi_is_one_for_finite_ages_and_zero_at_infinity() {
        assert_eq!(chi(10.0), 1.0);
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(f64::INFINITY), 0.0);
    }

    #[test]
    fn ramp_values() {
        assert_eq!(ramp_hr(-0.3), 0.0);
        assert_eq!(ramp_hr(0.5), 0.5);
        assert_eq!(ramp_hr(7.0), 1.0);
        assert_eq!(ramp_hr(0.0), 0.0);
        assert_eq!(ramp_hr(1.0), 1.0);
    }

    #[test]
    fn ramp_is_monotone_one_lipschitz_idempotent() {
        let mut prev = ramp_hr(-2.0);
        let mut x = -2.0;
        while x <= 2.0 {
            let r = ramp_hr(x);
            assert!(r >= prev);
            assert!((r - prev).abs() <= 0.01 + 1e-12); // step 0.01
            assert_eq!(ramp_hr(r), r);
            prev = r;
            x += 0.01;
        }
    }

    #[test]
    fn heaviside_values() {
        assert_eq!(heaviside(-1.0), 0.0);
        assert_eq!(heaviside(2.0), 1.0);
        assert_eq!(heaviside(0.0), 0.0);
    }

    #[test]
    fn esipov_shapiro_vanishes_without_memory() {
        let cs = base_set();
        assert_eq!(cs.eval_diffusion(0.0, 3.0, 2.0), 0.0);
        assert_eq!(cs.eval_diffusion(0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn esipov_shapiro_gamma_one_saturates_at_d0() {
        let mut cs = base_set();
        cs.law = DiffusionLaw::EsipovShapiro {
            d0_bar: 2.5,
            q_sat: 1.0,
            gamma: GammaVariant::One,
        };
        // M = 1, Q = 0: exp(0) = 1 and gamma = 1, so D = d0_bar.
        assert_eq!(cs.eval_diffusion(1.0, 0.0, 0.4), 2.5);
        assert_eq!(cs.eval_diffusion(1.0, 0.0, 100.0), 2.5);
    }

    #[test]
    fn mkk_zero_active_biomass_gives_zero() {
        let mut cs = base_set();
        cs.law = DiffusionLaw::MedvedevKaperKoppel { d0_bar: 1.0, k: 2.0 };
        assert_eq!(cs.eval_diffusion(0.3, 5.0, 0.0), 0.0);
        assert_eq!(cs.eval_diffusion(0.3, 0.0, 0.0), 0.0);
        // P > 0, Q = 0 saturates at d0_bar.
        assert_eq!(cs.eval_diffusion(0.3, 0.0, 0.7), 1.0);
    }

    #[test]
    fn diffusion_laws_bounded_by_d0_on_sweeps() {
        let mut cs = base_set();
        let laws = [
            DiffusionLaw::EsipovShapiro {
                d0_bar: 1.7,
                q_sat: 0.5,
                gamma: GammaVariant::RampShifted,
            },
            DiffusionLaw::EsipovShapiro {
                d0_bar: 1.7,
                q_sat: 0.5,
                gamma: GammaVariant::LinearShifted,
            },
            DiffusionLaw::EsipovShapiro {
                d0_bar: 1.7,
                q_sat: 0.5,
                gamma: GammaVariant::Square,
            },
            DiffusionLaw::MedvedevKaperKoppel { d0_bar: 1.7, k: 0.3 },
        ];
        for law in laws {
            cs.law = law;
            let mut s = 0x243f6a88u64;
            for _ in 0..500 {
                // xorshift; good enough to sweep the input box.
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                let u = |seed: u64| (seed >> 11) as f64 / (1u64 << 53) as f64;
                let m = u(s);
                let q = 4.0 * u(s.wrapping_mul(0x9e3779b97f4a7c15));
                let p = 3.0 * u(s.wrapping_mul(0xbf58476d1ce4e5b9));
                let d = cs.eval_diffusion(m, q, p);
                assert!((0.0..=1.7 + 1e-15).contains(&d), "law out of range: {d}");
            }
        }
    }

    #[test]
    fn xi_models_stay_in_unit_interval() {
        let mut cs = base_set();
        cs.xi = XiModel::LogisticInQ {
            xi0: 0.9,
            q_scale: 0.5,
        };
        let mut q = 0.0;
        while q < 50.0 {
            let x = cs.eval_xi(q);
            assert!((0.0..=1.0).contains(&x));
            q += 0.37;
        }
        assert_eq!(cs.eval_xi(0.0), 0.9);
    }

    #[test]
    fn mu_zero_and_constant_presets() {
        let mut cs = base_set();
        assert_eq!(cs.eval_mu(0.3), 0.0); // fixed-age variant has no decay term
        cs.mu = MuModel::Constant(0.25);
        assert_eq!(cs.eval_mu(0.0), 0.25);
        assert_eq!(cs.eval_mu(10.0), 0.25);
    }

    #[test]
    fn mu_table_interpolates_and_clamps() {
        let mut cs = base_set();
        cs.mu = MuModel::AgeTable(alloc::vec![(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)]);
        assert_eq!(cs.eval_mu(0.5), 1.0);
        assert_eq!(cs.eval_mu(1.5), 2.0);
        assert_eq!(cs.eval_mu(5.0), 2.0);
        assert_eq!(cs.mu_at_max_age(), 2.0);
    }

    #[test]
    fn xi_zero_means_no_renewal_flux() {
        let mut cs = base_set();
        cs.xi = XiModel::Constant(0.0);
        assert_eq!(cs.eval_xi(3.0), 0.0);
    }

    #[test]
    fn validate_accepts_ordered_thresholds() {
        assert!(base_set().validate().is_empty());
    }

    #[test]
    fn validate_rejects_threshold_disorder() {
        let mut cs = base_set();
        cs.thresholds = Thresholds::new(0.18, 0.2, 1.1, 1.05);
        let v = cs.validate();
        assert!(v.iter().any(|v| v.tag == "Defm"));
    }

    #[test]
    fn validate_rejects_zero_baseline_diffusion() {
        let mut cs = base_set();
        cs.d = 0.0;
        let v = cs.validate();
        assert!(v.iter().any(|v| v.tag == "HypD" && v.message.contains("positive")));
    }

    #[test]
    fn validate_unbounded_age_needs_positive_constant_mu() {
        let mut cs = base_set();
        cs.max_age = f64::INFINITY;
        assert!(cs.validate().iter().any(|v| v.tag == "Hypmu"));
        cs.mu = MuModel::Constant(0.5);
        assert!(cs.validate().is_empty());
    }
}
