//! Initial-data construction from config profiles or snapshot files, plus
//! the initial-data compatibility checks.

use crate::config::{MProfile, QProfile, RhoProfile, RunConfig};
use crate::error::CliError;
use crate::snapshot::{self, Snapshot};
use std::path::Path;
use swarmsim_core::hysteresis::validate_m0;
use swarmsim_core::{
    ramp_hr, weighted_age_integral, AgeGrid, FieldRole, ScalarField, SpaceGrid, SwarmerField,
    Violation,
};

/// Fully built initial state.
pub struct InitialData {
    pub rho0: SwarmerField,
    pub q0: ScalarField,
    pub m0: ScalarField,
    pub p0: ScalarField,
}

pub fn build(cfg: &RunConfig, space: SpaceGrid, age: AgeGrid) -> Result<InitialData, CliError> {
    let q0 = match &cfg.initial.q0 {
        QProfile::Zero => ScalarField::zeros(space, FieldRole::Q),
        QProfile::Gaussian {
            amplitude,
            sigma,
            center_x,
            center_y,
        } => {
            let (a, s, cx, cy) = (*amplitude, *sigma, *center_x, *center_y);
            ScalarField::from_fn(space, FieldRole::Q, |x, y| {
                let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                a * (-r2 / (2.0 * s * s)).exp()
            })
        }
        QProfile::File(path) => {
            let field = read_scalar(Path::new(path), FieldRole::Q)?;
            check_space(&field, &space, path)?;
            field
        }
    };

    let rho0 = match &cfg.initial.rho0 {
        RhoProfile::Zero => SwarmerField::zeros(space, age),
        RhoProfile::Gaussian {
            amplitude,
            center_a,
            sigma_a,
            sigma,
            center_x,
            center_y,
        } => {
            let (amp, ca, sa, s, cx, cy) =
                (*amplitude, *center_a, *sigma_a, *sigma, *center_x, *center_y);
            SwarmerField::from_fn(space, age, |a, x, y| {
                let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                let da2 = (a - ca) * (a - ca);
                amp * (-da2 / (2.0 * sa * sa)).exp() * (-r2 / (2.0 * s * s)).exp()
            })
        }
        RhoProfile::File(path) => {
            let p = Path::new(path);
            match snapshot::read(p)? {
                Snapshot::Swarmer(field) => {
                    if field.space() != &space || field.age().na != age.na {
                        return Err(CliError::Snapshot {
                            path: path.clone(),
                            message: "snapshot grid does not match the configuration".into(),
                        });
                    }
                    // Rebuild on the configured age grid so a_min is honored.
                    SwarmerField::from_values(space, age, field.values().to_vec())
                        .expect("checked dimensions")
                }
                Snapshot::Scalar(_) => {
                    return Err(CliError::Snapshot {
                        path: path.clone(),
                        message: "expected a swarmer snapshot".into(),
                    })
                }
            }
        }
    };

    let p0 = weighted_age_integral(&rho0, 1.0 / cfg.tau, age.a_min_index);

    let m0 = match &cfg.initial.m0 {
        MProfile::Zero => ScalarField::zeros(space, FieldRole::M),
        MProfile::Auto => {
            // Compatible ramp: 0 below the lower outer threshold, 1 above
            // the upper outer one, linear in between.
            let thr = cfg.thresholds;
            let values = p0
                .values()
                .iter()
                .map(|&p| ramp_hr((p - thr.down_full) / (thr.up_full - thr.down_full)))
                .collect();
            ScalarField::from_values(space, FieldRole::M, values).expect("same grid")
        }
        MProfile::File(path) => {
            let field = read_scalar(Path::new(path), FieldRole::M)?;
            check_space(&field, &space, path)?;
            field
        }
    };

    Ok(InitialData { rho0, q0, m0, p0 })
}

fn read_scalar(path: &Path, expect: FieldRole) -> Result<ScalarField, CliError> {
    match snapshot::read(path)? {
        Snapshot::Scalar(field) if field.role() == expect => Ok(field),
        Snapshot::Scalar(field) => Err(CliError::Snapshot {
            path: path.display().to_string(),
            message: format!(
                "role mismatch: snapshot holds `{}`, expected `{}`",
                field.role().tag(),
                expect.tag()
            ),
        }),
        Snapshot::Swarmer(_) => Err(CliError::Snapshot {
            path: path.display().to_string(),
            message: "expected a scalar snapshot".into(),
        }),
    }
}

fn check_space(field: &ScalarField, space: &SpaceGrid, path: &str) -> Result<(), CliError> {
    if field.grid() == space {
        Ok(())
    } else {
        Err(CliError::Snapshot {
            path: path.into(),
            message: "snapshot grid does not match the configuration".into(),
        })
    }
}

/// Initial-data checks: memory compatibility is an error; the weighted-norm
/// growth ratios on `rho0` are advisory and reported as warnings.
pub fn validate_data(cfg: &RunConfig, data: &InitialData) -> (Vec<Violation>, Vec<String>) {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    errors.extend(validate_m0(&data.m0, &data.p0, &cfg.thresholds));

    if !data.rho0.all_finite() || !data.q0.all_finite() {
        errors.push(Violation::new("Hyprho0", "initial data contains non-finite values".into()));
    }
    if data.rho0.min_value() < 0.0 {
        errors.push(Violation::new("Hyprho0", "rho0 must be nonnegative".into()));
    }
    if data.q0.min_value() < 0.0 {
        errors.push(Violation::new("Hyprho0", "Q0 must be nonnegative".into()));
    }

    // Occupancy near the numerical age horizon: harmless for a finite max
    // age (the boundary term drains it), a truncation risk otherwise.
    let age = data.rho0.age();
    if !cfg.age.max_age.is_finite() && age.na >= 10 {
        let top_start = age.na - age.na / 10;
        let top_mass: f64 = (top_start..age.na)
            .map(|k| data.rho0.level(k).iter().map(|v| v.abs()).sum::<f64>())
            .sum();
        let total: f64 = data.rho0.values().iter().map(|v| v.abs()).sum();
        if total > 0.0 && top_mass > 1e-12 * total {
            warnings.push(format!(
                "Hyprho0: rho0 carries mass in the top tenth of the truncated age span \
                 (fraction {:.3e}); the unbounded-age truncation may lose biomass",
                top_mass / total
            ));
        }
    }

    // Implied constants of the weighted-norm growth conditions.
    let tau = cfg.tau;
    let mut occupied_max_age: Option<f64> = None;
    for k in (0..age.na).rev() {
        if data.rho0.level(k).iter().any(|&v| v != 0.0) {
            occupied_max_age = Some(age.level_age(k));
            break;
        }
    }
    if let Some(a_occ) = occupied_max_age {
        let b1 = (a_occ / tau).exp();
        let (g4_heavy, g4_light, g2_heavy, g2_light) = gradient_ratios(&data.rho0, tau);
        let b2 = if g4_light > 0.0 { g4_heavy / g4_light } else { 1.0 };
        let b3 = if g2_light > 0.0 { g2_heavy / g2_light } else { 1.0 };
        let b = b1.max(b2).max(b3);
        if b > 1e6 {
            warnings.push(format!(
                "Hyprho0: the weighted-norm growth conditions need a constant b ≈ {b:.3e}; \
                 initial swarmer data extends far into the biomass-weighted age range"
            ));
        }
    }

    (errors, warnings)
}

/// Global gradient integrals under the heavy and light age weights:
/// `(∫|∇rho|⁴e^{4a/tau}, ∫|∇rho|⁴e^{a/tau}, ∫|∇rho|²e^{2a/tau}, ∫|∇rho|²e^{a/tau})`.
fn gradient_ratios(rho: &SwarmerField, tau: f64) -> (f64, f64, f64, f64) {
    let g = rho.space();
    let age = rho.age();
    let area = g.cell_area();
    let (mut g4h, mut g4l, mut g2h, mut g2l) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..age.na {
        let a = age.level_age(k);
        let level = rho.level(k);
        let (w1, w2, w4) = ((a / tau).exp(), (2.0 * a / tau).exp(), (4.0 * a / tau).exp());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.idx(i, j);
                let e = if i + 1 < g.nx { level[c + 1] } else { level[c] };
                let wv = if i > 0 { level[c - 1] } else { level[c] };
                let n = if j + 1 < g.ny { level[c + g.nx] } else { level[c] };
                let s = if j > 0 { level[c - g.nx] } else { level[c] };
                let gx = (e - wv) / (2.0 * g.dx);
                let gy = (n - s) / (2.0 * g.dy);
                let grad2 = gx * gx + gy * gy;
                let grad4 = grad2 * grad2;
                g4h += grad4 * w4 * area * age.da;
                g4l += grad4 * w1 * area * age.da;
                g2h += grad2 * w2 * area * age.da;
                g2l += grad2 * w1 * area * age.da;
            }
        }
    }
    (g4h, g4l, g2h, g2l)
}
