//! The `sweep` subcommand: Cartesian products of dotted-key overrides.
//!
//! Sweep files use the same `section.key = value` syntax:
//!
//! ```text
//! sweep.base       = reference.cfg
//! sweep.output_dir = out/sweep
//! sweep.max_points = 64
//! axis.tau.key     = coeff.tau
//! axis.tau.values  = 0.5, 1.0, 2.0
//! axis.mode.key    = solver.mode
//! axis.mode.values = direct, picard
//! ```
//!
//! Axes run in name order; each point gets its own subdirectory and one row
//! in the manifest CSV.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::kvmap::KvMap;
use crate::run::execute;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PathBuf,
    pub output_dir: PathBuf,
    pub max_points: usize,
    /// Axis name -> (dotted key, values), name-ordered.
    pub axes: BTreeMap<String, (String, Vec<String>)>,
}

impl SweepSpec {
    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let map = KvMap::parse(text, path)?;
        let mut axes: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
        for key in map.keys() {
            if let Some(rest) = key.strip_prefix("axis.") {
                let Some((name, attr)) = rest.rsplit_once('.') else {
                    return Err(CliError::ConfigSyntax {
                        path: path.into(),
                        line: map.line_of(key).unwrap_or(0),
                        message: format!("axis key `{key}` must be `axis.<name>.key|values`"),
                    });
                };
                let entry = axes.entry(name.to_string()).or_default();
                match attr {
                    "key" => entry.0 = map.get(key).unwrap_or("").to_string(),
                    "values" => {
                        entry.1 = map
                            .get(key)
                            .unwrap_or("")
                            .split(',')
                            .map(|v| v.trim().to_string())
                            .filter(|v| !v.is_empty())
                            .collect()
                    }
                    other => {
                        return Err(CliError::ConfigSyntax {
                            path: path.into(),
                            line: map.line_of(key).unwrap_or(0),
                            message: format!("unknown axis attribute `{other}`"),
                        })
                    }
                }
            } else if !matches!(key, "sweep.base" | "sweep.output_dir" | "sweep.max_points") {
                return Err(CliError::ConfigSyntax {
                    path: path.into(),
                    line: map.line_of(key).unwrap_or(0),
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        let base = map
            .get("sweep.base")
            .ok_or_else(|| CliError::ConfigInvalid("sweep.base is required".into()))?;
        let output_dir = map
            .get("sweep.output_dir")
            .ok_or_else(|| CliError::ConfigInvalid("sweep.output_dir is required".into()))?;
        let max_points = match map.get("sweep.max_points") {
            None => 64,
            Some(v) => v.parse::<usize>().map_err(|_| {
                CliError::ConfigInvalid(format!("sweep.max_points: `{v}` is not an integer"))
            })?,
        };
        for (name, (key, values)) in &axes {
            if key.is_empty() || values.is_empty() {
                return Err(CliError::ConfigInvalid(format!(
                    "axis `{name}` needs both `key` and a nonempty `values` list"
                )));
            }
        }
        Ok(SweepSpec {
            base: PathBuf::from(base),
            output_dir: PathBuf::from(output_dir),
            max_points,
            axes,
        })
    }

    /// Number of Cartesian points.
    pub fn points(&self) -> usize {
        self.axes.values().map(|(_, v)| v.len().max(1)).product()
    }

    /// The overrides of point `index`, in axis name order.
    pub fn point(&self, index: usize) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        let mut rem = index;
        for (_, (key, values)) in self.axes.iter() {
            let n = values.len();
            out.push((key.as_str(), values[rem % n].as_str()));
            rem /= n;
        }
        out
    }
}

/// `swarmsim sweep`: run every point, collect a manifest.
pub fn cmd_sweep(spec_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| CliError::io(spec_path.display().to_string(), e))?;
    let spec = SweepSpec::parse(&text, &spec_path.display().to_string())?;
    let points = spec.points();
    if points > spec.max_points {
        return Err(CliError::ConfigInvalid(format!(
            "sweep would run {points} points, above the cap of {} (raise sweep.max_points)",
            spec.max_points
        )));
    }

    // Base config resolves relative to the sweep file.
    let base_path = if spec.base.is_absolute() {
        spec.base.clone()
    } else {
        spec_path.parent().unwrap_or(Path::new(".")).join(&spec.base)
    };
    let base_text = fs::read_to_string(&base_path)
        .map_err(|e| CliError::io(base_path.display().to_string(), e))?;
    let base_map = KvMap::parse(&base_text, &base_path.display().to_string())?;

    fs::create_dir_all(&spec.output_dir)
        .map_err(|e| CliError::io(spec.output_dir.display().to_string(), e))?;
    let manifest_path = spec.output_dir.join("manifest.csv");
    let mut manifest = fs::File::create(&manifest_path)
        .map_err(|e| CliError::io(manifest_path.display().to_string(), e))?;
    let axis_keys: Vec<&str> = spec.axes.values().map(|(k, _)| k.as_str()).collect();
    writeln!(
        manifest,
        "point,{},status,steps,max_biomass_residual,max_l2_ratio,final_rho_L1,final_Q_L1",
        axis_keys.join(",")
    )
    .map_err(|e| CliError::io(manifest_path.display().to_string(), e))?;

    let mut any_step_failure = false;
    let mut any_config_failure = false;
    for index in 0..points {
        let dir = spec.output_dir.join(format!("point_{index:03}"));
        fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
        let overrides = spec.point(index);
        let mut map = base_map.clone();
        for (key, value) in &overrides {
            map.set(key, value);
        }
        map.set("output.csv", &dir.join("run.csv").display().to_string());
        if map.contains("output.snapshot_dir") {
            map.set(
                "output.snapshot_dir",
                &dir.join("snapshots").display().to_string(),
            );
        }
        let label = format!("{}#{index}", spec_path.display());
        let status;
        let summary_fields;
        match RunConfig::from_map(&map, &label).and_then(|cfg| {
            let violations = cfg.validate_structure();
            if violations.is_empty() {
                run_point(&cfg)
            } else {
                Err(CliError::ConfigInvalid(
                    violations
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join("; "),
                ))
            }
        }) {
            Ok((summary, final_rho_l1, final_q_l1)) => {
                status = "ok";
                summary_fields = format!(
                    "{},{:e},{:e},{:e},{:e}",
                    summary.steps,
                    summary.max_biomass_residual,
                    summary.max_l2_ratio,
                    final_rho_l1,
                    final_q_l1
                );
            }
            Err(e) => {
                status = match &e {
                    CliError::Step(_) => {
                        any_step_failure = true;
                        "step_failure"
                    }
                    _ => {
                        any_config_failure = true;
                        "config_error"
                    }
                };
                eprintln!("point {index}: {e}");
                summary_fields = ",,,,".into();
            }
        }
        let values: Vec<&str> = overrides.iter().map(|&(_, v)| v).collect();
        writeln!(
            manifest,
            "{index},{},{status},{summary_fields}",
            values.join(",")
        )
        .map_err(|e| CliError::io(manifest_path.display().to_string(), e))?;
    }
    println!("sweep complete: {points} points, manifest {}", manifest_path.display());
    if any_step_failure {
        Err(CliError::Step(swarmsim_core::SolverError::InvalidSetup(
            "one or more sweep points failed during stepping".into(),
        )))
    } else if any_config_failure {
        Err(CliError::ConfigInvalid(
            "one or more sweep points had invalid configurations".into(),
        ))
    } else {
        Ok(())
    }
}

fn run_point(cfg: &RunConfig) -> Result<(swarmsim_core::RunSummary, f64, f64), CliError> {
    let summary = execute(cfg)?;
    // Pull the final norms back out of the CSV tail to avoid re-running.
    let text = fs::read_to_string(&cfg.output.csv)
        .map_err(|e| CliError::io(cfg.output.csv.clone(), e))?;
    let last = text
        .lines()
        .last()
        .ok_or_else(|| CliError::Other("empty report".into()))?;
    let cols: Vec<&str> = last.split(',').collect();
    let rho_l1: f64 = cols.get(1).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    let q_l1: f64 = cols.get(2).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    Ok((summary, rho_l1, q_l1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_points_enumerate_in_axis_name_order() {
        let spec = SweepSpec::parse(
            "sweep.base = base.cfg\nsweep.output_dir = out\n\
             axis.a.key = coeff.tau\naxis.a.values = 1, 2\n\
             axis.b.key = solver.mode\naxis.b.values = direct, picard\n",
            "s.cfg",
        )
        .unwrap();
        assert_eq!(spec.points(), 4);
        assert_eq!(spec.point(0), vec![("coeff.tau", "1"), ("solver.mode", "direct")]);
        assert_eq!(spec.point(1), vec![("coeff.tau", "2"), ("solver.mode", "direct")]);
        assert_eq!(spec.point(2), vec![("coeff.tau", "1"), ("solver.mode", "picard")]);
        assert_eq!(spec.point(3), vec![("coeff.tau", "2"), ("solver.mode", "picard")]);
    }

    #[test]
    fn missing_base_is_an_error() {
        let err = SweepSpec::parse("sweep.output_dir = out\n", "s.cfg").unwrap_err();
        assert!(err.to_string().contains("sweep.base"));
    }

    #[test]
    fn axis_without_values_is_rejected() {
        let err = SweepSpec::parse(
            "sweep.base = b\nsweep.output_dir = o\naxis.a.key = coeff.tau\n",
            "s.cfg",
        )
        .unwrap_err();
        assert!(err.to_string().contains("axis `a`"));
    }
}
