//! Typed run configuration: schema, presets, parsing, canonical
//! serialization, validation, and assembly into solver inputs.

use crate::error::CliError;
use crate::kvmap::KvMap;
use std::fmt::Write as _;
use swarmsim_core::diffusion::DiffusionScheme;
use swarmsim_core::{
    AgeGrid, CoefficientSet, DiffusionLaw, GammaVariant, MuModel, SolverConfig, SolverMode,
    SpaceGrid, Thresholds, Violation, XiModel,
};

/// Historical model variants offered as preset defaults.
///
/// * `model_a` — dedifferentiation at a fixed age: `mu = 0`, finite max age;
/// * `model_b` — exponential dedifferentiation: unbounded age span,
///   `mu = 1 / abar`;
/// * `general` — both mechanisms active, every knob explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    General,
    ModelA,
    ModelB,
}

impl Preset {
    fn as_str(&self) -> &'static str {
        match self {
            Preset::General => "general",
            Preset::ModelA => "model_a",
            Preset::ModelB => "model_b",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgeBlock {
    /// Maximum swarmer age; `f64::INFINITY` for the unbounded variant.
    pub max_age: f64,
    pub da: f64,
    pub a_min: f64,
    /// Truncation horizon, required when `max_age` is infinite.
    pub horizon: Option<f64>,
}

impl AgeBlock {
    /// Numerical age span: the maximum age itself when finite, the
    /// truncation horizon otherwise.
    pub fn span(&self) -> Option<f64> {
        if self.max_age.is_finite() {
            Some(self.max_age)
        } else {
            self.horizon
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverBlock {
    pub dt: f64,
    pub t_end: f64,
    pub mode: SolverMode,
    pub scheme_implicit: bool,
    pub cg_tol: f64,
    pub cg_max_iters: u32,
    pub picard_tol: f64,
    pub picard_max_iters: u32,
    pub threads: usize,
    pub l2_blowup_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QProfile {
    Zero,
    Gaussian {
        amplitude: f64,
        sigma: f64,
        center_x: f64,
        center_y: f64,
    },
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhoProfile {
    Zero,
    Gaussian {
        amplitude: f64,
        center_a: f64,
        sigma_a: f64,
        sigma: f64,
        center_x: f64,
        center_y: f64,
    },
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MProfile {
    /// Compatible ramp between the outer thresholds of the initial `P`.
    Auto,
    Zero,
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialBlock {
    pub q0: QProfile,
    pub rho0: RhoProfile,
    pub m0: MProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapField {
    Rho,
    Q,
    P,
    M,
}

impl SnapField {
    pub fn name(&self) -> &'static str {
        match self {
            SnapField::Rho => "rho",
            SnapField::Q => "q",
            SnapField::P => "p",
            SnapField::M => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub csv: String,
    pub snapshot_dir: Option<String>,
    /// Stride in steps between snapshot dumps; 0 disables snapshots.
    pub snapshot_every: u64,
    pub snapshot_fields: Vec<SnapField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub grid: GridBlock,
    pub age: AgeBlock,
    pub tau: f64,
    pub d: f64,
    pub mu: MuModel,
    pub xi: XiModel,
    pub law: DiffusionLaw,
    pub thresholds: Thresholds,
    pub solver: SolverBlock,
    pub initial: InitialBlock,
    pub output: OutputBlock,
}

const KNOWN_KEYS: &[&str] = &[
    "model.preset",
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "age.max_age",
    "age.da",
    "age.a_min",
    "age.horizon",
    "coeff.tau",
    "coeff.d",
    "coeff.mu",
    "coeff.mu_value",
    "coeff.mu_table",
    "coeff.abar",
    "coeff.xi",
    "coeff.xi_value",
    "coeff.xi0",
    "coeff.q_xi",
    "thresholds.down_full",
    "thresholds.down_start",
    "thresholds.up_start",
    "thresholds.up_full",
    "diffusion.law",
    "diffusion.d0_bar",
    "diffusion.q_sat",
    "diffusion.gamma",
    "diffusion.k",
    "solver.dt",
    "solver.t_end",
    "solver.mode",
    "solver.scheme",
    "solver.cg_tol",
    "solver.cg_max_iters",
    "solver.picard_tol",
    "solver.picard_max_iters",
    "solver.threads",
    "solver.l2_blowup_factor",
    "initial.q0",
    "initial.q0_amplitude",
    "initial.q0_sigma",
    "initial.q0_center_x",
    "initial.q0_center_y",
    "initial.q0_file",
    "initial.rho0",
    "initial.rho0_amplitude",
    "initial.rho0_center_a",
    "initial.rho0_sigma_a",
    "initial.rho0_sigma",
    "initial.rho0_center_x",
    "initial.rho0_center_y",
    "initial.rho0_file",
    "initial.m0",
    "initial.m0_file",
    "output.csv",
    "output.snapshot_dir",
    "output.snapshot_every",
    "output.snapshot_fields",
];

struct Reader<'a> {
    map: &'a KvMap,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn err(&self, key: &str, message: String) -> CliError {
        CliError::ConfigSyntax {
            path: self.path.into(),
            line: self.map.line_of(key).unwrap_or(0),
            message,
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| self.err(key, format!("`{v}` is not a number for `{key}`"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| self.err(key, format!("`{v}` is not an integer for `{key}`"))),
        }
    }

    fn u32(&self, key: &str, default: u32) -> Result<u32, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u32>()
                .map_err(|_| self.err(key, format!("`{v}` is not an integer for `{key}`"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| self.err(key, format!("`{v}` is not an integer for `{key}`"))),
        }
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.map.get(key).unwrap_or(default).to_string()
    }

    fn choice(&self, key: &str, default: &str, allowed: &[&str]) -> Result<String, CliError> {
        let v = self.string(key, default);
        if allowed.contains(&v.as_str()) {
            Ok(v)
        } else {
            Err(self.err(
                key,
                format!("`{v}` is not one of {allowed:?} for `{key}`"),
            ))
        }
    }
}

impl RunConfig {
    /// Parse configuration text; `path` is used for diagnostics only.
    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let map = KvMap::parse(text, path)?;
        Self::from_map(&map, path)
    }

    /// Parse a pre-assembled key map (sweeps inject overrides this way).
    pub fn from_map(map: &KvMap, path: &str) -> Result<Self, CliError> {
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::ConfigSyntax {
                    path: path.into(),
                    line: map.line_of(key).unwrap_or(0),
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        let r = Reader { map, path };

        let preset = match r
            .choice("model.preset", "general", &["general", "model_a", "model_b"])?
            .as_str()
        {
            "model_a" => Preset::ModelA,
            "model_b" => Preset::ModelB,
            _ => Preset::General,
        };

        let grid = GridBlock {
            nx: r.usize("grid.nx", 32)?,
            ny: r.usize("grid.ny", 32)?,
            lx: r.f64("grid.lx", 1.0)?,
            ly: r.f64("grid.ly", 1.0)?,
        };

        let default_max_age = match preset {
            Preset::ModelB => f64::INFINITY,
            _ => 1.0,
        };
        let max_age = match map.get("age.max_age") {
            None => default_max_age,
            Some("inf") => f64::INFINITY,
            Some(v) => v.parse::<f64>().map_err(|_| {
                r.err(
                    "age.max_age",
                    format!("`{v}` is not a number or `inf` for `age.max_age`"),
                )
            })?,
        };
        let age = AgeBlock {
            max_age,
            da: r.f64("age.da", 0.03125)?,
            a_min: r.f64("age.a_min", 0.125)?,
            horizon: match map.get("age.horizon") {
                None => None,
                Some(_) => Some(r.f64("age.horizon", 0.0)?),
            },
        };

        let tau = r.f64("coeff.tau", 1.0)?;
        let d = r.f64("coeff.d", 1e-3)?;

        let default_mu = match preset {
            Preset::ModelA => "zero",
            Preset::ModelB => "constant",
            Preset::General => "zero",
        };
        let abar = r.f64("coeff.abar", 1.0)?;
        let mu = match r
            .choice("coeff.mu", default_mu, &["zero", "constant", "table"])?
            .as_str()
        {
            "zero" => MuModel::Zero,
            "constant" => {
                let default_value = match preset {
                    Preset::ModelB => 1.0 / abar,
                    _ => 0.25,
                };
                MuModel::Constant(r.f64("coeff.mu_value", default_value)?)
            }
            _ => {
                let text = r.string("coeff.mu_table", "");
                MuModel::AgeTable(parse_mu_table(&text).map_err(|m| r.err("coeff.mu_table", m))?)
            }
        };

        let xi = match r
            .choice("coeff.xi", "constant", &["constant", "logistic"])?
            .as_str()
        {
            "constant" => XiModel::Constant(r.f64("coeff.xi_value", 0.5)?),
            _ => XiModel::LogisticInQ {
                xi0: r.f64("coeff.xi0", 0.5)?,
                q_scale: r.f64("coeff.q_xi", 1.0)?,
            },
        };

        let thresholds = Thresholds::new(
            r.f64("thresholds.down_full", 0.18)?,
            r.f64("thresholds.down_start", 0.2)?,
            r.f64("thresholds.up_start", 1.0)?,
            r.f64("thresholds.up_full", 1.05)?,
        );

        let law = match r
            .choice(
                "diffusion.law",
                "esipov_shapiro",
                &["esipov_shapiro", "mkk", "constant_zero"],
            )?
            .as_str()
        {
            "esipov_shapiro" => DiffusionLaw::EsipovShapiro {
                d0_bar: r.f64("diffusion.d0_bar", 1.0)?,
                q_sat: r.f64("diffusion.q_sat", 1.0)?,
                gamma: match r
                    .choice(
                        "diffusion.gamma",
                        "ramp_shifted",
                        &["ramp_shifted", "linear_shifted", "square", "one"],
                    )?
                    .as_str()
                {
                    "ramp_shifted" => GammaVariant::RampShifted,
                    "linear_shifted" => GammaVariant::LinearShifted,
                    "square" => GammaVariant::Square,
                    _ => GammaVariant::One,
                },
            },
            "mkk" => DiffusionLaw::MedvedevKaperKoppel {
                d0_bar: r.f64("diffusion.d0_bar", 1.0)?,
                k: r.f64("diffusion.k", 1.0)?,
            },
            _ => DiffusionLaw::ConstantZero,
        };

        let solver = SolverBlock {
            dt: r.f64("solver.dt", age.da)?,
            t_end: r.f64("solver.t_end", 1.0)?,
            mode: match r.choice("solver.mode", "direct", &["direct", "picard"])?.as_str() {
                "picard" => SolverMode::Picard,
                _ => SolverMode::Direct,
            },
            scheme_implicit: match r
                .choice("solver.scheme", "implicit", &["implicit", "explicit"])?
                .as_str()
            {
                "explicit" => false,
                _ => true,
            },
            cg_tol: r.f64("solver.cg_tol", 1e-10)?,
            cg_max_iters: r.u32("solver.cg_max_iters", 500)?,
            picard_tol: r.f64("solver.picard_tol", 1e-8)?,
            picard_max_iters: r.u32("solver.picard_max_iters", 50)?,
            threads: r.usize("solver.threads", 1)?,
            l2_blowup_factor: r.f64("solver.l2_blowup_factor", 1e3)?,
        };

        let q0 = match r
            .choice("initial.q0", "gaussian", &["zero", "gaussian", "file"])?
            .as_str()
        {
            "zero" => QProfile::Zero,
            "gaussian" => QProfile::Gaussian {
                amplitude: r.f64("initial.q0_amplitude", 1.0)?,
                sigma: r.f64("initial.q0_sigma", grid.lx / 8.0)?,
                center_x: r.f64("initial.q0_center_x", grid.lx / 2.0)?,
                center_y: r.f64("initial.q0_center_y", grid.ly / 2.0)?,
            },
            _ => QProfile::File(r.string("initial.q0_file", "")),
        };
        let rho0 = match r
            .choice("initial.rho0", "zero", &["zero", "gaussian", "file"])?
            .as_str()
        {
            "zero" => RhoProfile::Zero,
            "gaussian" => RhoProfile::Gaussian {
                amplitude: r.f64("initial.rho0_amplitude", 1.0)?,
                center_a: r.f64("initial.rho0_center_a", 0.25)?,
                sigma_a: r.f64("initial.rho0_sigma_a", 0.1)?,
                sigma: r.f64("initial.rho0_sigma", grid.lx / 8.0)?,
                center_x: r.f64("initial.rho0_center_x", grid.lx / 2.0)?,
                center_y: r.f64("initial.rho0_center_y", grid.ly / 2.0)?,
            },
            _ => RhoProfile::File(r.string("initial.rho0_file", "")),
        };
        let m0 = match r
            .choice("initial.m0", "auto", &["auto", "zero", "file"])?
            .as_str()
        {
            "auto" => MProfile::Auto,
            "zero" => MProfile::Zero,
            _ => MProfile::File(r.string("initial.m0_file", "")),
        };

        let snapshot_fields = {
            let text = r.string("output.snapshot_fields", "rho,q");
            let mut fields = Vec::new();
            for part in text.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                fields.push(match part {
                    "rho" => SnapField::Rho,
                    "q" => SnapField::Q,
                    "p" => SnapField::P,
                    "m" => SnapField::M,
                    other => {
                        return Err(r.err(
                            "output.snapshot_fields",
                            format!("unknown field `{other}` (expected rho, q, p, m)"),
                        ))
                    }
                });
            }
            fields
        };
        let output = OutputBlock {
            csv: r.string("output.csv", "run.csv"),
            snapshot_dir: map.get("output.snapshot_dir").map(str::to_string),
            snapshot_every: r.u64("output.snapshot_every", 0)?,
            snapshot_fields,
        };

        Ok(RunConfig {
            preset,
            grid,
            age,
            tau,
            d,
            mu,
            xi,
            law,
            thresholds,
            solver,
            initial: InitialBlock { q0, rho0, m0 },
            output,
        })
    }

    /// Canonical serialization: every effective key, sorted by section.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model.preset = {}", self.preset.as_str());
        let _ = writeln!(s, "grid.nx = {}", self.grid.nx);
        let _ = writeln!(s, "grid.ny = {}", self.grid.ny);
        let _ = writeln!(s, "grid.lx = {}", self.grid.lx);
        let _ = writeln!(s, "grid.ly = {}", self.grid.ly);
        if self.age.max_age.is_finite() {
            let _ = writeln!(s, "age.max_age = {}", self.age.max_age);
        } else {
            let _ = writeln!(s, "age.max_age = inf");
        }
        let _ = writeln!(s, "age.da = {}", self.age.da);
        let _ = writeln!(s, "age.a_min = {}", self.age.a_min);
        if let Some(h) = self.age.horizon {
            let _ = writeln!(s, "age.horizon = {h}");
        }
        let _ = writeln!(s, "coeff.tau = {}", self.tau);
        let _ = writeln!(s, "coeff.d = {}", self.d);
        match &self.mu {
            MuModel::Zero => {
                let _ = writeln!(s, "coeff.mu = zero");
            }
            MuModel::Constant(m) => {
                let _ = writeln!(s, "coeff.mu = constant");
                let _ = writeln!(s, "coeff.mu_value = {m}");
            }
            MuModel::AgeTable(table) => {
                let _ = writeln!(s, "coeff.mu = table");
                let entries: Vec<String> =
                    table.iter().map(|(a, v)| format!("{a}:{v}")).collect();
                let _ = writeln!(s, "coeff.mu_table = {}", entries.join(", "));
            }
        }
        match &self.xi {
            XiModel::Constant(x) => {
                let _ = writeln!(s, "coeff.xi = constant");
                let _ = writeln!(s, "coeff.xi_value = {x}");
            }
            XiModel::LogisticInQ { xi0, q_scale } => {
                let _ = writeln!(s, "coeff.xi = logistic");
                let _ = writeln!(s, "coeff.xi0 = {xi0}");
                let _ = writeln!(s, "coeff.q_xi = {q_scale}");
            }
        }
        let t = &self.thresholds;
        let _ = writeln!(s, "thresholds.down_full = {}", t.down_full);
        let _ = writeln!(s, "thresholds.down_start = {}", t.down_start);
        let _ = writeln!(s, "thresholds.up_start = {}", t.up_start);
        let _ = writeln!(s, "thresholds.up_full = {}", t.up_full);
        match &self.law {
            DiffusionLaw::EsipovShapiro {
                d0_bar,
                q_sat,
                gamma,
            } => {
                let _ = writeln!(s, "diffusion.law = esipov_shapiro");
                let _ = writeln!(s, "diffusion.d0_bar = {d0_bar}");
                let _ = writeln!(s, "diffusion.q_sat = {q_sat}");
                let gname = match gamma {
                    GammaVariant::RampShifted => "ramp_shifted",
                    GammaVariant::LinearShifted => "linear_shifted",
                    GammaVariant::Square => "square",
                    GammaVariant::One => "one",
                };
                let _ = writeln!(s, "diffusion.gamma = {gname}");
            }
            DiffusionLaw::MedvedevKaperKoppel { d0_bar, k } => {
                let _ = writeln!(s, "diffusion.law = mkk");
                let _ = writeln!(s, "diffusion.d0_bar = {d0_bar}");
                let _ = writeln!(s, "diffusion.k = {k}");
            }
            DiffusionLaw::ConstantZero => {
                let _ = writeln!(s, "diffusion.law = constant_zero");
            }
        }
        let sv = &self.solver;
        let _ = writeln!(s, "solver.dt = {}", sv.dt);
        let _ = writeln!(s, "solver.t_end = {}", sv.t_end);
        let _ = writeln!(
            s,
            "solver.mode = {}",
            if sv.mode == SolverMode::Picard {
                "picard"
            } else {
                "direct"
            }
        );
        let _ = writeln!(
            s,
            "solver.scheme = {}",
            if sv.scheme_implicit { "implicit" } else { "explicit" }
        );
        let _ = writeln!(s, "solver.cg_tol = {}", sv.cg_tol);
        let _ = writeln!(s, "solver.cg_max_iters = {}", sv.cg_max_iters);
        let _ = writeln!(s, "solver.picard_tol = {}", sv.picard_tol);
        let _ = writeln!(s, "solver.picard_max_iters = {}", sv.picard_max_iters);
        let _ = writeln!(s, "solver.threads = {}", sv.threads);
        let _ = writeln!(s, "solver.l2_blowup_factor = {}", sv.l2_blowup_factor);
        match &self.initial.q0 {
            QProfile::Zero => {
                let _ = writeln!(s, "initial.q0 = zero");
            }
            QProfile::Gaussian {
                amplitude,
                sigma,
                center_x,
                center_y,
            } => {
                let _ = writeln!(s, "initial.q0 = gaussian");
                let _ = writeln!(s, "initial.q0_amplitude = {amplitude}");
                let _ = writeln!(s, "initial.q0_sigma = {sigma}");
                let _ = writeln!(s, "initial.q0_center_x = {center_x}");
                let _ = writeln!(s, "initial.q0_center_y = {center_y}");
            }
            QProfile::File(path) => {
                let _ = writeln!(s, "initial.q0 = file");
                let _ = writeln!(s, "initial.q0_file = {path}");
            }
        }
        match &self.initial.rho0 {
            RhoProfile::Zero => {
                let _ = writeln!(s, "initial.rho0 = zero");
            }
            RhoProfile::Gaussian {
                amplitude,
                center_a,
                sigma_a,
                sigma,
                center_x,
                center_y,
            } => {
                let _ = writeln!(s, "initial.rho0 = gaussian");
                let _ = writeln!(s, "initial.rho0_amplitude = {amplitude}");
                let _ = writeln!(s, "initial.rho0_center_a = {center_a}");
                let _ = writeln!(s, "initial.rho0_sigma_a = {sigma_a}");
                let _ = writeln!(s, "initial.rho0_sigma = {sigma}");
                let _ = writeln!(s, "initial.rho0_center_x = {center_x}");
                let _ = writeln!(s, "initial.rho0_center_y = {center_y}");
            }
            RhoProfile::File(path) => {
                let _ = writeln!(s, "initial.rho0 = file");
                let _ = writeln!(s, "initial.rho0_file = {path}");
            }
        }
        match &self.initial.m0 {
            MProfile::Auto => {
                let _ = writeln!(s, "initial.m0 = auto");
            }
            MProfile::Zero => {
                let _ = writeln!(s, "initial.m0 = zero");
            }
            MProfile::File(path) => {
                let _ = writeln!(s, "initial.m0 = file");
                let _ = writeln!(s, "initial.m0_file = {path}");
            }
        }
        let _ = writeln!(s, "output.csv = {}", self.output.csv);
        if let Some(dir) = &self.output.snapshot_dir {
            let _ = writeln!(s, "output.snapshot_dir = {dir}");
        }
        let _ = writeln!(s, "output.snapshot_every = {}", self.output.snapshot_every);
        let fields: Vec<&str> = self
            .output
            .snapshot_fields
            .iter()
            .map(SnapField::name)
            .collect();
        let _ = writeln!(s, "output.snapshot_fields = {}", fields.join(","));
        s
    }

    /// The coefficient set as the solver core sees it.
    pub fn coefficient_set(&self) -> CoefficientSet {
        CoefficientSet {
            tau: self.tau,
            d: self.d,
            max_age: self.age.max_age,
            a_min: self.age.a_min,
            mu: self.mu.clone(),
            xi: self.xi.clone(),
            law: self.law.clone(),
            thresholds: self.thresholds,
        }
    }

    /// Structural checks that do not require building fields.
    pub fn validate_structure(&self) -> Vec<Violation> {
        let mut out = self.coefficient_set().validate();
        if let Err(e) = SpaceGrid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly) {
            out.push(Violation::new("Grid", e.to_string()));
        }
        match self.age.span() {
            None => out.push(Violation::new(
                "Grid",
                "unbounded max age requires age.horizon".into(),
            )),
            Some(span) => {
                if !(self.age.da > 0.0) {
                    out.push(Violation::new(
                        "Grid",
                        format!("age spacing must be positive, got {}", self.age.da),
                    ));
                } else {
                    let na = (span / self.age.da).round();
                    if !(na >= 1.0) || na * self.age.da != span {
                        out.push(Violation::new(
                            "Grid",
                            format!(
                                "age spacing {} must divide the age span {} exactly",
                                self.age.da, span
                            ),
                        ));
                    } else if let Err(e) =
                        AgeGrid::new(na as usize, self.age.da, self.age.a_min)
                    {
                        out.push(Violation::new("Grid", e.to_string()));
                    }
                }
            }
        }
        if self.solver.dt.to_bits() != self.age.da.to_bits() {
            out.push(Violation::new(
                "Grid",
                format!(
                    "solver.dt = {} must equal age.da = {} exactly (characteristic alignment)",
                    self.solver.dt, self.age.da
                ),
            ));
        }
        if !(self.solver.t_end >= 0.0) {
            out.push(Violation::new(
                "Solver",
                format!("t_end must be nonnegative, got {}", self.solver.t_end),
            ));
        } else if self.solver.dt > 0.0 {
            let steps = (self.solver.t_end / self.solver.dt).round();
            if (steps * self.solver.dt - self.solver.t_end).abs()
                > 1e-9 * self.solver.t_end.max(1.0)
            {
                out.push(Violation::new(
                    "Solver",
                    format!(
                        "t_end = {} is not an integer number of steps of dt = {}",
                        self.solver.t_end, self.solver.dt
                    ),
                ));
            }
        }
        if self.solver.threads == 0 {
            out.push(Violation::new("Solver", "threads must be at least 1".into()));
        }
        if !(self.solver.picard_tol > 0.0) {
            out.push(Violation::new(
                "Solver",
                format!("picard_tol must be positive, got {}", self.solver.picard_tol),
            ));
        }
        if self.output.snapshot_every > 0 && self.output.snapshot_dir.is_none() {
            out.push(Violation::new(
                "Output",
                "snapshot_every > 0 requires output.snapshot_dir".into(),
            ));
        }
        out
    }

    /// Grids, ready for field construction. Call after structural validation.
    pub fn build_grids(&self) -> Result<(SpaceGrid, AgeGrid), CliError> {
        let space = SpaceGrid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let span = self
            .age
            .span()
            .ok_or_else(|| CliError::ConfigInvalid("missing age.horizon".into()))?;
        let na = (span / self.age.da).round() as usize;
        let age = AgeGrid::new(na, self.age.da, self.age.a_min)
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        Ok((space, age))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            mode: self.solver.mode,
            scheme: if self.solver.scheme_implicit {
                DiffusionScheme::Implicit {
                    cg_tol: self.solver.cg_tol,
                    cg_max_iters: self.solver.cg_max_iters,
                }
            } else {
                DiffusionScheme::Explicit
            },
            picard_tol: self.solver.picard_tol,
            picard_max_iters: self.solver.picard_max_iters,
            l2_blowup_factor: self.solver.l2_blowup_factor,
        }
    }
}

fn parse_mu_table(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut table = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (a, v) = part
            .split_once(':')
            .ok_or_else(|| format!("`{part}` is not an `age:value` pair"))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad age in `{part}`"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("bad value in `{part}`"))?;
        table.push((a, v));
    }
    if table.is_empty() {
        return Err("mu table is empty".into());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_model_b_preset_resolves_to_unbounded_age() {
        let cfg = RunConfig::parse(
            "model.preset = model_b\nage.horizon = 2.0\n",
            "t.cfg",
        )
        .unwrap();
        assert!(cfg.age.max_age.is_infinite());
        assert_eq!(cfg.mu, MuModel::Constant(1.0));
        assert!(cfg.validate_structure().is_empty());
    }

    #[test]
    fn model_a_preset_has_no_decay() {
        let cfg = RunConfig::parse("model.preset = model_a\n", "t.cfg").unwrap();
        assert_eq!(cfg.mu, MuModel::Zero);
        assert!(cfg.age.max_age.is_finite());
    }

    #[test]
    fn zero_baseline_diffusion_is_rejected() {
        let cfg = RunConfig::parse("coeff.d = 0\n", "t.cfg").unwrap();
        let violations = cfg.validate_structure();
        assert!(violations.iter().any(|v| v.tag == "HypD"));
    }

    #[test]
    fn age_spacing_must_divide_span() {
        let cfg = RunConfig::parse("age.max_age = 1.0\nage.da = 0.3\nsolver.dt = 0.3\n", "t.cfg")
            .unwrap();
        let violations = cfg.validate_structure();
        assert!(violations
            .iter()
            .any(|v| v.tag == "Grid" && v.message.contains("divide")));
    }

    #[test]
    fn unknown_keys_are_errors_with_line_numbers() {
        let err = RunConfig::parse("grid.nx = 8\ngrid.bogus = 1\n", "t.cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t.cfg:2"), "{msg}");
        assert!(msg.contains("unknown key"), "{msg}");
    }

    #[test]
    fn serialization_round_trips() {
        let text = "model.preset = general\ngrid.nx = 16\nage.da = 0.0625\nsolver.dt = 0.0625\n\
                    coeff.xi = logistic\ncoeff.xi0 = 0.7\ndiffusion.law = mkk\ndiffusion.k = 2.5\n\
                    initial.rho0 = gaussian\noutput.snapshot_dir = snaps\noutput.snapshot_every = 4\n";
        let cfg = RunConfig::parse(text, "t.cfg").unwrap();
        let round = RunConfig::parse(&cfg.to_text(), "round.cfg").unwrap();
        assert_eq!(cfg, round);
        let round2 = RunConfig::parse(&round.to_text(), "round2.cfg").unwrap();
        assert_eq!(round, round2);
    }

    #[test]
    fn defaults_build_valid_reference_scale_config() {
        let cfg = RunConfig::parse("", "empty.cfg").unwrap();
        assert!(cfg.validate_structure().is_empty());
        let (space, age) = cfg.build_grids().unwrap();
        assert_eq!(space.nx, 32);
        assert_eq!(age.na, 32);
        assert_eq!(age.a_min_index, 4);
    }
}
