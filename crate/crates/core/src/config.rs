//! Simulation configuration, scenario presets and the TOML config format.
//!
//! Schema version 1:
//!
//! ```toml
//! schema_version = 1
//! preset = "point2d"          # optional; remaining keys override it
//! dim = 2
//! half_width = 0.5            # scalar or one entry per axis
//! layer_width = 0.1
//! dx = 0.002
//! dt = "auto"                 # or a number
//! cfl_safety = 0.9
//! t_end = 1.0
//! zeta_bar = 80.0             # or `reflection = 1e-3`; zeta_bar wins
//! snapshots = [0.2, 0.4]
//! output = "out"
//!
//! [medium]
//! kind = "constant"           # or "layered" with `b`
//! c = 1.0
//!
//! [source]
//! kind = "point"              # or "none"
//! location = [0.0, 0.0]
//! f0 = 10.0
//!
//! [initial]
//! kind = "zero"               # or "bump2d"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::damping::{reflection_from_zeta_bar, zeta_bar_from_reflection, DampingProfile};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::{stable_timestep, GridSpec, DEFAULT_SAFETY};
use crate::media::{InitialCondition, MediumModel, SourceTerm, SpeedModel};
use crate::sim::Solver;

pub const SCHEMA_VERSION: u32 = 1;

/// Upper bound on the number of time steps a configuration may request.
pub const MAX_STEPS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto { safety: f64 },
    Fixed(f64),
}

/// Damping strength: either peak values per axis or a target reflection.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingSpec {
    ZetaBar(Vec<f64>),
    Reflection(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: GridSpec,
    pub dt: TimeStep,
    pub t_end: f64,
    pub damping: DampingSpec,
    pub medium: SpeedModel,
    pub source: SourceTerm,
    pub initial: InitialCondition,
    pub snapshots: Vec<f64>,
    pub output: PathBuf,
}

impl SimulationConfig {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Time step, resolving `auto` from the CFL bound tightened by the
    /// zero-order damping term.
    pub fn resolve_dt(&self) -> Result<f64> {
        let c_max = self.medium.max_speed();
        match self.dt {
            TimeStep::Auto { safety } => {
                stable_timestep(&self.grid, c_max, self.max_pair_product()?, safety)
            }
            TimeStep::Fixed(dt) => Ok(dt),
        }
    }

    /// Peak damping per axis; a reflection target is converted with the
    /// maximum wave speed.
    pub fn zeta_bar(&self) -> Result<Vec<f64>> {
        match &self.damping {
            DampingSpec::ZetaBar(z) => Ok(z.clone()),
            DampingSpec::Reflection(r) => self
                .grid
                .axes()
                .iter()
                .map(|ax| zeta_bar_from_reflection(self.medium.max_speed(), ax.layer_width, *r))
                .collect(),
        }
    }

    /// Designed reflection per axis implied by the damping peaks.
    pub fn derived_reflection(&self) -> Result<Vec<f64>> {
        let c = self.medium.max_speed();
        Ok(self
            .zeta_bar()?
            .iter()
            .zip(self.grid.axes())
            .map(|(&z, ax)| reflection_from_zeta_bar(c, ax.layer_width, z))
            .collect())
    }

    fn max_pair_product(&self) -> Result<f64> {
        Ok(DampingProfile::sample(&self.grid, &self.zeta_bar()?)?.max_pair_product())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Error::Config(m);
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(cfg(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if let Some(t) = self
            .snapshots
            .iter()
            .find(|&&t| !(0.0..=self.t_end).contains(&t))
        {
            return Err(cfg(format!(
                "snapshot time {t} outside [0, t_end = {}]",
                self.t_end
            )));
        }
        let z = self.zeta_bar()?;
        if z.len() != self.dim() || z.iter().any(|v| !(*v >= 0.0)) {
            return Err(cfg(format!(
                "zeta_bar needs {} non-negative entries, got {z:?}",
                self.dim()
            )));
        }
        let limit = stable_timestep(
            &self.grid,
            self.medium.max_speed(),
            self.max_pair_product()?,
            1.0,
        )?;
        match self.dt {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) => {
                return Err(cfg(format!("dt = {dt} violates the CFL limit {limit} (which includes the zero-order damping term)")));
            }
            TimeStep::Auto { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(cfg(format!("cfl_safety must lie in (0, 1], got {safety}")));
            }
            _ => {}
        }
        let steps = self.t_end / self.resolve_dt()?;
        if steps > MAX_STEPS {
            return Err(cfg(format!(
                "t_end = {} needs {steps:.3e} time steps, more than the limit {MAX_STEPS:e}",
                self.t_end
            )));
        }
        if self.initial == InitialCondition::Bump2d && self.dim() != 2 {
            return Err(cfg("initial condition bump2d needs dim = 2".into()));
        }
        if let SourceTerm::PointGaussianDerivative { location, f0 } = &self.source {
            if location.len() != self.dim() || !self.grid.strictly_inside(location) {
                return Err(cfg(format!(
                    "source location {location:?} must lie strictly inside the domain"
                )));
            }
            if !(*f0 > 0.0) {
                return Err(cfg(format!("source f0 must be positive, got {f0}")));
            }
        }
        Ok(())
    }

    /// Builds the solver and its initial state.
    pub fn build(&self) -> Result<(Solver, FieldState)> {
        self.validate()?;
        let dt = self.resolve_dt()?;
        let medium = MediumModel::new(&self.grid, self.medium)?;
        let damping = DampingProfile::sample(&self.grid, &self.zeta_bar()?)?;
        let solver = Solver::new(self.grid.clone(), medium, damping, &self.source, dt)?;
        let init = self.initial;
        let state = solver.initial_state(|x| init.eval(x), |_| 0.0);
        Ok((solver, state))
    }

    /// Same scenario with a different spacing on every axis.
    pub fn with_dx(&self, dx: f64) -> Result<Self> {
        let a: Vec<f64> = self.grid.axes().iter().map(|ax| ax.half_width).collect();
        let l: Vec<f64> = self.grid.axes().iter().map(|ax| ax.layer_width).collect();
        let mut out = self.clone();
        out.grid = GridSpec::new(self.dim(), &a, &l, &vec![dx; self.dim()])?;
        Ok(out)
    }
}

/// The three reproduction scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Point source in 2D, `Omega = [-0.5, 0.5]^2`, `L = 0.1`.
    Point2d,
    /// Layered medium with a bump initial condition, `Omega = [-1, 1]^2`,
    /// `L = 0.2`.
    Hetero2d,
    /// Point source in 3D, `Omega = [-0.5, 0.5]^3`, `L = 0.1`.
    Point3d,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Point2d, Preset::Hetero2d, Preset::Point3d];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Point2d => "point2d",
            Preset::Hetero2d => "hetero2d",
            Preset::Point3d => "point3d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset `{name}` (expected point2d, hetero2d or point3d)"
                ))
            })
    }

    pub fn default_dx(self) -> f64 {
        match self {
            Preset::Point2d => 0.002,
            Preset::Hetero2d => 0.004,
            Preset::Point3d => 0.006,
        }
    }

    /// Full configuration; `dx` defaults to the preset's spacing.
    pub fn config(self, dx: Option<f64>) -> Result<SimulationConfig> {
        let dx = dx.unwrap_or(self.default_dx());
        let (dim, a, l) = match self {
            Preset::Point2d => (2, 0.5, 0.1),
            Preset::Hetero2d => (2, 1.0, 0.2),
            Preset::Point3d => (3, 0.5, 0.1),
        };
        let grid = GridSpec::uniform(dim, a, l, dx)?;
        let (medium, source, initial, t_end) = match self {
            Preset::Point2d | Preset::Point3d => (
                SpeedModel::Constant(1.0),
                SourceTerm::point(vec![0.0; dim], 10.0),
                InitialCondition::Zero,
                1.0,
            ),
            Preset::Hetero2d => (
                SpeedModel::Layered { b: 0.95 },
                SourceTerm::None,
                InitialCondition::Bump2d,
                2.0,
            ),
        };
        let snapshots = (0..=5).map(|k| t_end * k as f64 / 5.0).collect();
        Ok(SimulationConfig {
            grid,
            dt: TimeStep::Auto {
                safety: DEFAULT_SAFETY,
            },
            t_end,
            damping: DampingSpec::ZetaBar(vec![80.0; dim]),
            medium,
            source,
            initial,
            snapshots,
            output: PathBuf::from(format!("out-{}", self.name())),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PerAxis {
    One(f64),
    Many(Vec<f64>),
}

impl PerAxis {
    fn expand(&self, dim: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            PerAxis::One(v) => Ok(vec![*v; dim]),
            PerAxis::Many(v) if v.len() == dim => Ok(v.clone()),
            PerAxis::Many(v) => Err(Error::Config(format!(
                "`{key}` needs {dim} entries, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDt {
    Number(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawMedium {
    Constant { c: f64 },
    Layered { b: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSource {
    None,
    #[serde(alias = "point_gaussian_derivative")]
    Point {
        location: Vec<f64>,
        f0: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawInitial {
    Zero,
    Bump2d,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    preset: Option<String>,
    dim: Option<usize>,
    half_width: Option<PerAxis>,
    layer_width: Option<PerAxis>,
    dx: Option<PerAxis>,
    dt: Option<RawDt>,
    cfl_safety: Option<f64>,
    t_end: Option<f64>,
    zeta_bar: Option<PerAxis>,
    reflection: Option<f64>,
    snapshots: Option<Vec<f64>>,
    output: Option<PathBuf>,
    medium: Option<RawMedium>,
    source: Option<RawSource>,
    initial: Option<RawInitial>,
}

const REQUIRED_WITHOUT_PRESET: [&str; 5] = ["dim", "half_width", "layer_width", "dx", "t_end"];

/// Parses and validates a configuration document.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut missing: Vec<&str> = Vec::new();
    if raw.schema_version.is_none() {
        missing.push("schema_version");
    }
    if raw.preset.is_none() {
        let present = [
            raw.dim.is_some(),
            raw.half_width.is_some(),
            raw.layer_width.is_some(),
            raw.dx.is_some(),
            raw.t_end.is_some(),
        ];
        for (key, ok) in REQUIRED_WITHOUT_PRESET.iter().zip(present) {
            if !ok {
                missing.push(key);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "missing required keys: {} (or give `preset` in place of the grid keys)",
            missing.join(", ")
        )));
    }
    if raw.schema_version != Some(SCHEMA_VERSION) {
        return Err(Error::Config(format!(
            "unsupported schema_version {:?}, expected {SCHEMA_VERSION}",
            raw.schema_version.unwrap()
        )));
    }

    let base = raw.preset.as_deref().map(Preset::from_name).transpose()?;
    let dim = match (raw.dim, base) {
        (Some(d), _) => d,
        (None, Some(p)) => p.config(None)?.dim(),
        (None, None) => unreachable!("checked above"),
    };
    if !(dim == 2 || dim == 3) {
        return Err(Error::Config(format!("dim must be 2 or 3, got {dim}")));
    }
    let mut cfg = match base {
        Some(p) => {
            let dx = raw.dx.as_ref().map(|d| d.expand(dim, "dx")).transpose()?;
            let c = p.config(dx.as_ref().map(|d| d[0]))?;
            if c.dim() != dim {
                return Err(Error::Config(format!(
                    "preset `{}` is {}D but dim = {dim}",
                    p.name(),
                    c.dim()
                )));
            }
            c
        }
        None => SimulationConfig {
            grid: GridSpec::uniform(dim, 1.0, 1.0, 1.0)?,
            dt: TimeStep::Auto {
                safety: DEFAULT_SAFETY,
            },
            t_end: 0.0,
            damping: DampingSpec::ZetaBar(vec![80.0; dim]),
            medium: SpeedModel::Constant(1.0),
            source: SourceTerm::None,
            initial: InitialCondition::Zero,
            snapshots: Vec::new(),
            output: PathBuf::from("out"),
        },
    };

    let current =
        |f: fn(&crate::grid::Axis) -> f64| -> Vec<f64> { cfg.grid.axes().iter().map(f).collect() };
    let a = match &raw.half_width {
        Some(v) => v.expand(dim, "half_width")?,
        None => current(|ax| ax.half_width),
    };
    let l = match &raw.layer_width {
        Some(v) => v.expand(dim, "layer_width")?,
        None => current(|ax| ax.layer_width),
    };
    let h = match &raw.dx {
        Some(v) => v.expand(dim, "dx")?,
        None => current(|ax| ax.spacing),
    };
    cfg.grid = GridSpec::new(dim, &a, &l, &h).map_err(|e| Error::Config(e.to_string()))?;

    let safety = raw.cfl_safety.unwrap_or(DEFAULT_SAFETY);
    cfg.dt = match raw.dt {
        None => TimeStep::Auto { safety },
        Some(RawDt::Word(w)) if w == "auto" => TimeStep::Auto { safety },
        Some(RawDt::Word(w)) => {
            return Err(Error::Config(format!(
                "dt must be a number or \"auto\", got \"{w}\""
            )))
        }
        Some(RawDt::Number(dt)) => TimeStep::Fixed(dt),
    };
    if let Some(t) = raw.t_end {
        cfg.t_end = t;
        if raw.snapshots.is_none() && base.is_some() {
            cfg.snapshots = (0..=5).map(|k| t * k as f64 / 5.0).collect();
        }
    }
    if let Some(s) = raw.snapshots {
        cfg.snapshots = s;
    }
    if let Some(o) = raw.output {
        cfg.output = o;
    }
    match (&raw.zeta_bar, raw.reflection) {
        (Some(z), _) => cfg.damping = DampingSpec::ZetaBar(z.expand(dim, "zeta_bar")?),
        (None, Some(r)) => cfg.damping = DampingSpec::Reflection(r),
        (None, None) => {}
    }
    if let DampingSpec::Reflection(r) = cfg.damping {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Config(format!(
                "reflection must lie in (0, 1], got {r}"
            )));
        }
    }
    if let Some(m) = raw.medium {
        cfg.medium = match m {
            RawMedium::Constant { c } => SpeedModel::Constant(c),
            RawMedium::Layered { b } => SpeedModel::Layered { b },
        };
        match cfg.medium {
            SpeedModel::Constant(c) if !(c > 0.0) => {
                return Err(Error::Config(format!("medium.c must be positive, got {c}")))
            }
            SpeedModel::Layered { b } if !(b > 0.0) => {
                return Err(Error::Config(format!("medium.b must be positive, got {b}")))
            }
            _ => {}
        }
    }
    if let Some(s) = raw.source {
        cfg.source = match s {
            RawSource::None => SourceTerm::None,
            RawSource::Point { location, f0 } => SourceTerm::point(location, f0),
        };
    }
    if let Some(i) = raw.initial {
        cfg.initial = match i {
            RawInitial::Zero => InitialCondition::Zero,
            RawInitial::Bump2d => InitialCondition::Bump2d,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}
