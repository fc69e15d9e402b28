//! Pipeline configuration and its flat TOML file form.
//!
//! Every key is optional; missing keys keep their defaults.
//!
//! ```toml
//! grid = 8                    # lattice side n (>= 3)
//! scheme = "s1"               # s1 | s2
//! boundary = "bilinear"       # bilinear | fd2d
//! seed = 0
//! hidden = 32                 # surrogate width L
//! train_every = 10            # service retrains on every k-th snapshot
//! rmse_target = 1e-3          # normalized
//! max_epochs = 20000
//! refined_grid = 16
//! tolerance = 1e-10           # solver max-norm threshold
//! max_iterations = 12800      # default 200 n^2
//! relaxation = 1.4            # default 2 / (1 + sin(pi / (n - 1)))
//! domain_min = [0.0, 0.0, 0.0]
//! domain_max = [5.0, 3.0, 4.0]
//! field = "temperature"       # temperature | nitrogen
//! unit = "°C"
//! compound = "NO3"            # nitrogen only
//! color_min = 15.0            # pin the color range (both or neither)
//! color_max = 30.0
//! transparency = 0.85         # constant transparency, or
//! transparency_min = 0.2      # value-weighted pair
//! transparency_max = 0.9
//! sensor_period = 60.0        # seconds; readings older than twice this are stale
//! match_tol = 0.05
//! anomaly_floor = 0.5
//! parallel = true
//! ```

use std::path::Path;

use serde::Deserialize;
use voxfield_core::ann::{TrainParams, DEFAULT_ANOMALY_FLOOR, DEFAULT_HIDDEN, REFINED_GRID};
use voxfield_core::boundary::BoundaryMethod;
use voxfield_core::field::{Domain, FieldKind, FieldName, PlacementScheme, DEFAULT_MATCH_TOL};
use voxfield_core::solver::SolverParams;
use voxfield_core::x3d::{ColorMapSpec, Transparency};
use voxfield_core::Exec;

use crate::error::{AppError, AppResult};

pub const DEFAULT_GRID: usize = 8;
pub const DEFAULT_TRAIN_EVERY: u64 = 10;
pub const DEFAULT_SENSOR_PERIOD_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub hidden: usize,
    /// Retrain on every `train_every`-th service snapshot, starting with the first.
    pub train_every: u64,
    pub train: TrainParams,
    pub refined_grid: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            train_every: DEFAULT_TRAIN_EVERY,
            train: TrainParams::default(),
            refined_grid: REFINED_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub domain: Domain,
    pub field: FieldKind,
    pub scheme: PlacementScheme,
    pub boundary_method: BoundaryMethod,
    pub grid_n: usize,
    pub surrogate: SurrogateConfig,
    pub colormap: ColorMapSpec,
    pub solver: SolverParams,
    pub seed: u64,
    pub sensor_period_s: f64,
    pub match_tol: f64,
    pub anomaly_floor: f64,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            domain: Domain::unit(),
            field: FieldKind::temperature(),
            scheme: PlacementScheme::S1Corners8,
            boundary_method: BoundaryMethod::Bilinear,
            grid_n: DEFAULT_GRID,
            surrogate: SurrogateConfig::default(),
            colormap: ColorMapSpec::default(),
            solver: SolverParams::default(),
            seed: 0,
            sensor_period_s: DEFAULT_SENSOR_PERIOD_S,
            match_tol: DEFAULT_MATCH_TOL,
            anomaly_floor: DEFAULT_ANOMALY_FLOOR,
            exec: Exec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: String| Err(AppError::Input(m));
        if self.grid_n < 3 {
            return bad(format!("grid must be >= 3, got {}", self.grid_n));
        }
        if self.surrogate.hidden == 0 {
            return bad("hidden must be >= 1".into());
        }
        if self.surrogate.train_every == 0 {
            return bad("train_every must be > 0".into());
        }
        if self.surrogate.refined_grid < 2 {
            return bad("refined_grid must be >= 2".into());
        }
        if !(self.sensor_period_s > 0.0 && self.sensor_period_s.is_finite()) {
            return bad("sensor_period must be > 0".into());
        }
        if !(self.anomaly_floor >= 0.0 && self.anomaly_floor.is_finite()) {
            return bad("anomaly_floor must be >= 0".into());
        }
        if !(self.match_tol > 0.0 && self.match_tol < 0.25) {
            return bad(format!("match_tol {} outside (0, 0.25)", self.match_tol));
        }
        self.solver.resolve(self.grid_n)?;
        Ok(())
    }

    /// Staleness cutoff in milliseconds.
    pub fn stale_after_ms(&self) -> u64 {
        (2.0 * self.sensor_period_s * 1000.0).round() as u64
    }

    pub fn from_toml_str(text: &str) -> AppResult<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| AppError::Input(format!("config: {e}")))?;
        let mut cfg = Self::default();
        file.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            AppError::Input(m) => AppError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// On-disk form; see the module docs for the keys.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: Option<usize>,
    pub scheme: Option<String>,
    pub boundary: Option<String>,
    pub seed: Option<u64>,
    pub hidden: Option<usize>,
    pub train_every: Option<u64>,
    pub rmse_target: Option<f64>,
    pub max_epochs: Option<usize>,
    pub refined_grid: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub relaxation: Option<f64>,
    pub domain_min: Option<[f64; 3]>,
    pub domain_max: Option<[f64; 3]>,
    pub field: Option<String>,
    pub unit: Option<String>,
    pub compound: Option<String>,
    pub color_min: Option<f64>,
    pub color_max: Option<f64>,
    pub transparency: Option<f64>,
    pub transparency_min: Option<f64>,
    pub transparency_max: Option<f64>,
    pub sensor_period: Option<f64>,
    pub match_tol: Option<f64>,
    pub anomaly_floor: Option<f64>,
    pub parallel: Option<bool>,
}

pub fn parse_scheme(s: &str) -> AppResult<PlacementScheme> {
    PlacementScheme::parse(s).ok_or_else(|| AppError::Input(format!("unknown scheme {s:?} (expected s1 or s2)")))
}

pub fn parse_boundary(s: &str) -> AppResult<BoundaryMethod> {
    BoundaryMethod::parse(s)
        .ok_or_else(|| AppError::Input(format!("unknown boundary method {s:?} (expected bilinear or fd2d)")))
}

impl ConfigFile {
    pub fn apply(&self, cfg: &mut PipelineConfig) -> AppResult<()> {
        if let Some(v) = self.grid {
            cfg.grid_n = v;
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = parse_scheme(s)?;
        }
        if let Some(s) = &self.boundary {
            cfg.boundary_method = parse_boundary(s)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        let sur = &mut cfg.surrogate;
        if let Some(v) = self.hidden {
            sur.hidden = v;
        }
        if let Some(v) = self.train_every {
            sur.train_every = v;
        }
        if let Some(v) = self.rmse_target {
            sur.train.rmse_target = v;
        }
        if let Some(v) = self.max_epochs {
            sur.train.max_epochs = v;
        }
        if let Some(v) = self.refined_grid {
            sur.refined_grid = v;
        }
        if let Some(v) = self.tolerance {
            cfg.solver.tolerance = v;
        }
        if self.max_iterations.is_some() {
            cfg.solver.max_iterations = self.max_iterations;
        }
        if self.relaxation.is_some() {
            cfg.solver.relaxation = self.relaxation;
        }
        if self.domain_min.is_some() || self.domain_max.is_some() {
            let min = self.domain_min.unwrap_or(cfg.domain.min_corner());
            let max = self.domain_max.unwrap_or(cfg.domain.max_corner());
            cfg.domain = Domain::new(min, max)?;
        }
        if self.field.is_some() || self.unit.is_some() || self.compound.is_some() {
            let name = match &self.field {
                Some(s) => FieldName::parse(s).ok_or_else(|| AppError::Input(format!("unknown field {s:?}")))?,
                None => cfg.field.name(),
            };
            let default = match name {
                FieldName::Temperature => FieldKind::temperature(),
                FieldName::NitrogenCompound => FieldKind::nitrogen(self.compound.as_deref().unwrap_or("N"))?,
            };
            let unit = self.unit.as_deref().unwrap_or(default.unit());
            cfg.field = FieldKind::new(name, unit, self.compound.as_deref().or(default.compound_label()))?;
        }
        let range = match (self.color_min, self.color_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => cfg.colormap.range(),
            _ => return Err(AppError::Input("color_min and color_max must be given together".into())),
        };
        let transparency = match (self.transparency, self.transparency_min, self.transparency_max) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(AppError::Input("give either transparency or transparency_min/transparency_max".into()))
            }
            (Some(t), None, None) => Transparency::Constant(t),
            (None, Some(t_min), Some(t_max)) => Transparency::ValueWeighted { t_min, t_max },
            (None, None, None) => cfg.colormap.transparency(),
            _ => return Err(AppError::Input("transparency_min and transparency_max must be given together".into())),
        };
        cfg.colormap = ColorMapSpec::new(range, transparency)?;
        if let Some(v) = self.sensor_period {
            cfg.sensor_period_s = v;
        }
        if let Some(v) = self.match_tol {
            cfg.match_tol = v;
        }
        if let Some(v) = self.anomaly_floor {
            cfg.anomaly_floor = v;
        }
        if let Some(p) = self.parallel {
            cfg.exec = if p { Exec::Parallel } else { Exec::Sequential };
        }
        cfg.surrogate.train.exec = cfg.exec;
        Ok(())
    }
}
