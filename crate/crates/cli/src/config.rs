//! Experiment descriptions (TOML or JSON) and their validation.

use std::fmt;
use std::path::{Path, PathBuf};

use idslab_core::ids::{self, ModelDims};
use idslab_core::{BoundaryCondition, BoxSpec, EnsembleSpec, MagneticField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Ids,
    BcGap,
    Truncation,
    Tightness,
    Weyl,
    GaussianTail,
    Landau,
    SupportSpectrum,
    MomentCheck,
    MeasureDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Ids,
        Experiment::BcGap,
        Experiment::Truncation,
        Experiment::Tightness,
        Experiment::Weyl,
        Experiment::GaussianTail,
        Experiment::Landau,
        Experiment::SupportSpectrum,
        Experiment::MomentCheck,
        Experiment::MeasureDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ids => "ids",
            Experiment::BcGap => "bc-gap",
            Experiment::Truncation => "truncation",
            Experiment::Tightness => "tightness",
            Experiment::Weyl => "weyl",
            Experiment::GaussianTail => "gaussian-tail",
            Experiment::Landau => "landau",
            Experiment::SupportSpectrum => "support-spectrum",
            Experiment::MomentCheck => "moment-check",
            Experiment::MeasureDemo => "measure-demo",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_spacing() -> f64 {
    1.0
}

fn default_bcs() -> Vec<BoundaryCondition> {
    vec![BoundaryCondition::Dirichlet]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    /// Sites per axis of the main box.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sides: Vec<usize>,
    /// Volume sequence for `bc-gap` and `tightness`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<Vec<usize>>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_bcs")]
    pub bc: Vec<BoundaryCondition>,
    /// Antisymmetric `d × d` field tensor; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<usize>,
}

impl ModelConfig {
    pub fn field(&self) -> Result<MagneticField, ConfigError> {
        match &self.field {
            None => Ok(MagneticField::zero(self.d.max(1))),
            Some(rows) => MagneticField::new(rows.clone()).map_err(|e| ConfigError::field("model.field", e)),
        }
    }

    pub fn primary_bc(&self) -> BoundaryCondition {
        self.bc.first().copied().unwrap_or(BoundaryCondition::Dirichlet)
    }

    /// The main box with the first listed boundary condition.
    pub fn main_box(&self) -> Result<BoxSpec, ConfigError> {
        match (self.sides.is_empty(), self.boxes.first()) {
            (true, Some(first)) => self.make_box("model.boxes[0]", first.clone()),
            _ => self.make_box("model.sides", self.sides.clone()),
        }
    }

    /// The volume sequence, falling back to the main box.
    pub fn box_sequence(&self) -> Result<Vec<BoxSpec>, ConfigError> {
        if self.boxes.is_empty() {
            return Ok(vec![self.main_box()?]);
        }
        self.boxes.iter().enumerate().map(|(i, s)| self.make_box(&format!("model.boxes[{i}]"), s.clone())).collect()
    }

    fn make_box(&self, name: &str, sides: Vec<usize>) -> Result<BoxSpec, ConfigError> {
        if sides.len() != self.d {
            return Err(ConfigError::new(name, format!("expected {} sides, found {}", self.d, sides.len())));
        }
        BoxSpec::new(sides, self.spacing, self.primary_bc()).map_err(|e| ConfigError::field(name, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform {
        lo: f64,
        hi: f64,
        points: usize,
    },
    /// `points` energies over `[min − 1, max + 1]` of a pilot realization.
    Pilot {
        points: usize,
    },
    List {
        energies: Vec<f64>,
    },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Pilot { points: 201 }
    }
}

fn default_realizations() -> usize {
    50
}

fn default_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Width of the Cauchy smoothing in the smoothed gap functionals.
    #[serde(default = "default_eps")]
    pub smoothing_eps: f64,
}

/// Experiment-specific knobs; unused ones are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Localized trace on a centred window of this relative size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelConfig,
    #[serde(default = "EnsembleSpec::free")]
    pub ensemble: EnsembleSpec,
    pub run: RunConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.to_string(), message: message.into() }
    }

    fn field(field: &str, err: impl fmt::Display) -> Self {
        ConfigError::new(field, err.to_string())
    }
}

impl ExperimentConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn field(&self) -> Result<MagneticField, ConfigError> {
        self.model.field()
    }

    pub fn energies(&self) -> Option<&[f64]> {
        self.params.energies.as_deref()
    }

    /// Schema and cross-field checks. Returns warnings on success.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        let m = &self.model;
        if m.d == 0 {
            return Err(ConfigError::new("model.d", "must be at least 1"));
        }
        if !(m.spacing > 0.0 && m.spacing.is_finite()) {
            return Err(ConfigError::new("model.spacing", format!("must be positive and finite, got {}", m.spacing)));
        }
        if m.bc.is_empty() {
            return Err(ConfigError::new("model.bc", "list at least one boundary condition"));
        }
        let field = self.field()?;
        if field.dim() != m.d {
            return Err(ConfigError::new("model.field", format!("tensor is {0}x{0} but d = {1}", field.dim(), m.d)));
        }
        let dims = ModelDims::for_dim(m.d);
        if let Some(theta) = m.theta {
            if theta != dims.theta {
                warnings.push(format!(
                    "model.theta = {theta} differs from the smallest integer above d/4, which is {} for d = {}",
                    dims.theta, m.d
                ));
            }
        }
        self.ensemble.validate().map_err(|e| ConfigError::field("ensemble", e))?;
        let needs_box = self.experiment != Experiment::MeasureDemo
            && self.experiment != Experiment::MomentCheck
            && self.experiment != Experiment::Weyl;
        if needs_box {
            let mut named = vec![("model.sides".to_string(), m.main_box()?)];
            if !m.boxes.is_empty() {
                named =
                    m.box_sequence()?.into_iter().enumerate().map(|(i, b)| (format!("model.boxes[{i}]"), b)).collect();
                if !m.sides.is_empty() {
                    named.push(("model.sides".to_string(), m.main_box()?));
                }
            }
            if m.bc.contains(&BoundaryCondition::Periodic) {
                for (name, bx) in &named {
                    field
                        .check_torus_flux(&bx.with_bc(BoundaryCondition::Periodic))
                        .map_err(|e| ConfigError::field(name, e))?;
                }
            }
        }
        let r = &self.run;
        if r.realizations == 0 {
            return Err(ConfigError::new("run.realizations", "must be at least 1"));
        }
        if r.workers == Some(0) {
            return Err(ConfigError::new("run.workers", "must be at least 1"));
        }
        if !(r.smoothing_eps > 0.0 && r.smoothing_eps.is_finite()) {
            return Err(ConfigError::new("run.smoothing_eps", "must be positive and finite"));
        }
        match &r.grid {
            GridSpec::Uniform { lo, hi, points } => {
                ids::uniform_grid(*lo, *hi, *points).map_err(|e| ConfigError::field("run.grid", e))?;
            }
            GridSpec::Pilot { points } if *points < 2 => {
                return Err(ConfigError::new("run.grid.points", "need at least two points"));
            }
            GridSpec::List { energies } => {
                if energies.is_empty()
                    || energies.iter().any(|e| !e.is_finite())
                    || energies.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(ConfigError::new("run.grid.energies", "must be finite and strictly ascending"));
                }
            }
            GridSpec::Pilot { .. } => {}
        }
        self.validate_experiment(&field, &mut warnings)?;
        Ok(warnings)
    }

    fn validate_experiment(&self, field: &MagneticField, warnings: &mut Vec<String>) -> Result<(), ConfigError> {
        let p = &self.params;
        let positive_list = |name: &str, v: &Option<Vec<f64>>| -> Result<(), ConfigError> {
            match v {
                Some(xs) if xs.is_empty() || xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) => {
                    Err(ConfigError::new(name, "must be a nonempty list of positive numbers"))
                }
                _ => Ok(()),
            }
        };
        let negative_energies = || -> Result<(), ConfigError> {
            match self.energies() {
                Some(es) if !es.is_empty() && es.iter().all(|&e| e < 0.0 && e.is_finite()) => Ok(()),
                Some(_) => Err(ConfigError::new("params.energies", "must be strictly negative")),
                None => Err(ConfigError::new("params.energies", "required for this experiment")),
            }
        };
        match self.experiment {
            Experiment::Ids => {
                if let Some(f) = p.window_fraction {
                    if !(f > 0.0 && f <= 1.0) {
                        return Err(ConfigError::new("params.window_fraction", "must lie in (0, 1]"));
                    }
                }
            }
            Experiment::BcGap => {
                let seq = self.model.box_sequence()?;
                if seq.windows(2).any(|w| w[0].n_sites() >= w[1].n_sites()) {
                    return Err(ConfigError::new("model.boxes", "boxes must be strictly increasing"));
                }
            }
            Experiment::Truncation => {
                if p.levels.is_none() {
                    return Err(ConfigError::new("params.levels", "required for this experiment"));
                }
                positive_list("params.levels", &p.levels)?;
            }
            Experiment::Tightness => negative_energies()?,
            Experiment::Weyl => {
                if !self.ensemble.is_free() {
                    return Err(ConfigError::new("ensemble", "the Weyl check needs V = 0"));
                }
                if !field.is_zero() {
                    return Err(ConfigError::new("model.field", "the Weyl check needs B = 0"));
                }
                positive_list("params.spacings", &p.spacings)?;
                positive_list("params.energies", &p.energies)?;
                if let Some(l) = p.side_length {
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(ConfigError::new("params.side_length", "must be positive"));
                    }
                }
                let h_list = p.spacings.clone().unwrap_or_else(|| vec![self.model.spacing]);
                for &h in &h_list {
                    for &e in p.energies.as_deref().unwrap_or(&[1.0]) {
                        if e > ids::FAITHFUL_BAND / (h * h) {
                            warnings.push(format!("E = {e} lies outside the faithful band E <= 0.2/h^2 for h = {h}"));
                        }
                    }
                }
            }
            Experiment::GaussianTail => {
                if !matches!(self.ensemble, EnsembleSpec::Gaussian { .. }) {
                    return Err(ConfigError::new("ensemble.kind", "gaussian-tail needs a Gaussian ensemble"));
                }
                negative_energies()?;
            }
            Experiment::Landau => {
                if self.model.d != 2 {
                    return Err(ConfigError::new("model.d", "the Landau check is two-dimensional"));
                }
                if self.model.primary_bc() != BoundaryCondition::Periodic {
                    return Err(ConfigError::new("model.bc", "the Landau check runs on a torus"));
                }
                if field.get(0, 1).partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                    return Err(ConfigError::new("model.field", "need B_12 > 0"));
                }
                if !self.ensemble.is_free() {
                    warnings.push("the Landau check ignores the ensemble and uses V = 0".into());
                }
            }
            Experiment::SupportSpectrum => {
                if self.run.realizations < 2 {
                    return Err(ConfigError::new("run.realizations", "support-spectrum needs at least 2"));
                }
            }
            Experiment::MomentCheck => {
                if matches!(self.ensemble, EnsembleSpec::Gaussian { .. }) {
                    return Err(ConfigError::new(
                        "ensemble.kind",
                        "the moment bound needs an alloy or Poisson ensemble",
                    ));
                }
                for (name, v) in [("params.q", p.q), ("params.r", p.r)] {
                    if let Some(x) = v {
                        if !(x >= 1.0 && x.is_finite()) {
                            return Err(ConfigError::new(name, "must be >= 1"));
                        }
                    }
                }
                if p.samples.is_some_and(|s| s < 2) {
                    return Err(ConfigError::new("params.samples", "need at least 2 samples"));
                }
            }
            Experiment::MeasureDemo => {}
        }
        Ok(())
    }
}
