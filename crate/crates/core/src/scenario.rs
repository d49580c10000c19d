//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[shape]`, `[motion]`
//! (plus any number of `[[motion.schedule]]` entries), `[control]`, `[sim]` and
//! `[output]`. See the README for the full grammar.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

use crate::motion::{MotionCoordinates, VelocityTensor};
use crate::presets;
use crate::sim::Integrator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    shape: RawShape,
    #[serde(default)]
    motion: RawMotion,
    #[serde(default)]
    control: RawControl,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    preset: Option<String>,
    dimension: Option<usize>,
    positions: Option<Vec<Vec<f64>>>,
    edges: Option<Vec<(usize, usize)>>,
    weights: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoordinates {
    translation: Option<Vec<f64>>,
    rotation: Option<Vec<f64>>,
    scaling: Option<f64>,
    shear: Option<Vec<f64>>,
    velocity_tensor: Option<Vec<Vec<f64>>>,
    velocity: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMotion {
    kappa: Option<f64>,
    #[serde(flatten)]
    coords: RawCoordinates,
    #[serde(default)]
    schedule: Vec<RawPhase>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    t: f64,
    #[serde(flatten)]
    coords: RawCoordinates,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGain {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    h: Option<RawGain>,
    h_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    t_end: Option<f64>,
    integrator: Option<String>,
    initial: Option<String>,
    positions: Option<Vec<Vec<f64>>>,
    perturbation: Option<f64>,
    jitter: Option<f64>,
    seed: Option<u64>,
    decimate: Option<usize>,
    distributed: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// How the controller gain is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainSetting {
    /// `h = factor · h_min` (factor 2 by default).
    Auto { factor: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Reference,
    /// `(I ⊗ A) p* + 1 ⊗ b` with `A = I + amplitude·U(-1,1)`, `b = amplitude·U(-1,1)`,
    /// plus `jitter·U(-1,1)` on every coordinate.
    Perturbed { amplitude: f64, jitter: f64 },
    Positions(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub initial: InitialCondition,
    pub seed: u64,
    pub decimate: usize,
    pub distributed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub shape_preset: Option<String>,
    pub dimension: usize,
    pub positions: Vec<Vec<f64>>,
    /// 1-based pairs.
    pub edges: Vec<(usize, usize)>,
    pub weights: Option<PathBuf>,
    pub kappa: f64,
    /// Motion coordinates by start time; the first entry starts at 0.
    pub schedule: Vec<(f64, MotionCoordinates)>,
    pub gain: GainSetting,
    pub sim: SimSettings,
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    /// Parses scenario text. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |span| text[..span.start.min(text.len())].lines().count().max(1));
            ScenarioError::Parse { line, message: e.message().to_string() }
        })?;
        Self::validate(raw, base_dir)
    }

    /// Reads a scenario file, or a bundled preset when `source` names one and
    /// no such file exists.
    pub fn load(source: &str) -> Result<Self, ScenarioError> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(text) = presets::scenario_text(source) {
                return Self::parse(text, None);
            }
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, path.parent())
    }

    fn validate(raw: RawScenario, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let resolve = |p: PathBuf| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };

        let shape = raw.shape;
        let (dimension, positions, edges) = match (&shape.preset, &shape.positions) {
            (Some(_), Some(_)) => return Err(invalid("shape", "give either `preset` or `positions`, not both")),
            (None, None) => return Err(invalid("shape", "one of `preset` or `positions` is required")),
            (Some(name), None) => {
                let (pos, edges) = presets::shape_preset(name).ok_or_else(|| {
                    invalid("shape.preset", format!("unknown preset `{name}` (known: {})", presets::SHAPE_PRESETS.join(", ")))
                })?;
                if let Some(d) = shape.dimension {
                    if d != 2 {
                        return Err(invalid("shape.dimension", format!("preset `{name}` is planar")));
                    }
                }
                (2, pos, shape.edges.clone().unwrap_or_else(|| edges.to_vec()))
            }
            (None, Some(pos)) => {
                let edges = shape.edges.clone().ok_or_else(|| invalid("edges", "inline shapes need an edge list"))?;
                let m = shape.dimension.or_else(|| pos.first().map(Vec::len)).unwrap_or(0);
                if m == 0 {
                    return Err(invalid("shape.dimension", "dimension must be positive"));
                }
                if let Some(bad) = pos.iter().position(|p| p.len() != m) {
                    return Err(invalid("shape.positions", format!("agent {} has {} coordinates, expected {m}", bad + 1, pos[bad].len())));
                }
                (m, pos.clone(), edges)
            }
        };
        if edges.is_empty() {
            return Err(invalid("edges", "edge list is empty"));
        }

        let kappa = raw.motion.kappa.unwrap_or(1.0);
        let mut schedule = vec![(0.0, coordinates(&raw.motion.coords, dimension, "motion")?)];
        for (k, phase) in raw.motion.schedule.iter().enumerate() {
            let field = format!("motion.schedule[{k}]");
            if !(phase.t > 0.0) {
                return Err(invalid(&format!("{field}.t"), "switch times must be positive"));
            }
            if phase.t <= schedule.last().map_or(0.0, |(t, _)| *t) {
                return Err(invalid(&format!("{field}.t"), "switch times must increase"));
            }
            schedule.push((phase.t, coordinates(&phase.coords, dimension, &field)?));
        }

        let factor = raw.control.h_factor.unwrap_or(2.0);
        if !(factor > 0.0) {
            return Err(invalid("control.h_factor", "must be positive"));
        }
        let gain = match raw.control.h {
            None => GainSetting::Auto { factor },
            Some(RawGain::Keyword(k)) if k == "auto" => GainSetting::Auto { factor },
            Some(RawGain::Keyword(k)) => return Err(invalid("control.h", format!("expected a number or \"auto\", got \"{k}\""))),
            Some(RawGain::Value(h)) if h > 0.0 => GainSetting::Fixed(h),
            Some(RawGain::Value(h)) => return Err(invalid("control.h", format!("must be positive, got {h}"))),
        };

        let s = raw.sim;
        let dt = s.dt.unwrap_or(1e-3);
        if !(dt > 0.0) {
            return Err(invalid("sim.dt", "must be positive"));
        }
        let t_end = s.t_end.ok_or_else(|| invalid("sim.t_end", "horizon is required"))?;
        if !(t_end > 0.0) {
            return Err(invalid("sim.t_end", "must be positive"));
        }
        let integrator = match s.integrator.as_deref().unwrap_or("rk4") {
            "rk4" => Integrator::Rk4,
            "euler" => Integrator::Euler,
            other => return Err(invalid("sim.integrator", format!("expected rk4 or euler, got {other}"))),
        };
        let initial = match s.initial.as_deref().unwrap_or("perturbed") {
            "reference" => InitialCondition::Reference,
            "perturbed" => {
                let amplitude = s.perturbation.unwrap_or(0.2);
                let jitter = s.jitter.unwrap_or(0.0);
                if amplitude < 0.0 || jitter < 0.0 {
                    return Err(invalid("sim.perturbation", "amplitudes must be non-negative"));
                }
                InitialCondition::Perturbed { amplitude, jitter }
            }
            "positions" => {
                let pos = s.positions.ok_or_else(|| invalid("sim.positions", "required when initial = \"positions\""))?;
                if pos.len() != positions.len() || pos.iter().any(|p| p.len() != dimension) {
                    return Err(invalid("sim.positions", "must give one position per agent"));
                }
                InitialCondition::Positions(pos)
            }
            other => return Err(invalid("sim.initial", format!("expected reference, perturbed or positions, got {other}"))),
        };
        let decimate = s.decimate.unwrap_or(100);
        if decimate == 0 {
            return Err(invalid("sim.decimate", "must be at least 1"));
        }

        Ok(Self {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            shape_preset: shape.preset,
            dimension,
            positions,
            edges,
            weights: shape.weights.map(resolve),
            kappa,
            schedule,
            gain,
            sim: SimSettings {
                dt,
                t_end,
                integrator,
                initial,
                seed: s.seed.unwrap_or(0),
                decimate,
                distributed: s.distributed.unwrap_or(false),
            },
            output_dir: raw.output.dir.map(resolve),
        })
    }
}

fn coordinates(raw: &RawCoordinates, m: usize, section: &str) -> Result<MotionCoordinates, ScenarioError> {
    let mut coords = MotionCoordinates::zero(m);
    let take = |name: &str, given: &Option<Vec<f64>>, expected: usize| -> Result<Option<Vec<f64>>, ScenarioError> {
        match given {
            Some(v) if v.len() != expected => {
                Err(invalid(&format!("{section}.{name}"), format!("expected {expected} entries, got {}", v.len())))
            }
            other => Ok(other.clone()),
        }
    };
    if let Some(v) = take("translation", &raw.translation, m)? {
        coords.translations = v;
    }
    if let Some(v) = take("rotation", &raw.rotation, m * (m - 1) / 2)? {
        coords.rotations = v;
    }
    if let Some(v) = take("shear", &raw.shear, m * (m - 1))? {
        coords.shears = v;
    }
    coords.scaling = raw.scaling.unwrap_or(0.0);
    if raw.velocity_tensor.is_some() || raw.velocity.is_some() {
        let g = match &raw.velocity_tensor {
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(invalid(&format!("{section}.velocity_tensor"), format!("expected a {m}x{m} matrix")));
                }
                DMatrix::from_fn(m, m, |r, c| rows[r][c])
            }
            None => DMatrix::zeros(m, m),
        };
        let v = match take("velocity", &raw.velocity, m)? {
            Some(v) => DVector::from_vec(v),
            None => DVector::zeros(m),
        };
        coords.raw = Some(VelocityTensor::new(g, v));
    }
    Ok(coords)
}
