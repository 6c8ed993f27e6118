//! Experiment configuration: one JSON document, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use rvdecay_core::classifier::ClassifySettings;
use rvdecay_core::grid::GeometricGrid;
use rvdecay_core::integrator::{Controls, Flags, ProblemError};
use rvdecay_core::{FunctionSpec, ProblemSpec};
use serde::Deserialize;

use crate::CliError;

pub const MAX_STEPS_VAR: &str = "RVDECAY_MAX_STEPS";

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default)]
    pub g_asymptotically_decreasing: bool,
    #[serde(default)]
    pub monotone_envelope_assumed: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Relative tolerance of the quadrature behind `F`.
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = Controls::default();
        Tolerances {
            rtol: c.rtol,
            atol: c.atol,
            quadrature: ClassifySettings::default().quad_tolerance,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// First positive checkpoint of the trajectory.
    pub t0: f64,
    /// Trajectory checkpoints per decade.
    pub points_per_decade: u32,
    /// Decades spanned by the index grids at zero and at infinity.
    pub decades: u32,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            t0: 1e-2,
            points_per_decade: 32,
            decades: 6,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

fn default_horizon() -> f64 {
    Controls::default().horizon
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub f: String,
    pub g: String,
    pub xi: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub flags: FlagsConfig,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A validated configuration with parsed functions.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: RunConfig,
    pub problem: ProblemSpec,
    pub controls: Controls,
    pub settings: ClassifySettings,
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config field `{}`: {}", name, msg))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(
            name,
            format!("must be positive and finite, got {:?}", v),
        ))
    }
}

/// `RVDECAY_MAX_STEPS`, if set.
pub fn max_steps_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(MAX_STEPS_VAR) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{} must be a positive integer, got {:?}",
                    MAX_STEPS_VAR, s
                ))
            }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{}: {}", MAX_STEPS_VAR, e))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {}", e)))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(r) = o.rtol {
            self.tolerances.rtol = r;
        }
        if let Some(a) = o.atol {
            self.tolerances.atol = a;
        }
        if let Some(p) = &o.output {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = Some(f);
        }
    }

    /// Checks every field and builds the problem, integrator controls and
    /// classifier settings.
    pub fn build(self, max_steps: Option<u64>) -> Result<Experiment, CliError> {
        positive("tolerances.rtol", self.tolerances.rtol)?;
        positive("tolerances.atol", self.tolerances.atol)?;
        positive("tolerances.quadrature", self.tolerances.quadrature)?;
        positive("grids.t0", self.grids.t0)?;
        positive("horizon", self.horizon)?;
        if self.horizon <= self.grids.t0 {
            return Err(field(
                "horizon",
                format!(
                    "must exceed grids.t0 = {:?}, got {:?}",
                    self.grids.t0, self.horizon
                ),
            ));
        }
        if self.grids.points_per_decade == 0 {
            return Err(field("grids.points_per_decade", "must be at least 1"));
        }
        if !(1..=100).contains(&self.grids.decades) {
            return Err(field("grids.decades", "must lie in 1..=100"));
        }
        if !self.xi.is_finite() || self.xi == 0.0 {
            return Err(field(
                "xi",
                format!("must be finite and non-zero, got {:?}", self.xi),
            ));
        }
        for (name, v) in [("beta", self.beta), ("theta", self.theta)] {
            if let Some(v) = v {
                if v.is_nan() {
                    return Err(field(name, "must be a number"));
                }
            }
        }
        let f = FunctionSpec::state(&self.f).map_err(|e| field("f", e))?;
        let g = FunctionSpec::time(&self.g).map_err(|e| field("g", e))?;

        let mut problem = ProblemSpec::new(f, g, self.xi).with_flags(Flags {
            g_asymptotically_decreasing: self.flags.g_asymptotically_decreasing,
            monotone_envelope_assumed: self.flags.monotone_envelope_assumed,
        });
        if let Some(b) = self.beta {
            problem = problem.with_beta(b);
        }
        if let Some(t) = self.theta {
            problem = problem.with_theta(t);
        }
        problem.validate().map_err(|e| match e {
            ProblemError::WrongRole(which) => field(which, e.to_string()),
            ProblemError::BadInitialValue(_) => field("xi", e),
            _ => field("f", e),
        })?;

        let mut controls = Controls::default().with_horizon(self.horizon);
        controls.rtol = self.tolerances.rtol;
        controls.atol = self.tolerances.atol;
        controls.first_checkpoint = self.grids.t0;
        controls.checkpoints_per_decade = self.grids.points_per_decade;
        if let Some(n) = max_steps {
            controls.max_steps = n;
        }
        controls.validate().map_err(|e| field("tolerances", e))?;

        let span = 10f64.powi(self.grids.decades as i32);
        let per = GeometricGrid::ZERO_SIDE.points_per_decade;
        let settings = ClassifySettings {
            quad_tolerance: self.tolerances.quadrature,
            zero_grid: GeometricGrid::new(1e-2, 1e-2 / span, per),
            infinity_grid: GeometricGrid::new(1e2, 1e2 * span, per),
            ..ClassifySettings::default()
        };

        Ok(Experiment {
            config: self,
            problem,
            controls,
            settings,
        })
    }
}

impl Experiment {
    pub fn format(&self, fallback: Format) -> Format {
        self.config.output.format.unwrap_or(fallback)
    }
}
