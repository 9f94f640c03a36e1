//! Scenario files: JSON documents naming a metric, an optional surface, an
//! ordered list of checks and the sampling parameters.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::catalog::{MetricSpec, SurfaceSpec};
use crate::checks::CheckName;
use crate::error::ConfigError;

pub const DEFAULT_COUNT: usize = 100;

/// Deserializes with the failing field path in the error.
pub(crate) fn from_value<T: DeserializeOwned>(value: serde_json::Value, root: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { root.to_string() } else { format!("{root}.{path}") };
        let field = field.trim_start_matches('.').to_string();
        ConfigError::Schema {
            field,
            message: e.into_inner().to_string(),
        }
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub metric: String,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub checks: Vec<CheckFile>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            count: DEFAULT_COUNT,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Directory for the report files, relative to the scenario file.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Option<Vec<Format>>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CheckFile {
    pub name: CheckName,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub metric: Option<String>,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub params: CheckParams,
}

/// Check-specific settings; each check reads the fields it documents.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    /// Expected constant (flag curvature, S/F, Cartan c); defaults to the catalog value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Search window or grid range in arc length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    /// Arc length of the focal submanifold for minimality audits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Number of grid points for tube checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Focal points the detector must report, in addition to the tube law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal: Option<Vec<FocalExpectation>>,
    /// Distinct principal curvature count required of measured spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct: Option<usize>,
    /// Function and levels for the isoparametric verifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Closed form the fitted b̃(t) must match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_closed_form: Option<BClosedForm>,
    /// Expected verdict of a verifier or detector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    /// Shift applied to the last angle of perturbed synthetic spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Lower bound a detection check must exceed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Largest g for synthetic spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_g: Option<usize>,
    /// Radius of the injected circle control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FocalExpectation {
    pub s: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionSpec {
    /// f = x¹.
    Coordinate,
    /// f = |x|.
    Radial,
    /// f = √((x¹)² + (x²)²).
    Cylinder,
    /// f = x¹ + (x²)².
    Nonexample,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BClosedForm {
    /// b̃ = 0.
    Zero,
    /// b̃ = (n − 1)/t.
    Radial,
}

/// A check with every default applied.
#[derive(Clone, Debug)]
pub struct ResolvedCheck {
    pub name: CheckName,
    pub label: String,
    pub tolerance: f64,
    pub metric: MetricSpec,
    pub surface: Option<SurfaceSpec>,
    pub count: usize,
    pub seed: u64,
    pub params: CheckParams,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub seed: u64,
    pub checks: Vec<ResolvedCheck>,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

fn position(e: &serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(dir) = &scenario.output_dir {
        if dir.is_relative() {
            scenario.output_dir = Some(path.parent().unwrap_or(Path::new(".")).join(dir));
        }
    }
    Ok(scenario)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| position(&e))?;
    let file: ScenarioFile = from_value(value, "")?;
    resolve(file)
}

pub fn resolve(file: ScenarioFile) -> Result<Scenario, ConfigError> {
    let metric = MetricSpec::parse(&file.metric, "metric")?;
    let mut checks = Vec::with_capacity(file.checks.len());
    for (i, c) in file.checks.into_iter().enumerate() {
        let field = format!("checks[{i}]");
        let metric = match &c.metric {
            Some(m) => MetricSpec::parse(m, &format!("{field}.metric"))?,
            None => metric.clone(),
        };
        let surface = c.surface.clone().or_else(|| file.surface.clone());
        if let Some(s) = &surface {
            s.field(&metric).map_err(|message| ConfigError::Schema {
                field: format!("{field}.surface"),
                message,
            })?;
        }
        if c.name.needs_surface() && surface.is_none() {
            return Err(ConfigError::Schema {
                field: format!("{field}.surface"),
                message: format!("check {} needs a surface", c.name),
            });
        }
        if let Some(t) = c.tolerance {
            if !(t >= 0.0) {
                return Err(ConfigError::Schema {
                    field: format!("{field}.tolerance"),
                    message: format!("tolerance must be a nonnegative number, got {t}"),
                });
            }
        }
        c.name.validate(&c.params, &metric).map_err(|(param, message)| ConfigError::Schema {
            field: if param == "metric" { format!("{field}.metric") } else { format!("{field}.params.{param}") },
            message,
        })?;
        checks.push(ResolvedCheck {
            name: c.name,
            label: c.label.unwrap_or_else(|| c.name.to_string()),
            tolerance: c.tolerance.unwrap_or(c.name.default_tolerance()),
            metric,
            surface,
            count: c.count.unwrap_or(file.sampling.count),
            // every check draws from its own stream so reordering does not change results
            seed: file.sampling.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64),
            params: c.params,
        });
    }
    Ok(Scenario {
        id: file.id,
        description: file.description,
        seed: file.sampling.seed,
        checks,
        output_dir: file.output.dir,
        formats: file.output.formats.unwrap_or_else(|| vec![Format::Json, Format::Csv]),
    })
}

impl Scenario {
    /// Replaces the seed and re-derives the per-check streams.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        for (i, c) in self.checks.iter_mut().enumerate() {
            c.seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
        }
    }

    pub fn scale_tolerances(&mut self, factor: f64) {
        for c in &mut self.checks {
            c.tolerance *= factor;
        }
    }
}
