//! JSON run configurations, built-in presets and field-level validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfbm_core::constants::{ConstantKind, DriftSpec, LadderSpec};
use sfbm_core::grid::DomainSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the grid-point cap.
pub const GRID_CAP_ENV: &str = "SFBM_MAX_GRID_POINTS";

/// A configuration problem, reported with the offending field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be a positive finite number, got {v}")))
    }
}

fn check_schema(v: u32) -> Result<(), ConfigError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(bad("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}")))
    }
}

fn check_replications(field: &str, n: usize) -> Result<(), ConfigError> {
    if n == 0 {
        Err(bad(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_u_values(field: &str, u: &[f64]) -> Result<(), ConfigError> {
    if let Some(x) = u.iter().find(|x| !x.is_finite()) {
        return Err(bad(field, format!("non-finite level {x}")));
    }
    if u.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad(field, "levels must be strictly increasing"));
    }
    Ok(())
}

/// Grid-point cap: the environment override if set, else the library default.
pub fn grid_point_cap() -> Result<usize, ConfigError> {
    match std::env::var(GRID_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| bad(GRID_CAP_ENV, format!("expected a positive integer, got {v:?}"))),
        Err(_) => Ok(sfbm_core::constants::DEFAULT_MAX_POINTS),
    }
}

/// The field: Hurst index and the region it is observed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub beta: f64,
    pub domain: DomainSpec,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(bad("model.beta", format!("must lie in (0, 1/2], got {}", self.beta)));
        }
        if matches!(self.domain, DomainSpec::EuclideanRectangle { .. }) {
            return Err(bad("model.domain", "the spherical field needs a full_sphere or geodesic_disc domain"));
        }
        self.domain.validate().map_err(|e| bad("model.domain", e.to_string()))
    }
}

/// Optional replacements for the default ladder of a constant estimate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

/// One constant to estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantJob {
    pub kind: ConstantKind,
    pub hurst: f64,
    pub dim: usize,
    #[serde(default = "zero_drift")]
    pub drift: DriftSpec,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderOverride>,
}

fn zero_drift() -> DriftSpec {
    DriftSpec::Zero
}

impl ConstantJob {
    pub fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let f = |name: &str| format!("{prefix}.{name}");
        if !(self.hurst > 0.0 && self.hurst <= 1.0) {
            return Err(bad(&f("hurst"), format!("must lie in (0, 1], got {}", self.hurst)));
        }
        if self.dim == 0 {
            return Err(bad(&f("dim"), "must be at least 1"));
        }
        check_replications(&f("replications"), self.replications)?;
        self.drift
            .validate(self.dim)
            .map_err(|e| bad(&f("drift"), e.to_string()))?;
        match self.kind {
            ConstantKind::Pickands if self.drift != DriftSpec::Zero => {
                return Err(bad(&f("drift"), "the Pickands constant takes no drift"));
            }
            ConstantKind::Piterbarg if self.drift == DriftSpec::Zero => {
                return Err(bad(&f("drift"), "the Piterbarg constant needs a drift"));
            }
            ConstantKind::M | ConstantKind::MHat
                if self.drift == DriftSpec::Zero || !self.drift.first_coordinate_only() =>
            {
                return Err(bad(&f("drift"), "M and M_hat need a nonzero drift in the first coordinate only"));
            }
            _ => {}
        }
        if let Some(l) = &self.ladder {
            if let Some(s) = &l.s_values {
                if s.is_empty() {
                    return Err(bad(&f("ladder.s_values"), "needs at least one rung"));
                }
                for &v in s {
                    positive(&f("ladder.s_values"), v)?;
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(bad(&f("ladder.s_values"), "must be strictly increasing"));
                }
            }
            if let Some(v) = l.s1_factor {
                positive(&f("ladder.s1_factor"), v)?;
            }
            if let Some(v) = l.grid_step {
                positive(&f("ladder.grid_step"), v)?;
            }
        }
        Ok(())
    }

    /// The default ladder for this kind, trimmed to the cap, with any overrides applied.
    /// Explicit S values are kept as given and may hit the cap at run time.
    pub fn ladder(&self, max_points: usize) -> LadderSpec {
        let symmetric = self.kind == ConstantKind::Piterbarg;
        let mut l = match self.kind {
            ConstantKind::Pickands => LadderSpec::pickands_default(self.hurst, self.dim, self.replications),
            _ => LadderSpec::drift_default(self.dim, self.replications, symmetric),
        };
        let o = self.ladder.clone().unwrap_or_default();
        if let Some(v) = o.s1_factor {
            l.s1_factor = v;
        }
        if let Some(v) = o.grid_step {
            l.grid_step = v;
        }
        match o.s_values {
            Some(s) => {
                l.s_values = s;
                l.max_points = max_points;
                l
            }
            None => {
                if self.kind == ConstantKind::Pickands {
                    let s_max = 2f64.powf((3.0 - 2.0 * self.hurst) / (2.0 * self.hurst));
                    l.s_values = [0.125, 0.25, 0.5, 1.0].iter().map(|f| f * s_max).collect();
                } else if self.dim == 1 {
                    l.s_values = vec![2.0, 4.0, 8.0, 16.0];
                } else {
                    l.s_values = vec![2.0, 4.0, 8.0];
                }
                l.with_max_points(max_points, self.dim, symmetric)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub resolution: f64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub u_values: Vec<f64>,
    #[serde(default = "yes")]
    pub write_maxima: bool,
}

fn yes() -> bool {
    true
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_schema(self.schema_version)?;
        self.model.validate()?;
        positive("resolution", self.resolution)?;
        check_replications("replications", self.replications)?;
        check_u_values("u_values", &self.u_values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub constant: ConstantJob,
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_schema(self.schema_version)?;
        self.constant.validate("constant")
    }
}

/// Where the constant of the asymptotic formula comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstantSource {
    Inline { value: f64, kind: ConstantKind },
    /// A constants JSON written by the `constants` command.
    File { path: PathBuf },
    Estimate { job: ConstantJob },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub resolution: f64,
    pub u_values: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub constant: ConstantSource,
    #[serde(default = "default_min_exceedances")]
    pub min_exceedances: usize,
    /// Skip the simulation and tabulate the formula only.
    #[serde(default)]
    pub asymptotics_only: bool,
}

fn default_min_exceedances() -> usize {
    100
}

impl ValidateConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_schema(self.schema_version)?;
        self.model.validate()?;
        positive("resolution", self.resolution)?;
        if self.u_values.is_empty() {
            return Err(bad("u_values", "needs at least one level"));
        }
        check_u_values("u_values", &self.u_values)?;
        check_replications("replications", self.replications)?;
        match &self.constant {
            ConstantSource::Inline { value, .. } => positive("constant.value", *value),
            ConstantSource::File { path } if path.as_os_str().is_empty() => Err(bad("constant.path", "is empty")),
            ConstantSource::File { .. } => Ok(()),
            ConstantSource::Estimate { job } => job.validate("constant.job"),
        }
    }

    /// Resolves a relative constants path against the directory of the config file.
    pub fn resolve_paths(&mut self, config_dir: &Path) {
        if let ConstantSource::File { path } = &mut self.constant {
            if path.is_relative() {
                *path = config_dir.join(&*path);
            }
        }
    }
}

/// Evenly spaced levels from `from` to `to` inclusive.
pub fn level_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

pub fn simulate_preset(name: &str) -> Option<SimulateConfig> {
    match name {
        "circle-small" => Some(SimulateConfig {
            schema_version: SCHEMA_VERSION,
            model: ModelConfig {
                beta: 0.5,
                domain: DomainSpec::FullSphere { n: 1 },
            },
            resolution: 2.0 * std::f64::consts::PI / 64.0,
            replications: 1000,
            seed: 1,
            u_values: vec![0.0, 1.0, 2.0, 3.0],
            write_maxima: true,
        }),
        _ => None,
    }
}

pub fn constants_preset(name: &str) -> Option<ConstantsConfig> {
    let job = |kind, hurst, drift, replications| ConstantJob {
        kind,
        hurst,
        dim: 1,
        drift,
        replications,
        ladder: None,
    };
    let job = match name {
        "pickands-quick" => job(ConstantKind::Pickands, 0.5, DriftSpec::Zero, 1_000_000),
        "pickands-h1" => job(ConstantKind::Pickands, 1.0, DriftSpec::Zero, 200_000),
        "piterbarg-steep" => job(ConstantKind::Piterbarg, 0.5, DriftSpec::NormPower { b: 40.0, eta: 1.0 }, 20_000),
        "piterbarg-circle" => job(ConstantKind::Piterbarg, 0.5, DriftSpec::NormPower { b: 1.0, eta: 1.0 }, 100_000),
        "m-hat-arc" => job(ConstantKind::MHat, 0.5, DriftSpec::FirstCoordPower { b: 1.0, gamma: 1.0 }, 100_000),
        _ => return None,
    };
    Some(ConstantsConfig {
        schema_version: SCHEMA_VERSION,
        seed: 1,
        constant: job,
    })
}

pub fn validate_preset(name: &str) -> Option<ValidateConfig> {
    let base = |domain, resolution, u_values, job| ValidateConfig {
        schema_version: SCHEMA_VERSION,
        model: ModelConfig { beta: 0.5, domain },
        resolution,
        u_values,
        replications: 1_000_000,
        seed: 1,
        constant: ConstantSource::Estimate { job },
        min_exceedances: 100,
        asymptotics_only: false,
    };
    match name {
        "circle" => Some(base(
            DomainSpec::FullSphere { n: 1 },
            2.0 * std::f64::consts::PI / 2048.0,
            level_range(3.0, 5.4, 0.2),
            constants_preset("piterbarg-circle")?.constant,
        )),
        "arc" => Some(base(
            DomainSpec::GeodesicDisc { n: 1, a: 1.0 },
            1.0 / 512.0,
            level_range(2.0, 4.0, 0.2),
            constants_preset("m-hat-arc")?.constant,
        )),
        _ => None,
    }
}
