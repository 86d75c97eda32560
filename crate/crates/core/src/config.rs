//! Run configuration: one TOML document drives every subcommand; command
//! line flags override individual fields.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ActivationKind, ActivationSpec, BuiltinKernel, Kernel};
use crate::simulate::Centering;
use crate::sphere::PointConfig;

/// Kernel description.
///
/// Fields: `kind` (relu | exponential | linear | hermite | quadrature),
/// `parameters` (named numbers: gamma for exponential, a for the
/// gaussian-exp activation), `quadrature_order`, `hermite_coeffs`,
/// `activation` (relu | gaussian-exp | linear, for kind = quadrature).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: String,
    #[serde(default)]
    pub parameters: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub quadrature_order: Option<usize>,
    #[serde(default)]
    pub hermite_coeffs: Option<Vec<f64>>,
    #[serde(default)]
    pub activation: Option<String>,
}

impl KernelConfig {
    pub fn build(&self) -> Result<Kernel> {
        match self.kind.as_str() {
            "relu" => Kernel::builtin(BuiltinKernel::Relu),
            "exponential" | "exp" => {
                let gamma = *self.parameters.get("gamma").ok_or_else(|| {
                    Error::Config("exponential kernel needs parameters.gamma".into())
                })?;
                Kernel::builtin(BuiltinKernel::Exponential { gamma })
            }
            "linear" => Kernel::builtin(BuiltinKernel::Linear),
            "hermite" => {
                let coeffs = self.hermite_coeffs.as_ref().ok_or_else(|| {
                    Error::Config("hermite kernel needs hermite_coeffs".into())
                })?;
                Kernel::from_hermite(coeffs)
            }
            "quadrature" => {
                let activation = self.activation.as_deref().ok_or_else(|| {
                    Error::Config(
                        "quadrature kernel needs activation = relu | gaussian-exp | linear"
                            .into(),
                    )
                })?;
                let kind = match activation {
                    "relu" => ActivationKind::Relu,
                    "linear" => ActivationKind::Linear,
                    "gaussian-exp" => {
                        let a = *self.parameters.get("a").ok_or_else(|| {
                            Error::Config("gaussian-exp activation needs parameters.a".into())
                        })?;
                        ActivationKind::GaussianExp { a }
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "unknown activation '{other}' (expected relu | gaussian-exp | linear)"
                        )))
                    }
                };
                let mut spec = ActivationSpec::new(kind);
                if let Some(order) = self.quadrature_order {
                    spec = spec.with_order(order);
                }
                Kernel::from_activation(&spec)
            }
            other => Err(Error::Config(format!(
                "unknown kernel kind '{other}' \
                 (expected relu | exponential | linear | hermite | quadrature)"
            ))),
        }
    }
}

/// Point specification: inline coordinate rows or "uniform:m:seed".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsSpec {
    Coordinates(Vec<Vec<f64>>),
    Spec(String),
}

impl PointsSpec {
    pub fn build(&self, dim: usize) -> Result<PointConfig> {
        match self {
            PointsSpec::Coordinates(rows) => PointConfig::new(dim, rows),
            PointsSpec::Spec(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() == 3 && parts[0] == "uniform" {
                    let m: usize = parts[1]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad point count in '{s}'")))?;
                    let seed: u64 = parts[2]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed in '{s}'")))?;
                    PointConfig::uniform(dim, m, seed)
                } else {
                    Err(Error::Config(format!(
                        "unknown points spec '{s}' (expected uniform:<m>:<seed> or coordinate rows)"
                    )))
                }
            }
        }
    }
}

/// Depth schedule: explicit list or "geometric:start:factor:count".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    List(Vec<u64>),
    Spec(String),
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Vec<u64>> {
        let schedule = match self {
            ScheduleSpec::List(v) => v.clone(),
            ScheduleSpec::Spec(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() == 4 && parts[0] == "geometric" {
                    let start: u64 = parts[1]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad start in '{s}'")))?;
                    let factor: f64 = parts[2]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad factor in '{s}'")))?;
                    let count: usize = parts[3]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad count in '{s}'")))?;
                    if start == 0 || factor <= 1.0 || count == 0 {
                        return Err(Error::Config(format!(
                            "geometric schedule '{s}' needs start >= 1, factor > 1, count >= 1"
                        )));
                    }
                    let mut v = Vec::with_capacity(count);
                    let mut cur = start as f64;
                    for _ in 0..count {
                        let l = cur.round() as u64;
                        if v.last() != Some(&l) {
                            v.push(l);
                        }
                        cur *= factor;
                    }
                    v
                } else {
                    return Err(Error::Config(format!(
                        "unknown schedule spec '{s}' (expected geometric:<start>:<factor>:<count>)"
                    )));
                }
            }
        };
        if schedule.is_empty() {
            return Err(Error::Config("depth schedule is empty".into()));
        }
        if schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "depth schedule must be strictly increasing".into(),
            ));
        }
        Ok(schedule)
    }
}

/// Profile computation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// "chebyshev:<n>" or explicit grid points.
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    /// Extrapolation depth for the unit-derivative regime.
    #[serde(default = "default_sparse_depth")]
    pub sparse_depth: u64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            grid: default_grid(),
            sparse_depth: default_sparse_depth(),
        }
    }
}

fn default_grid() -> GridSpec {
    GridSpec::Spec("chebyshev:201".into())
}

fn default_sparse_depth() -> u64 {
    crate::iteration::DEFAULT_SPARSE_DEPTH
}

/// Grid specification for profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Spec(String),
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Points(v) => {
                if v.len() < 2 || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config(
                        "profile grid must be strictly increasing with at least 2 points".into(),
                    ));
                }
                if v.iter().any(|&t| !(-1.0..=1.0).contains(&t)) {
                    return Err(Error::Config("profile grid points must lie in [-1, 1]".into()));
                }
                Ok(v.clone())
            }
            GridSpec::Spec(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                if parts.len() == 2 && parts[0] == "chebyshev" {
                    let n: usize = parts[1]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad grid size in '{s}'")))?;
                    if n < 2 {
                        return Err(Error::Config("grid needs at least 2 points".into()));
                    }
                    Ok(crate::iteration::chebyshev_grid(n))
                } else {
                    Err(Error::Config(format!(
                        "unknown grid spec '{s}' (expected chebyshev:<n> or explicit points)"
                    )))
                }
            }
        }
    }
}

/// User-supplied exact expansion parameters, overriding the least-squares
/// fit wherever the exponent enters (speed, plateau, extrapolation).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityOverride {
    pub c: f64,
    pub rho: f64,
}

/// Optional tolerance overrides; unset fields keep the library defaults.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    /// Half-width of the unit-derivative classification band.
    #[serde(default)]
    pub classify: Option<f64>,
    /// Symmetry detection tolerance on |kappa(-1) - 1|.
    #[serde(default)]
    pub symmetry: Option<f64>,
}

/// Rate-function inputs.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// Inline argument vectors (one per row).
    #[serde(default)]
    pub y: Vec<Vec<f64>>,
    /// CSV file of argument vectors, one per line.
    #[serde(default)]
    pub y_file: Option<String>,
    /// Also run the contraction-principle check per vector.
    #[serde(default)]
    pub contraction: bool,
}

/// Verification settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_eps_schedule")]
    pub eps_schedule: Vec<f64>,
    /// Half-space direction; defaults to all ones.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default = "default_offset")]
    pub a: f64,
    #[serde(default = "default_l_big")]
    pub l_big: u64,
    #[serde(default = "default_demo_depth")]
    pub demo_depth: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Depth for the weak-convergence sampling check; defaults per regime
    /// (geometric convergence needs ~30 levels, polynomial ~10^4).
    #[serde(default)]
    pub weak_depth: Option<u64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            eps_schedule: default_eps_schedule(),
            theta: None,
            a: default_offset(),
            l_big: default_l_big(),
            demo_depth: default_demo_depth(),
            n: default_n(),
            weak_depth: None,
        }
    }
}

fn default_eps_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_offset() -> f64 {
    1.0
}
fn default_l_big() -> u64 {
    200
}
fn default_demo_depth() -> u64 {
    10_000
}
fn default_n() -> usize {
    200_000
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub points: Option<PointsSpec>,
    #[serde(default = "default_centering")]
    pub centering: String,
    #[serde(default)]
    pub l_schedule: Option<ScheduleSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub depth: Option<u64>,
    #[serde(default)]
    pub regularity: Option<RegularityOverride>,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_dim() -> usize {
    2
}
fn default_centering() -> String {
    "north-pole".into()
}
fn default_seed() -> u64 {
    0
}
fn default_out() -> String {
    "out".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelConfig::default(),
            dim: default_dim(),
            points: None,
            centering: default_centering(),
            l_schedule: None,
            seed: default_seed(),
            out: default_out(),
            label: None,
            n: None,
            depth: None,
            regularity: None,
            tolerances: TolerancesConfig::default(),
            profile: ProfileConfig::default(),
            rates: RatesConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn centering(&self) -> Result<Centering> {
        match self.centering.as_str() {
            "north-pole" => Ok(Centering::NorthPole),
            "spherical-average" => Ok(Centering::SphericalAverage),
            other => Err(Error::Config(format!(
                "unknown centering '{other}' (expected north-pole | spherical-average)"
            ))),
        }
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        if self.dim < 1 {
            return Err(Error::Config(format!(
                "sphere dimension must be >= 1, got {}",
                self.dim
            )));
        }
        self.kernel.build()
    }

    pub fn build_points(&self) -> Result<PointConfig> {
        let spec = self
            .points
            .as_ref()
            .ok_or_else(|| Error::Config("no points configured".into()))?;
        spec.build(self.dim)
    }

    pub fn build_schedule(&self) -> Result<Vec<u64>> {
        let spec = self
            .l_schedule
            .as_ref()
            .ok_or_else(|| Error::Config("no depth schedule configured".into()))?;
        spec.build()
    }

    /// Classify the kernel under the configured tolerances and apply the
    /// regularity override when present.
    pub fn classify(&self, kernel: &crate::kernels::Kernel) -> Result<crate::RegimeReport> {
        let classify_tol = self
            .tolerances
            .classify
            .unwrap_or(crate::iteration::CLASSIFY_TOL);
        let symmetry_tol = self
            .tolerances
            .symmetry
            .unwrap_or(crate::iteration::SYMMETRY_TOL);
        let report = crate::iteration::classify_regime_with(kernel, classify_tol, symmetry_tol)?;
        match &self.regularity {
            Some(o) => report.with_regularity(o.c, o.rho),
            None => Ok(report),
        }
    }
}

/// A custom activation cannot be described in a config document; this
/// constructor exists for API callers that hold a function.
pub fn custom_activation(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ActivationSpec {
    ActivationSpec::new(ActivationKind::Custom(Arc::new(f)))
}
