//! Run configuration: one JSON document with SI units in the field names.
//!
//! ```json
//! {
//!   "detector": { "layers": 25, "t_s": 1.0, "rho_at_per_m3": 1e29, "d_l_m": 1e-6 },
//!   "beam": { "p": 0.1, "lambda_per_s": 1e5 },
//!   "xsec": { "chi_per_m": 2.142e8, "sigma2_chi_per_m2": 2.1e6, "n_prime": 45 },
//!   "n": 10, "alpha": 0.01, "seed": 1, "replicates": 2000
//! }
//! ```
//!
//! The beam takes exactly one of `p` or `mu_angstrom`. The cross-section
//! block takes either `chi_per_m` (with `sigma2_chi_per_m2`) or the slope
//! form `slope_m` (with `sigma2_slope_m2`), from which `chi` is derived using
//! the detector's density and thickness. Omitted blocks and fields take the
//! reference defaults.

use std::path::Path;

use mlnd_core::harness::{Scenario, DEFAULT_REPLICATES};
use mlnd_core::wavelength::{CrossSectionModel, DEFAULT_CHI, DEFAULT_CHI_VARIANCE, DEFAULT_N_PRIME};
use mlnd_core::{p_from_mu, BeamParams, DetectorConfig, ANGSTROM};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_EXPOSURE: f64 = 1.0;
pub const DEFAULT_ATOMIC_DENSITY: f64 = 1e29;
pub const DEFAULT_LAYER_THICKNESS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamSection>,
    #[serde(default)]
    pub xsec: XsecSection,
    #[serde(default = "default_runs")]
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub layers: usize,
    #[serde(default = "default_exposure")]
    pub t_s: f64,
    #[serde(default = "default_density")]
    pub rho_at_per_m3: f64,
    #[serde(default = "default_thickness")]
    pub d_l_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_angstrom: Option<f64>,
    pub lambda_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsecSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_per_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_chi_per_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_slope_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prime: Option<u64>,
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_exposure() -> f64 {
    DEFAULT_EXPOSURE
}
fn default_density() -> f64 {
    DEFAULT_ATOMIC_DENSITY
}
fn default_thickness() -> f64 {
    DEFAULT_LAYER_THICKNESS
}

fn field_error(path: &str, err: mlnd_core::Error) -> CliError {
    CliError::Input(format!("{path}: {err}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            CliError::Input(format!("config field `{path}`: {}", err.inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn detector(&self) -> Result<DetectorConfig, CliError> {
        let d = &self.detector;
        DetectorConfig::new(d.layers, d.t_s, d.rho_at_per_m3, d.d_l_m).map_err(|e| field_error("detector", e))
    }

    pub fn xsec(&self) -> Result<CrossSectionModel, CliError> {
        let x = &self.xsec;
        let n_prime = x.n_prime.unwrap_or(DEFAULT_N_PRIME);
        match (x.chi_per_m, x.slope_m) {
            (Some(_), Some(_)) => Err(CliError::Input(
                "xsec: give either `chi_per_m` or `slope_m`, not both".into(),
            )),
            (None, Some(slope)) => {
                if x.sigma2_chi_per_m2.is_some() {
                    return Err(CliError::Input(
                        "xsec: `sigma2_chi_per_m2` belongs with `chi_per_m`; use `sigma2_slope_m2`".into(),
                    ));
                }
                let variance = x
                    .sigma2_slope_m2
                    .ok_or_else(|| CliError::Input("xsec: `slope_m` requires `sigma2_slope_m2`".into()))?;
                CrossSectionModel::from_slope(slope, variance, n_prime, &self.detector()?)
                    .map_err(|e| field_error("xsec", e))
            }
            (chi, None) => {
                if x.sigma2_slope_m2.is_some() {
                    return Err(CliError::Input(
                        "xsec: `sigma2_slope_m2` requires `slope_m`".into(),
                    ));
                }
                CrossSectionModel::from_chi(
                    chi.unwrap_or(DEFAULT_CHI),
                    x.sigma2_chi_per_m2.unwrap_or(DEFAULT_CHI_VARIANCE),
                    n_prime,
                )
                .map_err(|e| field_error("xsec", e))
            }
        }
    }

    /// Beam with the absorption resolved, from `p` or from a wavelength.
    pub fn beam(&self) -> Result<BeamParams, CliError> {
        let b = self
            .beam
            .as_ref()
            .ok_or_else(|| CliError::Input("config field `beam` is required for this command".into()))?;
        let p = match (b.p, b.mu_angstrom) {
            (Some(p), None) => p,
            (None, Some(mu)) => {
                p_from_mu(mu * ANGSTROM, self.xsec()?.chi).map_err(|e| field_error("beam.mu_angstrom", e))?
            }
            _ => {
                return Err(CliError::Input(
                    "beam: give exactly one of `p` or `mu_angstrom`".into(),
                ))
            }
        };
        BeamParams::new(p, b.lambda_per_s).map_err(|e| field_error("beam", e))
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let scenario = Scenario {
            detector: self.detector()?,
            beam: self.beam()?,
            xsec: self.xsec()?,
            runs: self.n,
            alpha: self.alpha,
        };
        scenario.validate().map_err(|e| field_error("config", e))?;
        Ok(scenario)
    }
}
