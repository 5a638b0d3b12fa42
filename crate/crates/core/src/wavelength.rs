//! Wavelength from absorption probability, with delta-method intervals.
//!
//! Absorption per layer follows `p = 1 - exp(-chi * mu)` where `chi` is the
//! product of atomic density, layer thickness and the cross-section slope.
//! The interval half-width combines a counting term from `p_hat` with a
//! systematic term from the externally measured `chi_hat`:
//!
//! ```text
//! s_p   = sd_p / (sqrt(n) (1 - p_hat) chi_hat)
//! s_chi = |log(1 - p_hat)| sd_chi / (sqrt(n') chi_hat^2)
//! half  = z_(1 - alpha/2) sqrt(s_p^2 + s_chi^2)
//! ```
//!
//! All lengths are in meters. Use [`ANGSTROM`] to convert for display.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::asymptotics::{covariance_closed_form, AsymCov};
use crate::error::{invalid, Error, Result, Stage};
use crate::estimator::{mle, MleResult};
use crate::sim::{CountsMatrix, DetectorConfig};

/// Meters per ångström.
pub const ANGSTROM: f64 = 1e-10;

/// Reference `chi_hat` for a boron-carbide coated layer, m^-1.
pub const DEFAULT_CHI: f64 = 2.142e8;
/// Reference variance of `chi_hat`, taken verbatim in m^-2.
pub const DEFAULT_CHI_VARIANCE: f64 = 0.021e8;
/// Number of measurements behind the reference `chi_hat`.
pub const DEFAULT_N_PRIME: u64 = 45;

/// Estimate of `chi` with its asymptotic variance and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionModel {
    /// Cross-section slope estimate, when `chi` was derived from one.
    pub slope: Option<f64>,
    pub slope_variance: Option<f64>,
    pub n_prime: u64,
    /// m^-1.
    pub chi: f64,
    /// Asymptotic variance of `chi_hat`, m^-2.
    pub chi_variance: f64,
}

impl Default for CrossSectionModel {
    fn default() -> Self {
        CrossSectionModel {
            slope: None,
            slope_variance: None,
            n_prime: DEFAULT_N_PRIME,
            chi: DEFAULT_CHI,
            chi_variance: DEFAULT_CHI_VARIANCE,
        }
    }
}

impl CrossSectionModel {
    pub fn from_chi(chi: f64, chi_variance: f64, n_prime: u64) -> Result<Self> {
        let model = CrossSectionModel {
            slope: None,
            slope_variance: None,
            n_prime,
            chi,
            chi_variance,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds `chi = rho d slope` and `var_chi = rho^2 d^2 var_slope`.
    pub fn from_slope(
        slope: f64,
        slope_variance: f64,
        n_prime: u64,
        detector: &DetectorConfig,
    ) -> Result<Self> {
        let factor = detector.atomic_density * detector.layer_thickness;
        let model = CrossSectionModel {
            slope: Some(slope),
            slope_variance: Some(slope_variance),
            n_prime,
            chi: factor * slope,
            chi_variance: factor * factor * slope_variance,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(invalid(format!("chi must be finite and > 0, got {}", self.chi)));
        }
        if !(self.chi_variance >= 0.0 && self.chi_variance.is_finite()) {
            return Err(invalid(format!(
                "chi variance must be >= 0, got {}",
                self.chi_variance
            )));
        }
        if self.n_prime < 1 {
            return Err(invalid("n_prime must be >= 1"));
        }
        Ok(())
    }

    /// Same `chi_hat`, treated as exact: the systematic term vanishes.
    pub fn with_fixed_chi(self) -> Self {
        CrossSectionModel {
            chi_variance: 0.0,
            slope_variance: self.slope_variance.map(|_| 0.0),
            ..self
        }
    }

    pub fn chi_sd(&self) -> f64 {
        self.chi_variance.sqrt()
    }
}

pub fn mu_from_p(p: f64, chi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("absorption must lie in [0,1), got {p}")));
    }
    if !(chi > 0.0) {
        return Err(Error::Domain(format!("chi must be > 0, got {chi}")));
    }
    Ok(-(-p).ln_1p() / chi)
}

pub fn p_from_mu(mu: f64, chi: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::Domain(format!("wavelength must be >= 0, got {mu}")));
    }
    if !(chi > 0.0) {
        return Err(Error::Domain(format!("chi must be > 0, got {chi}")));
    }
    Ok(-(-chi * mu).exp_m1())
}

// Acklam's rational approximation to the normal quantile.
const A: [f64; 6] = [
    -3.969683028665376e1,
    2.209460984245205e2,
    -2.759285104469687e2,
    1.38357751867269e2,
    -3.066479806614716e1,
    2.506628277459239,
];
const B: [f64; 5] = [
    -5.447609879822406e1,
    1.615858368580409e2,
    -1.556989798598866e2,
    6.680131188771972e1,
    -1.328068155288572e1,
];
const C: [f64; 6] = [
    -7.784894002430293e-3,
    -3.223964580411365e-1,
    -2.400758277161838,
    -2.549732539343734,
    4.374664141464968,
    2.938163982698783,
];
const D: [f64; 4] = [
    7.784695709041462e-3,
    3.224671290700398e-1,
    2.445134137142996,
    3.754408661907416,
];
const P_LOW: f64 = 0.02425;

/// Initial approximation for `u <= 0.5`; relative error about 1.15e-9.
fn acklam_lower(u: f64) -> f64 {
    if u < P_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation refined by one Halley step against the
/// complementary error function. Computed on the lower half and reflected,
/// so `normal_quantile(u) == -normal_quantile(1 - u)`.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level must lie in (0,1), got {u}"
        )));
    }
    if u == 0.5 {
        return Ok(0.0);
    }
    if u > 0.5 {
        return Ok(-lower_quantile(1.0 - u));
    }
    Ok(lower_quantile(u))
}

fn lower_quantile(u: f64) -> f64 {
    let x = acklam_lower(u);
    let e = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - u;
    let step = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - step / (1.0 + 0.5 * x * step)
}

/// The two terms of the interval's standard error, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTerms {
    /// Counting-statistics term from `p_hat`.
    pub s_p: f64,
    /// Systematic term from `chi_hat`.
    pub s_chi: f64,
    /// `n' / n`.
    pub gamma: f64,
}

pub fn delta_terms(
    mle: &MleResult,
    cov: &AsymCov,
    xsec: &CrossSectionModel,
    runs: usize,
) -> Result<DeltaTerms> {
    let p = mle.p_hat;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p_hat must lie in (0,1), got {p}")));
    }
    if runs < 1 {
        return Err(invalid("run count must be >= 1"));
    }
    xsec.validate()?;
    let chi = xsec.chi;
    let n = runs as f64;
    let n_prime = xsec.n_prime as f64;
    Ok(DeltaTerms {
        s_p: cov.sd_p() / (n.sqrt() * (1.0 - p) * chi),
        s_chi: (-p).ln_1p().abs() * xsec.chi_sd() / (n_prime.sqrt() * chi * chi),
        gamma: n_prime / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthEstimate {
    /// Meters.
    pub mu_hat: f64,
    pub s_p: f64,
    pub s_chi: f64,
    /// `sqrt(s_p^2 + s_chi^2)`, the standard error of `mu_hat`.
    pub s_total: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub z: f64,
    pub ci: [f64; 2],
}

impl WavelengthEstimate {
    pub fn half_width(&self) -> f64 {
        self.z * self.s_total
    }

    pub fn covers(&self, mu: f64) -> bool {
        self.ci[0] <= mu && mu <= self.ci[1]
    }
}

/// Two-sided `1 - alpha` interval centred on `mu_hat`.
pub fn confidence_interval(mu_hat: f64, terms: &DeltaTerms, alpha: f64) -> Result<WavelengthEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let z = normal_quantile(1.0 - 0.5 * alpha)?;
    let s_total = terms.s_p.hypot(terms.s_chi);
    let half = z * s_total;
    Ok(WavelengthEstimate {
        mu_hat,
        s_p: terms.s_p,
        s_chi: terms.s_chi,
        s_total,
        gamma: terms.gamma,
        alpha,
        z,
        ci: [mu_hat - half, mu_hat + half],
    })
}

/// Runs estimation, covariance, delta terms and interval on one data set.
///
/// Errors carry the stage that produced them.
pub fn estimate_wavelength(
    data: &CountsMatrix,
    detector: &DetectorConfig,
    xsec: &CrossSectionModel,
    alpha: f64,
) -> Result<WavelengthEstimate> {
    let fit = mle(data, detector.exposure).map_err(|e| e.at(Stage::Mle))?;
    if fit.is_boundary() {
        return Err(Error::BoundaryEstimate.at(Stage::Mle));
    }
    let cov = covariance_closed_form(fit.p_hat, fit.lambda_hat, data.layers(), detector.exposure)
        .map_err(|e| e.at(Stage::Covariance))?;
    let terms = delta_terms(&fit, &cov, xsec, data.runs()).map_err(|e| e.at(Stage::Delta))?;
    let mu_hat = mu_from_p(fit.p_hat, xsec.chi).map_err(|e| e.at(Stage::Delta))?;
    confidence_interval(mu_hat, &terms, alpha).map_err(|e| e.at(Stage::Interval))
}
