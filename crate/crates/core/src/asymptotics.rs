//! Fisher information and asymptotic covariance of the estimator.
//!
//! The per-run covariance of `(p_hat, lambda_hat)` is the inverse of the
//! Fisher information summed over layers. With `y = 1 - p`:
//!
//! ```text
//! q(p,k) = (1 - y^k)^2 - k^2 p^2 y^(k-1)
//! h(p,k) = (1 - y^k)   - k^2 p^2 y^(k-1)
//! var_p        = (1 - y^k) y p^2 / (lambda t q)
//! var_lambda   = lambda h / (t q)
//! cov_p_lambda = -k p^2 y^k / (t q)
//! ```
//!
//! [`covariance_numeric`] inverts the summed per-layer matrices in exact
//! rational arithmetic and serves as the reference for the closed form.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `q` at or below this is treated as a singular information matrix.
pub const SINGULAR_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherKind {
    PerLayer,
    Summed,
    Averaged,
}

/// Symmetric 2x2 information over `(p, lambda)`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub matrix: [[f64; 2]; 2],
    pub kind: FisherKind,
}

impl FisherInfo {
    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymCov {
    pub var_p: f64,
    pub var_lambda: f64,
    pub cov_p_lambda: f64,
    pub q: f64,
    pub h: f64,
}

impl AsymCov {
    pub fn sd_p(&self) -> f64 {
        self.var_p.sqrt()
    }

    pub fn sd_lambda(&self) -> f64 {
        self.var_lambda.sqrt()
    }
}

fn check_point(p: f64, lambda: f64, t: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("absorption must lie in (0,1), got {p}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("intensity must be > 0, got {lambda}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("exposure must be > 0, got {t}")));
    }
    Ok(())
}

/// `(I_pp, I_p_lambda, I_lambda_lambda)` for 1-based `layer`, generic so the
/// same expression runs in `f64` and in exact rationals.
fn layer_entries<T>(layer: usize, p: &T, lambda: &T, t: &T) -> [T; 3]
where
    T: Clone + One + Zero + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + std::ops::Div<Output = T>,
{
    let y = T::one() - p.clone();
    let scale = lambda.clone() * t.clone();
    let survive = num_traits::pow(y.clone(), layer - 1);
    let mean = p.clone() * survive.clone() * scale.clone();
    // d/dp [p y^(i-1)] = y^(i-1) - (i-1) p y^(i-2)
    let d_shape = if layer == 1 {
        T::one()
    } else {
        let mut i_minus_1 = T::zero();
        for _ in 1..layer {
            i_minus_1 = i_minus_1 + T::one();
        }
        survive - i_minus_1 * p.clone() * num_traits::pow(y, layer - 2)
    };
    let d_p = scale * d_shape;
    let d_lambda = mean.clone() / lambda.clone();
    [
        d_p.clone() * d_p.clone() / mean.clone(),
        d_p * d_lambda.clone() / mean.clone(),
        d_lambda.clone() * d_lambda / mean,
    ]
}

/// Information carried by a single layer's count.
pub fn fisher_layer(layer: usize, p: f64, lambda: f64, t: f64) -> Result<FisherInfo> {
    check_point(p, lambda, t)?;
    if layer < 1 {
        return Err(Error::InvalidArgument("layer index is 1-based".into()));
    }
    let [pp, pl, ll] = layer_entries(layer, &p, &lambda, &t);
    Ok(FisherInfo {
        matrix: [[pp, pl], [pl, ll]],
        kind: FisherKind::PerLayer,
    })
}

/// Per-run information: the sum of the per-layer matrices.
pub fn fisher_summed(p: f64, lambda: f64, layers: usize, t: f64) -> Result<FisherInfo> {
    let mut matrix = [[0.0; 2]; 2];
    for i in 1..=layers {
        let m = fisher_layer(i, p, lambda, t)?.matrix;
        for r in 0..2 {
            for c in 0..2 {
                matrix[r][c] += m[r][c];
            }
        }
    }
    Ok(FisherInfo {
        matrix,
        kind: FisherKind::Summed,
    })
}

/// Layer-averaged information. Diagnostic only; covariances use the sum.
pub fn fisher_averaged(p: f64, lambda: f64, layers: usize, t: f64) -> Result<FisherInfo> {
    let summed = fisher_summed(p, lambda, layers, t)?;
    let k = layers as f64;
    Ok(FisherInfo {
        matrix: summed.matrix.map(|row| row.map(|v| v / k)),
        kind: FisherKind::Averaged,
    })
}

/// `(1 - y^k, y^(k-1))` through log-domain powers.
fn powers(p: f64, layers: usize) -> (f64, f64) {
    let log_y = (-p).ln_1p();
    let k = layers as f64;
    (-(k * log_y).exp_m1(), ((k - 1.0) * log_y).exp())
}

/// `q = (1 - y^k)^2 - k^2 p^2 y^(k-1)`, so that `det(I) = t^2 q / (y p^2)`.
///
/// Written as `(A - B)(A + B)` with `A = 1 - y^k` and `B = k p y^((k-1)/2)`.
/// `A - B` cancels badly for small `p`, so it is summed as
/// `p sum_j y^j (1 - y^((k-1-2j)/2))^2` over `j < (k-1)/2`, which pairs the
/// terms of `A / p = sum_j y^j` symmetrically about `y^((k-1)/2)`.
pub fn q_factor(p: f64, layers: usize) -> f64 {
    if layers < 2 {
        return 0.0;
    }
    let log_y = (-p).ln_1p();
    let (detected, _) = powers(p, layers);
    let k = layers as f64;
    let cross = k * p * (0.5 * (k - 1.0) * log_y).exp();
    let mut gap = 0.0;
    let mut j = 0usize;
    while 2 * j + 1 < layers {
        let half_exp = 0.5 * (k - 1.0 - 2.0 * j as f64);
        let d = (half_exp * log_y).exp_m1();
        gap += (j as f64 * log_y).exp() * d * d;
        j += 1;
    }
    p * gap * (detected + cross)
}

pub fn h_factor(p: f64, layers: usize) -> f64 {
    let (detected, y_km1) = powers(p, layers);
    let k = layers as f64;
    detected - k * k * p * p * y_km1
}

pub fn covariance_closed_form(p: f64, lambda: f64, layers: usize, t: f64) -> Result<AsymCov> {
    check_point(p, lambda, t)?;
    let q = if layers < 2 { 0.0 } else { q_factor(p, layers) };
    if !(q > SINGULAR_THRESHOLD) {
        return Err(Error::SingularInformation(format!(
            "q(p={p}, k={layers}) = {q:e}"
        )));
    }
    let h = h_factor(p, layers);
    let (detected, y_km1) = powers(p, layers);
    let y = 1.0 - p;
    let k = layers as f64;
    Ok(AsymCov {
        var_p: detected * y * p * p / (lambda * t * q),
        var_lambda: lambda * h / (t * q),
        cov_p_lambda: -k * p * p * y_km1 * y / (t * q),
        q,
        h,
    })
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite input")
}

fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Covariance by exact inversion of the summed per-layer information.
///
/// Inputs are taken as the exact rationals their `f64` values represent, so
/// the only rounding is the final conversion of each output.
pub fn covariance_numeric(p: f64, lambda: f64, layers: usize, t: f64) -> Result<AsymCov> {
    check_point(p, lambda, t)?;
    if layers < 1 {
        return Err(Error::InvalidArgument("need at least one layer".into()));
    }
    let (pe, le, te) = (exact(p), exact(lambda), exact(t));
    let mut sum = [BigRational::zero(), BigRational::zero(), BigRational::zero()];
    for i in 1..=layers {
        let entries = layer_entries(i, &pe, &le, &te);
        for (acc, e) in sum.iter_mut().zip(entries) {
            *acc += e;
        }
    }
    let [pp, pl, ll] = sum;
    let det = &pp * &ll - &pl * &pl;
    let scale = &pp * &ll;
    let relative_det = if scale.is_zero() {
        0.0
    } else {
        to_f64(&(&det / &scale)).abs()
    };
    if det.is_zero() || relative_det <= SINGULAR_THRESHOLD {
        return Err(Error::SingularInformation(format!(
            "summed information has relative determinant {relative_det:e} (k = {layers})"
        )));
    }
    debug_assert!(det.is_positive());

    // q = det y p^2 / t^2 and h = I_pp y p^2 / (lambda t)
    let y = BigRational::one() - &pe;
    let y_p2 = &y * &pe * &pe;
    let q = &det * &y_p2 / (&te * &te);
    let h = &pp * &y_p2 / (&le * &te);

    Ok(AsymCov {
        var_p: to_f64(&(&ll / &det)),
        var_lambda: to_f64(&(&pp / &det)),
        cov_p_lambda: to_f64(&(-(&pl) / &det)),
        q: to_f64(&q),
        h: to_f64(&h),
    })
}
