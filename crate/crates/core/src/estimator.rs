//! Maximum likelihood estimation of absorption probability and intensity.
//!
//! The likelihood depends on the data only through two per-run averages:
//! the total count `s` and the depth-weighted count `z`. Eliminating the
//! intensity from the score equations leaves a single polynomial in
//! `y = 1 - p`,
//!
//! ```text
//! f(y) = a y^(k+1) - b y^k + c y - d,
//! a = (k-1)s - z,  b = k s - z,  c = s + z,  d = z,
//! ```
//!
//! which always has a double root at `y = 1`. It has exactly one further root
//! in `(0, 1)` iff its inflection point `y_ip = b(k-1) / (a(k+1))` lies below 1.
//! When it does, `f` rises from `f(0) = -d` to a single maximum before `y_ip`
//! and then falls back to `f(1) = 0`, so the root is bracketed between 0 and
//! that maximum. The solver relies on this shape.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::CountsMatrix;

/// Default solver tolerance on the relative residual of `f`.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    /// Mean total count per run.
    pub total: f64,
    /// Mean of `sum_i (i-1) x_i` per run.
    pub depth: f64,
    pub runs: usize,
    pub layers: usize,
}

pub fn sufficient_stats(data: &CountsMatrix) -> SufficientStats {
    let totals = data.column_totals();
    let n = data.runs() as f64;
    let total = totals.iter().map(|&x| x as f64).sum::<f64>() / n;
    let depth = totals
        .iter()
        .enumerate()
        .map(|(i, &x)| i as f64 * x as f64)
        .sum::<f64>()
        / n;
    SufficientStats {
        total,
        depth,
        runs: data.runs(),
        layers: data.layers(),
    }
}

/// Coefficients of the reduced score polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub layers: usize,
}

impl PolyCoeffs {
    pub fn eval(&self, y: f64) -> f64 {
        let k = self.layers as i32;
        let yk = y.powi(k);
        self.a * yk * y - self.b * yk + self.c * y - self.d
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let k = self.layers as f64;
        let ykm1 = y.powi(self.layers as i32 - 1);
        self.a * (k + 1.0) * ykm1 * y - self.b * k * ykm1 + self.c
    }

    /// Sum of absolute term magnitudes at `y`; the scale for residuals.
    pub fn magnitude(&self, y: f64) -> f64 {
        let yk = y.abs().powi(self.layers as i32);
        self.a.abs() * yk * y.abs() + self.b.abs() * yk + self.c.abs() * y.abs() + self.d.abs()
    }

    pub fn inflection_point(&self) -> f64 {
        let k = self.layers as f64;
        self.b * (k - 1.0) / (self.a * (k + 1.0))
    }
}

pub fn poly_coeffs(stats: &SufficientStats) -> Result<PolyCoeffs> {
    if stats.layers < 2 {
        return Err(Error::NotIdentifiable);
    }
    if !(stats.total > 0.0) {
        return Err(Error::NoDetections);
    }
    let k = stats.layers as f64;
    let (s, z) = (stats.total, stats.depth);
    Ok(PolyCoeffs {
        a: -s - z + k * s,
        b: -z + k * s,
        c: z + s,
        d: z,
        layers: stats.layers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootGate {
    UniqueRoot { y_ip: f64 },
    NoRoot { y_ip: f64 },
}

impl RootGate {
    pub fn y_ip(&self) -> f64 {
        match *self {
            RootGate::UniqueRoot { y_ip } | RootGate::NoRoot { y_ip } => y_ip,
        }
    }

    pub fn has_root(&self) -> bool {
        matches!(self, RootGate::UniqueRoot { .. })
    }
}

/// Decides whether `f` has a root in `(0, 1)`.
pub fn root_gate(coeffs: &PolyCoeffs) -> Result<RootGate> {
    if !(coeffs.a > 0.0) {
        return Err(invalid(format!(
            "leading coefficient must be > 0, got {}",
            coeffs.a
        )));
    }
    if !(coeffs.b > 0.0) {
        return Err(invalid(format!("coefficient b must be > 0, got {}", coeffs.b)));
    }
    let y_ip = coeffs.inflection_point();
    Ok(if y_ip < 1.0 {
        RootGate::UniqueRoot { y_ip }
    } else {
        RootGate::NoRoot { y_ip }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolution {
    pub y: f64,
    pub y_ip: f64,
    /// Location of the interior maximum of `f`; the upper end of the bracket.
    pub y_max: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Finds the interior root of `f`.
///
/// `tol` bounds `|f(y)|` relative to the magnitude of the polynomial's terms
/// at `y`. The maximum of `f` is located by bisection on `f'`, which falls
/// monotonically through zero on `(0, y_ip)`. The root is then bisected on
/// `(0, y_max)` and polished with Newton steps that stay inside the bracket.
pub fn solve_y(coeffs: &PolyCoeffs, tol: f64) -> Result<RootSolution> {
    let gate = root_gate(coeffs)?;
    let y_ip = gate.y_ip();
    if !gate.has_root() {
        return Err(Error::NoInteriorRoot { y_ip });
    }
    if coeffs.d == 0.0 {
        return Err(Error::BoundaryEstimate);
    }

    let mut iterations = 0;

    // f' > 0 at 0 and f' < 0 at y_ip
    let (mut lo, mut hi) = (0.0_f64, y_ip);
    while iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if coeffs.derivative(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y_max = lo;

    let f_hi = coeffs.eval(y_max);
    if !(f_hi > 0.0) || !(coeffs.eval(0.0) < 0.0) {
        return Err(Error::NumericFailure(format!(
            "no sign change on (0, {y_max:.17}): f(0) = {}, f(y_max) = {f_hi}, coefficients {coeffs:?}",
            coeffs.eval(0.0)
        )));
    }

    let (mut lo, mut hi) = (0.0_f64, y_max);
    let mut y = 0.5 * (lo + hi);
    while iterations < MAX_ITERATIONS {
        y = 0.5 * (lo + hi);
        if y <= lo || y >= hi {
            break;
        }
        iterations += 1;
        let fy = coeffs.eval(y);
        if fy == 0.0 {
            lo = y;
            hi = y;
            break;
        }
        if fy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
    }

    let mut best = y;
    let mut best_f = coeffs.eval(y).abs();
    for _ in 0..4 {
        if best_f == 0.0 || iterations >= MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let step = coeffs.eval(best) / coeffs.derivative(best);
        let next = best - step;
        if !(next >= lo && next <= hi) {
            break;
        }
        let next_f = coeffs.eval(next).abs();
        if next_f >= best_f {
            break;
        }
        best = next;
        best_f = next_f;
    }

    if best_f > tol * coeffs.magnitude(best) {
        return Err(Error::NumericFailure(format!(
            "residual {best_f:e} at y = {best} exceeds tolerance {tol:e} after {iterations} iterations"
        )));
    }

    Ok(RootSolution {
        y: best,
        y_ip,
        y_max,
        iterations,
        residual: best_f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MleWarning {
    /// Every detection is in layer 1; reported estimate is `p = 1`.
    BoundaryEstimate,
}

impl MleWarning {
    pub fn code(&self) -> &'static str {
        match self {
            MleWarning::BoundaryEstimate => "BOUNDARY_ESTIMATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub p_hat: f64,
    pub lambda_hat: f64,
    pub y_hat: f64,
    pub y_ip: f64,
    pub solver_iters: usize,
    /// `|f(y_hat)|`.
    pub residual: f64,
    pub coeffs: PolyCoeffs,
    pub stats: SufficientStats,
    /// Almost-sure limit of the gate ratio at the estimated absorption.
    pub gate_limit: f64,
    pub warnings: Vec<MleWarning>,
}

impl MleResult {
    pub fn is_boundary(&self) -> bool {
        self.warnings.contains(&MleWarning::BoundaryEstimate)
    }
}

/// Maximum likelihood estimate from per-run layer counts.
pub fn mle(data: &CountsMatrix, exposure: f64) -> Result<MleResult> {
    if !(exposure.is_finite() && exposure > 0.0) {
        return Err(invalid(format!("exposure must be > 0, got {exposure}")));
    }
    let stats = sufficient_stats(data);
    let coeffs = poly_coeffs(&stats)?;
    let k = stats.layers;

    if !(coeffs.a > 0.0) {
        // everything in the last layer
        return Err(Error::NoInteriorRoot { y_ip: f64::INFINITY });
    }

    if coeffs.d == 0.0 {
        return Ok(MleResult {
            p_hat: 1.0,
            lambda_hat: stats.total / exposure,
            y_hat: 0.0,
            y_ip: coeffs.inflection_point(),
            solver_iters: 0,
            residual: 0.0,
            coeffs,
            stats,
            gate_limit: gate_ratio_limit(1.0, k),
            warnings: vec![MleWarning::BoundaryEstimate],
        });
    }

    let root = solve_y(&coeffs, DEFAULT_TOLERANCE)?;
    let y = root.y;
    let p_hat = 1.0 - y;
    let detected_fraction = -(k as f64 * y.ln()).exp_m1();
    let lambda_hat = stats.total / (exposure * detected_fraction);

    Ok(MleResult {
        p_hat,
        lambda_hat,
        y_hat: y,
        y_ip: root.y_ip,
        solver_iters: root.iterations,
        residual: root.residual,
        coeffs,
        stats,
        gate_limit: gate_ratio_limit(p_hat, k),
        warnings: Vec::new(),
    })
}

/// Per-run score `(d/dlambda, d/dp)` of the log-likelihood, divided by `n`.
pub fn score(absorption: f64, intensity: f64, stats: &SufficientStats, exposure: f64) -> (f64, f64) {
    let (p, lambda, t) = (absorption, intensity, exposure);
    let (s, z) = (stats.total, stats.depth);
    let k = stats.layers as f64;
    let y = 1.0 - p;
    let yk = y.powi(stats.layers as i32);
    let d_lambda = (s - lambda * t * (1.0 - yk)) / lambda;
    let d_p = (y * (s + z) - z - lambda * t * (k * yk - k * yk * y)) / (p * y);
    (d_lambda, d_p)
}

/// Log-likelihood of the data, without the `-sum log x_ij!` term.
///
/// The omitted term does not depend on the parameters, so maximizers and
/// likelihood differences are unaffected.
pub fn log_likelihood(absorption: f64, intensity: f64, data: &CountsMatrix, exposure: f64) -> Result<f64> {
    if !(absorption > 0.0 && absorption < 1.0) {
        return Err(Error::Domain(format!(
            "absorption must lie in (0,1), got {absorption}"
        )));
    }
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::Domain(format!("intensity must be > 0, got {intensity}")));
    }
    let n = data.runs() as f64;
    let log_p = absorption.ln();
    let log_y = (-absorption).ln_1p();
    let log_scale = (intensity * exposure).ln();
    let mut mean = absorption * intensity * exposure;
    let mut ll = 0.0;
    for (i, &x) in data.column_totals().iter().enumerate() {
        ll -= n * mean;
        if x > 0 {
            ll += x as f64 * (log_p + i as f64 * log_y + log_scale);
        }
        mean *= 1.0 - absorption;
    }
    Ok(ll)
}

/// Almost-sure limit of the gate ratio `b(k-1) / (a(k+1))` as runs grow.
///
/// Built from the exact expectations of the per-run total and depth-weighted
/// counts, in units of the incident mean (which cancels). Always below 1 for
/// `k > 1` and `0 < p <= 1`, which is why the gate eventually passes.
pub fn gate_ratio_limit(absorption: f64, layers: usize) -> f64 {
    let k = layers as f64;
    let y = 1.0 - absorption;
    let mut expected_total = 0.0;
    let mut expected_depth = 0.0;
    let mut weight = absorption;
    for i in 0..layers {
        expected_total += weight;
        expected_depth += i as f64 * weight;
        weight *= y;
    }
    let a = (k - 1.0) * expected_total - expected_depth;
    let b = k * expected_total - expected_depth;
    (k - 1.0) * b / ((k + 1.0) * a)
}
