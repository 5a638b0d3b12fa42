//! Monte Carlo studies over the full estimation pipeline.
//!
//! Replicate `r` of an experiment simulates its data from
//! `substream_seed(seed, r)`. Every grid cell of a sweep reuses the same
//! replicate seeds, so neighbouring cells see common random numbers and their
//! differences are not drowned in replicate noise. Results are reduced in
//! replicate order, so serial and parallel runs produce identical numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampling::substream_seed;
use crate::sim::{simulate_counts, BeamParams, DetectorConfig};
use crate::wavelength::{estimate_wavelength, mu_from_p, CrossSectionModel, WavelengthEstimate};

/// Default Monte Carlo replicate count.
pub const DEFAULT_REPLICATES: usize = 2000;

/// Minimum replicates for a coverage experiment.
pub const MIN_COVERAGE_REPLICATES: usize = 100;

/// Everything one pipeline replicate needs, except its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub detector: DetectorConfig,
    pub beam: BeamParams,
    pub xsec: CrossSectionModel,
    pub runs: usize,
    pub alpha: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.beam.validate()?;
        self.xsec.validate()?;
        if self.runs < 1 {
            return Err(invalid("run count must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// True wavelength implied by the beam's absorption and `chi_hat`.
    pub fn true_wavelength(&self) -> Result<f64> {
        mu_from_p(self.beam.absorption, self.xsec.chi)
    }

    /// Simulates and estimates replicate `index` of an experiment seeded by `seed`.
    pub fn replicate(&self, seed: u64, index: u64) -> Result<WavelengthEstimate> {
        let counts = simulate_counts(&self.detector, &self.beam, self.runs, substream_seed(seed, index))?;
        estimate_wavelength(&counts, &self.detector, &self.xsec, self.alpha)
    }

    fn replicates(&self, seed: u64, count: usize, parallel: bool) -> Vec<Result<WavelengthEstimate>> {
        if parallel {
            (0..count as u64)
                .into_par_iter()
                .map(|r| self.replicate(seed, r))
                .collect()
        } else {
            (0..count as u64).map(|r| self.replicate(seed, r)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Layers,
    Intensity,
    Runs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub base: Scenario,
    pub replicates: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(invalid("sweep grid is empty"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sweep grid must be strictly increasing"));
        }
        if self.replicates < 1 {
            return Err(invalid("replicates must be >= 1"));
        }
        for &v in &self.grid {
            match self.variable {
                SweepVariable::Layers | SweepVariable::Runs => {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return Err(invalid(format!("grid value {v} is not a positive integer")));
                    }
                }
                SweepVariable::Intensity => {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(invalid(format!("intensity grid value {v} must be >= 0")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Base scenario with the swept variable set to `value`.
    pub fn scenario_at(&self, value: f64) -> Scenario {
        let mut s = self.base;
        match self.variable {
            SweepVariable::Layers => s.detector = s.detector.with_layers(value as usize),
            SweepVariable::Intensity => s.beam.intensity = value,
            SweepVariable::Runs => s.runs = value as usize,
        }
        s
    }
}

/// Replicate means at one grid value. Means are NaN when every replicate failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub s_p_mean: f64,
    pub s_chi_mean: f64,
    pub mu_hat_mean: f64,
    pub ci_halfwidth_mean: f64,
    pub evaluated: usize,
    pub failures: usize,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .grid
        .iter()
        .map(|&value| {
            let scenario = spec.scenario_at(value);
            let results = scenario.replicates(spec.seed, spec.replicates, spec.parallel);
            let mut sums = [0.0_f64; 4];
            let mut evaluated = 0usize;
            for est in results.iter().flatten() {
                sums[0] += est.s_p;
                sums[1] += est.s_chi;
                sums[2] += est.mu_hat;
                sums[3] += est.half_width();
                evaluated += 1;
            }
            let mean = |x: f64| {
                if evaluated == 0 {
                    f64::NAN
                } else {
                    x / evaluated as f64
                }
            };
            SweepRow {
                grid_value: value,
                s_p_mean: mean(sums[0]),
                s_chi_mean: mean(sums[1]),
                mu_hat_mean: mean(sums[2]),
                ci_halfwidth_mean: mean(sums[3]),
                evaluated,
                failures: spec.replicates - evaluated,
            }
        })
        .collect())
}

/// First grid value whose mean counting term falls below the systematic term.
pub fn crossover(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .find(|r| r.s_p_mean < r.s_chi_mean)
        .map(|r| r.grid_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub scenario: Scenario,
    pub replicates: usize,
    pub seed: u64,
    /// Treat `chi_hat` as exact and drop the systematic term from the interval.
    pub chi_fixed: bool,
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub nominal: f64,
    pub empirical: f64,
    pub replicates: usize,
    pub evaluated: usize,
    pub failures: usize,
    pub mc_stderr: f64,
}

/// Fraction of replicate intervals that contain the true wavelength.
///
/// Replicates whose estimation fails are excluded and counted in `failures`.
pub fn coverage_experiment(spec: &CoverageSpec) -> Result<CoverageReport> {
    let mut scenario = spec.scenario;
    scenario.validate()?;
    if spec.replicates < MIN_COVERAGE_REPLICATES {
        return Err(invalid(format!(
            "coverage needs at least {MIN_COVERAGE_REPLICATES} replicates, got {}",
            spec.replicates
        )));
    }
    if spec.chi_fixed {
        scenario.xsec = scenario.xsec.with_fixed_chi();
    }
    let truth = scenario.true_wavelength()?;
    let results = scenario.replicates(spec.seed, spec.replicates, spec.parallel);

    let mut covered = 0usize;
    let mut evaluated = 0usize;
    for est in results.iter().flatten() {
        evaluated += 1;
        if est.covers(truth) {
            covered += 1;
        }
    }
    let empirical = if evaluated == 0 {
        0.0
    } else {
        covered as f64 / evaluated as f64
    };
    Ok(CoverageReport {
        nominal: 1.0 - scenario.alpha,
        empirical,
        replicates: spec.replicates,
        evaluated,
        failures: spec.replicates - evaluated,
        mc_stderr: (empirical * (1.0 - empirical) / spec.replicates as f64).sqrt(),
    })
}
