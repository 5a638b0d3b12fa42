//! Simulation and estimation for multilayer neutron detectors.
//!
//! A beam of neutrons with Poisson arrivals passes a stack of identical
//! absorbing layers. Each layer absorbs (and detects) a neutron with
//! probability `p`, so layer `i` sees an independent Poisson count with mean
//! `p (1-p)^(i-1) lambda t`. From repeated runs the crate estimates
//! `(p, lambda)` by maximum likelihood, gives the estimator's asymptotic
//! covariance, converts `p` into a neutron wavelength with a delta-method
//! confidence interval, and runs Monte Carlo studies of the whole pipeline.
//!
//! Modules:
//! - [`sim`]: count generators, per layer and per neutron.
//! - [`estimator`]: sufficient statistics, root gate, solver, likelihood.
//! - [`asymptotics`]: Fisher information and covariance.
//! - [`wavelength`]: cross-section model, delta terms, normal quantile, intervals.
//! - [`harness`]: parameter sweeps and coverage experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod sampling;
pub mod sim;
pub mod wavelength;

pub use asymptotics::{
    covariance_closed_form, covariance_numeric, fisher_layer, AsymCov, FisherInfo, FisherKind,
};
pub use error::{Error, Result, Stage};
pub use estimator::{
    gate_ratio_limit, log_likelihood, mle, poly_coeffs, root_gate, solve_y, sufficient_stats, MleResult,
    MleWarning, PolyCoeffs, RootGate, SufficientStats,
};
pub use harness::{
    coverage_experiment, crossover, run_sweep, CoverageReport, CoverageSpec, Scenario, SweepRow, SweepSpec,
    SweepVariable,
};
pub use sim::{
    simulate_counts, simulate_event_level, trace_to_counts, BeamParams, CountsMatrix, DetectorConfig,
    SimTrace,
};
pub use wavelength::{
    confidence_interval, delta_terms, estimate_wavelength, mu_from_p, normal_quantile, p_from_mu,
    CrossSectionModel, DeltaTerms, WavelengthEstimate, ANGSTROM,
};
