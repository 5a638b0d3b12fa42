//! Subcommand bodies. Each returns the bytes to emit, or an error that
//! decides the exit code. Estimation failures of `estimate` and `wavelength`
//! still produce a JSON document naming the failure.

use std::path::Path;

use mlnd_core::harness::{coverage_experiment, run_sweep, CoverageSpec, SweepSpec, SweepVariable};
use mlnd_core::{estimate_wavelength, mle, simulate_counts, CountsMatrix, MleResult, ANGSTROM};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table;

/// Output of a subcommand, plus the error to report once it is written.
pub struct Emitted {
    pub body: Vec<u8>,
    pub error: Option<CliError>,
}

impl Emitted {
    fn ok(body: Vec<u8>) -> Self {
        Emitted { body, error: None }
    }

    fn json(value: &Value, error: Option<CliError>) -> Self {
        let mut body = serde_json::to_vec_pretty(value).expect("JSON value serializes");
        body.push(b'\n');
        Emitted { body, error }
    }
}

fn read_counts_file(path: &Path) -> Result<CountsMatrix, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    table::read_counts(file).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn error_json(err: &mlnd_core::Error) -> Value {
    let mut body = json!({ "code": err.code(), "message": err.to_string() });
    if let Some(stage) = err.stage() {
        body["stage"] = json!(stage.to_string());
    }
    body
}

/// Rounds to four significant figures for display.
pub fn four_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.3e}").parse().expect("formatted float parses")
}

pub fn simulate(
    config: &RunConfig,
    seed: u64,
    runs: Option<usize>,
    as_json: bool,
) -> Result<Emitted, CliError> {
    let detector = config.detector()?;
    let beam = config.beam()?;
    let data = simulate_counts(&detector, &beam, runs.unwrap_or(config.n), seed)?;
    if as_json {
        return Ok(Emitted::json(&json!({ "rows": data.to_rows() }), None));
    }
    let mut body = Vec::new();
    table::write_counts(&data, &mut body)?;
    Ok(Emitted::ok(body))
}

fn estimate_json(fit: &MleResult) -> Value {
    json!({
        "p_hat": fit.p_hat,
        "lambda_hat": fit.lambda_hat,
        "y_ip": fit.y_ip,
        "residual": fit.residual,
        "solver_iters": fit.solver_iters,
        "warnings": fit.warnings.iter().map(|w| w.code()).collect::<Vec<_>>(),
    })
}

pub fn estimate(counts: &Path, exposure: f64) -> Result<Emitted, CliError> {
    let data = read_counts_file(counts)?;
    match mle(&data, exposure) {
        Ok(fit) if fit.is_boundary() => {
            // reported, but not a usable interior estimate
            let err = mlnd_core::Error::BoundaryEstimate;
            let mut body = estimate_json(&fit);
            body["error"] = error_json(&err);
            Ok(Emitted::json(&body, Some(CliError::Estimation(err))))
        }
        Ok(fit) => Ok(Emitted::json(&estimate_json(&fit), None)),
        Err(err) => match CliError::from_core(err.clone()) {
            input @ CliError::Input(_) => Err(input),
            estimation => Ok(Emitted::json(
                &json!({ "error": error_json(&err) }),
                Some(estimation),
            )),
        },
    }
}

pub fn wavelength(counts: &Path, config: &RunConfig, alpha: Option<f64>) -> Result<Emitted, CliError> {
    let data = read_counts_file(counts)?;
    let detector = config.detector()?;
    if data.layers() != detector.layers {
        return Err(CliError::Input(format!(
            "{}: {} layers in the counts table but {} in the config",
            counts.display(),
            data.layers(),
            detector.layers
        )));
    }
    let xsec = config.xsec()?;
    let alpha = alpha.unwrap_or(config.alpha);
    match estimate_wavelength(&data, &detector, &xsec, alpha) {
        Ok(est) => Ok(Emitted::json(
            &json!({
                "mu_hat_angstrom": four_sig(est.mu_hat / ANGSTROM),
                "ci_angstrom": [four_sig(est.ci[0] / ANGSTROM), four_sig(est.ci[1] / ANGSTROM)],
                "s_p": est.s_p,
                "s_chi": est.s_chi,
                "gamma": est.gamma,
                "alpha": est.alpha,
                "mu_hat_m": est.mu_hat,
                "ci_m": est.ci,
            }),
            None,
        )),
        Err(err) => match CliError::from_core(err.clone()) {
            input @ CliError::Input(_) => Err(input),
            estimation => Ok(Emitted::json(
                &json!({ "error": error_json(&err) }),
                Some(estimation),
            )),
        },
    }
}

pub struct CoverageArgs {
    pub seed: u64,
    pub replicates: Option<usize>,
    pub alpha: Option<f64>,
    pub chi_fixed: bool,
    pub as_json: bool,
}

pub fn coverage(config: &RunConfig, args: &CoverageArgs) -> Result<Emitted, CliError> {
    let mut scenario = config.scenario()?;
    if let Some(alpha) = args.alpha {
        scenario.alpha = alpha;
    }
    let report = coverage_experiment(&CoverageSpec {
        scenario,
        replicates: args.replicates.unwrap_or(config.replicates),
        seed: args.seed,
        chi_fixed: args.chi_fixed,
        parallel: true,
    })?;
    if args.as_json {
        return Ok(Emitted::json(
            &serde_json::to_value(report).expect("report serializes"),
            None,
        ));
    }
    let mut body = Vec::new();
    table::write_coverage(&report, &mut body)?;
    Ok(Emitted::ok(body))
}

/// Parses `a,b,c` or an inclusive integer range `a..b`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Input(format!("--grid `{text}`: {what}"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| bad("range ends must be integers"))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|_| bad("range ends must be integers"))?;
        if lo > hi {
            return Err(bad("empty range"));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{}` is not a number", v.trim())))
        })
        .collect()
}

pub struct SweepArgs<'a> {
    pub seed: u64,
    pub variable: SweepVariable,
    pub grid: &'a str,
    pub replicates: Option<usize>,
    pub as_json: bool,
}

pub fn sweep(config: &RunConfig, args: &SweepArgs<'_>) -> Result<Emitted, CliError> {
    let rows = run_sweep(&SweepSpec {
        variable: args.variable,
        grid: parse_grid(args.grid)?,
        base: config.scenario()?,
        replicates: args.replicates.unwrap_or(config.replicates),
        seed: args.seed,
        parallel: true,
    })?;
    if args.as_json {
        return Ok(Emitted::json(
            &serde_json::to_value(&rows).expect("rows serialize"),
            None,
        ));
    }
    let mut body = Vec::new();
    table::write_sweep(&rows, &mut body)?;
    Ok(Emitted::ok(body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("5,10").unwrap(), vec![5.0, 10.0]);
        assert_eq!(parse_grid("2..4").unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(parse_grid("1e4, 1e5").unwrap(), vec![1e4, 1e5]);
        assert!(parse_grid("4..2").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1.5..3").is_err());
    }

    #[test]
    fn significant_figures() {
        assert_eq!(four_sig(2.394644929390781), 2.395);
        assert_eq!(four_sig(3.387987527303242), 3.388);
        assert_eq!(four_sig(0.000123456), 0.0001235);
        assert_eq!(four_sig(0.0), 0.0);
    }
}
