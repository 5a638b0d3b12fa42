//! CSV interchange: UTF-8, comma-delimited, `\n` line endings, header row.

use std::io::{Read, Write};

use mlnd_core::harness::{CoverageReport, SweepRow};
use mlnd_core::CountsMatrix;

use crate::error::CliError;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn write_failed(err: csv::Error) -> CliError {
    CliError::Io(format!("writing CSV: {err}"))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(format!("writing CSV: {e}")))
}

pub fn counts_header(layers: usize) -> Vec<String> {
    (1..=layers).map(|i| format!("layer_{i}")).collect()
}

pub fn write_counts<W: Write>(data: &CountsMatrix, out: W) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(counts_header(data.layers()))
        .map_err(write_failed)?;
    for row in data.rows() {
        w.write_record(row.iter().map(u64::to_string))
            .map_err(write_failed)?;
    }
    finish(w)
}

/// Parses a counts table. Errors carry the 1-based line number.
pub fn read_counts<R: Read>(input: R) -> Result<CountsMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("line 1: {e}")))?
        .clone();
    let layers = header.len();
    if layers == 0 || header.iter().all(str::is_empty) {
        return Err(CliError::Input("line 1: missing header row".into()));
    }
    let expected = counts_header(layers);
    if header
        .iter()
        .map(str::trim)
        .ne(expected.iter().map(String::as_str))
    {
        return Err(CliError::Input(format!(
            "line 1: header must be `{}`, got `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != layers {
            return Err(CliError::Input(format!(
                "line {line}: expected {layers} fields, got {}",
                record.len()
            )));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                cell.trim().parse::<u64>().map_err(|_| {
                    CliError::Input(format!(
                        "line {line}, layer_{}: `{cell}` is not a nonnegative integer",
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<u64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("counts table has a header but no runs".into()));
    }
    CountsMatrix::from_rows(&rows).map_err(|e| CliError::Input(e.to_string()))
}

pub const COVERAGE_HEADER: [&str; 5] = ["replicates", "nominal", "empirical", "mc_stderr", "failures"];

pub fn write_coverage<W: Write>(report: &CoverageReport, out: W) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(COVERAGE_HEADER).map_err(write_failed)?;
    w.write_record([
        report.replicates.to_string(),
        report.nominal.to_string(),
        report.empirical.to_string(),
        report.mc_stderr.to_string(),
        report.failures.to_string(),
    ])
    .map_err(write_failed)?;
    finish(w)
}

pub const SWEEP_HEADER: [&str; 5] = [
    "grid_value",
    "s_p_mean",
    "s_chi_mean",
    "mu_hat_mean",
    "ci_halfwidth_mean",
];

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(SWEEP_HEADER).map_err(write_failed)?;
    for r in rows {
        w.write_record([
            r.grid_value.to_string(),
            r.s_p_mean.to_string(),
            r.s_chi_mean.to_string(),
            r.mu_hat_mean.to_string(),
            r.ci_halfwidth_mean.to_string(),
        ])
        .map_err(write_failed)?;
    }
    finish(w)
}
