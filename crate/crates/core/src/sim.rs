//! Synthetic count data for a stack of absorbing layers.
//!
//! Two generators are provided. [`simulate_counts`] draws each layer count
//! directly as an independent Poisson variate with the thinned mean.
//! [`simulate_event_level`] draws the number of incident neutrons and walks
//! each one through the stack. Both describe the same distribution, which the
//! test suite checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampling::{poisson, run_rng};

/// Largest incident count per run the event-level walker will simulate.
pub const MAX_INCIDENT_PER_RUN: f64 = 2_147_483_647.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Number of absorbing layers.
    pub layers: usize,
    /// Exposure time per run, seconds.
    pub exposure: f64,
    /// Atomic density of the absorber, m^-3.
    pub atomic_density: f64,
    /// Absorber thickness per layer, m.
    pub layer_thickness: f64,
}

impl DetectorConfig {
    pub fn new(layers: usize, exposure: f64, atomic_density: f64, layer_thickness: f64) -> Result<Self> {
        let cfg = DetectorConfig {
            layers,
            exposure,
            atomic_density,
            layer_thickness,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(invalid("detector needs at least one layer"));
        }
        for (name, v) in [
            ("exposure", self.exposure),
            ("atomic_density", self.atomic_density),
            ("layer_thickness", self.layer_thickness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_layers(self, layers: usize) -> Self {
        DetectorConfig { layers, ..self }
    }
}

/// Absorption probability per layer and beam intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub absorption: f64,
    /// Incident neutrons per second.
    pub intensity: f64,
}

impl BeamParams {
    pub fn new(absorption: f64, intensity: f64) -> Result<Self> {
        let beam = BeamParams {
            absorption,
            intensity,
        };
        beam.validate()?;
        Ok(beam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.absorption) {
            return Err(invalid(format!(
                "absorption probability must lie in [0,1], got {}",
                self.absorption
            )));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(invalid(format!(
                "intensity must be finite and >= 0, got {}",
                self.intensity
            )));
        }
        Ok(())
    }

    /// Expected count at 1-based `layer` over `exposure` seconds.
    pub fn layer_mean(&self, layer: usize, exposure: f64) -> f64 {
        debug_assert!(layer >= 1);
        let survive = (1.0 - self.absorption).powi(layer as i32 - 1);
        self.absorption * survive * self.intensity * exposure
    }

    pub fn layer_means(&self, layers: usize, exposure: f64) -> Vec<f64> {
        (1..=layers).map(|i| self.layer_mean(i, exposure)).collect()
    }
}

/// Detection counts, one row per run and one column per layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsMatrix {
    layers: usize,
    data: Vec<u64>,
}

impl CountsMatrix {
    pub fn zeros(runs: usize, layers: usize) -> Self {
        CountsMatrix {
            layers,
            data: vec![0; runs * layers],
        }
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| invalid("counts matrix needs at least one run"))?;
        let layers = first.as_ref().len();
        if layers == 0 {
            return Err(invalid("counts matrix needs at least one layer"));
        }
        let mut data = Vec::with_capacity(rows.len() * layers);
        for (j, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != layers {
                return Err(invalid(format!(
                    "run {} has {} entries, expected {layers}",
                    j + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(CountsMatrix { layers, data })
    }

    pub fn runs(&self) -> usize {
        self.data.len() / self.layers
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn row(&self, run: usize) -> &[u64] {
        &self.data[run * self.layers..(run + 1) * self.layers]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.data.chunks_exact(self.layers)
    }

    /// Count at 0-based `run` and 0-based `layer`.
    pub fn get(&self, run: usize, layer: usize) -> u64 {
        self.data[run * self.layers + layer]
    }

    /// Per-layer totals summed over runs.
    pub fn column_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.layers];
        for row in self.rows() {
            for (t, &x) in totals.iter_mut().zip(row) {
                *t += x;
            }
        }
        totals
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.rows().map(<[u64]>::to_vec).collect()
    }

    fn row_mut(&mut self, run: usize) -> &mut [u64] {
        &mut self.data[run * self.layers..(run + 1) * self.layers]
    }
}

/// Full bookkeeping from the event-level simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub incident: Vec<u64>,
    pub absorbed: CountsMatrix,
    pub transmitted: Vec<u64>,
}

impl SimTrace {
    /// True when every run satisfies incident = absorbed + transmitted.
    pub fn is_conserved(&self) -> bool {
        self.absorbed
            .rows()
            .zip(self.incident.iter().zip(&self.transmitted))
            .all(|(row, (&inc, &tr))| row.iter().sum::<u64>() + tr == inc)
    }
}

fn check_inputs(config: &DetectorConfig, beam: &BeamParams, runs: usize) -> Result<()> {
    config.validate()?;
    beam.validate()?;
    if runs < 1 {
        return Err(invalid("run count must be >= 1"));
    }
    Ok(())
}

/// Draws each layer count independently from its thinned Poisson law.
pub fn simulate_counts(
    config: &DetectorConfig,
    beam: &BeamParams,
    runs: usize,
    seed: u64,
) -> Result<CountsMatrix> {
    check_inputs(config, beam, runs)?;
    let means = beam.layer_means(config.layers, config.exposure);
    let mut counts = CountsMatrix::zeros(runs, config.layers);
    for j in 0..runs {
        let mut rng = run_rng(seed, j as u64);
        for (x, &m) in counts.row_mut(j).iter_mut().zip(&means) {
            *x = poisson(&mut rng, m);
        }
    }
    Ok(counts)
}

/// Draws the incident count and passes each neutron layer by layer.
pub fn simulate_event_level(
    config: &DetectorConfig,
    beam: &BeamParams,
    runs: usize,
    seed: u64,
) -> Result<SimTrace> {
    check_inputs(config, beam, runs)?;
    let incident_mean = beam.intensity * config.exposure;
    if incident_mean > MAX_INCIDENT_PER_RUN {
        return Err(invalid(format!(
            "expected incident count {incident_mean} exceeds the event-level cap {MAX_INCIDENT_PER_RUN}"
        )));
    }

    let mut incident = Vec::with_capacity(runs);
    let mut transmitted = Vec::with_capacity(runs);
    let mut absorbed = CountsMatrix::zeros(runs, config.layers);
    for j in 0..runs {
        let mut rng = run_rng(seed, j as u64);
        let arrivals = poisson(&mut rng, incident_mean);
        let row = absorbed.row_mut(j);
        let mut passed = 0u64;
        'neutron: for _ in 0..arrivals {
            for slot in row.iter_mut() {
                if rng.random_bool(beam.absorption) {
                    *slot += 1;
                    continue 'neutron;
                }
            }
            passed += 1;
        }
        incident.push(arrivals);
        transmitted.push(passed);
    }
    Ok(SimTrace {
        incident,
        absorbed,
        transmitted,
    })
}

pub fn trace_to_counts(trace: &SimTrace) -> CountsMatrix {
    trace.absorbed.clone()
}
