#![allow(dead_code)]

use mlnd_core::{log_likelihood, mle, simulate_counts, BeamParams, CountsMatrix, DetectorConfig, MleResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const GRID: usize = 2000;
const COARSE: usize = 200;
const COARSE_SPAN: f64 = 1e4;

/// Random small instance whose estimate is interior.
pub struct Instance {
    pub data: CountsMatrix,
    pub fit: MleResult,
    pub exposure: f64,
}

/// Draws instances until `count` of them have an interior estimate.
pub fn interior_instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let layers = rng.random_range(2..=6);
        let runs = rng.random_range(1..=5);
        let p = rng.random_range(0.2..0.6);
        let scale = rng.random_range(20.0..200.0);
        let exposure = 1.0;
        let detector = DetectorConfig::new(layers, exposure, 1e29, 1e-6).unwrap();
        let beam = BeamParams::new(p, scale).unwrap();
        let data = simulate_counts(&detector, &beam, runs, rng.random()).unwrap();
        if let Ok(fit) = mle(&data, exposure) {
            if !fit.is_boundary() {
                out.push(Instance { data, fit, exposure });
            }
        }
    }
    out
}

pub struct GridOracle {
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl GridOracle {
    /// `p` at cell centres of (0,1); `lambda` log-spaced upward from `s/t`.
    ///
    /// For any `p` the profile maximizer `s / (t (1 - (1-p)^k))` exceeds `s/t`,
    /// so the lower end is exact. Along the likelihood ridge `log lambda`
    /// moves by `k y^(k-1) / (1 - y^k)` per unit of `p`. If a `lambda` cell is
    /// much wider or narrower than the ridge's shift per `p` cell, the discrete
    /// argmax slides along the ridge by several cells, so the span is chosen
    /// to match that slope at the maximum of a coarse pass over the same
    /// likelihood, widened if needed to cover the profile maximizer there.
    pub fn for_data(data: &CountsMatrix, exposure: f64) -> Self {
        let k = data.layers() as i32;
        let lo = data.column_totals().iter().sum::<u64>() as f64 / (data.runs() as f64 * exposure);
        let coarse = GridOracle::spanning(lo, COARSE_SPAN, COARSE);
        let (ci, _) = coarse.argmax(data, exposure);
        let y = 1.0 - coarse.p[ci];
        let detected = 1.0 - y.powi(k);
        let slope = k as f64 * y.powi(k - 1) / detected;
        let span = slope.exp().max(1.5 / detected);
        GridOracle::spanning(lo, span, GRID)
    }

    fn spanning(lo: f64, span: f64, cells: usize) -> Self {
        let p = (0..cells).map(|i| (i as f64 + 0.5) / cells as f64).collect();
        let step = span.ln() / (cells - 1) as f64;
        let lambda = (0..cells).map(|j| lo * (step * j as f64).exp()).collect();
        GridOracle { p, lambda }
    }

    pub fn contains(&self, p: f64, lambda: f64) -> bool {
        p >= self.p[0]
            && p <= self.p[self.p.len() - 1]
            && lambda >= self.lambda[0]
            && lambda <= self.lambda[self.lambda.len() - 1]
    }

    /// Indices of the largest log-likelihood on the grid.
    pub fn argmax(&self, data: &CountsMatrix, exposure: f64) -> (usize, usize) {
        let (_, i, j) = self
            .p
            .par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut best = (f64::NEG_INFINITY, i, 0);
                for (j, &l) in self.lambda.iter().enumerate() {
                    let ll = log_likelihood(p, l, data, exposure).unwrap();
                    if ll > best.0 {
                        best = (ll, i, j);
                    }
                }
                best
            })
            .reduce(
                || (f64::NEG_INFINITY, 0, 0),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                        b
                    } else {
                        a
                    }
                },
            );
        (i, j)
    }

    pub fn nearest(&self, p: f64, lambda: f64) -> (usize, usize) {
        (nearest_index(&self.p, p), nearest_index(&self.lambda, lambda))
    }
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
        .unwrap()
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    let n = xs.len() as f64;
    let cov = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
    cov / (vx * vy).sqrt()
}

pub fn column(data: &CountsMatrix, layer: usize) -> Vec<f64> {
    data.rows().map(|r| r[layer] as f64).collect()
}
