//! Counter-based random streams, Monte-Carlo summaries and normality
//! diagnostics.
//!
//! Stream `(seed, stream_id)` is ChaCha8 keyed by both words; block `b` of a
//! stream is the ChaCha stream number `b + 1`. Every draw is a pure function
//! of `(seed, stream_id, block, counter)`, so results do not depend on how
//! work is spread over threads.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::linalg::KahanSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    fn key(&self) -> [u8; 32] {
        let mut k = [0u8; 32];
        k[..8].copy_from_slice(&self.seed.to_le_bytes());
        k[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        k
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }

    /// Independent sub-stream for block `b`.
    pub fn block_rng(&self, b: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::from_seed(self.key());
        r.set_stream(b.wrapping_add(1));
        r
    }

    /// A derived stream for nested replication.
    pub fn child(&self, k: u64) -> RngStream {
        RngStream { seed: self.seed ^ splitmix64(self.stream_id.wrapping_add(0x9e37_79b9_7f4a_7c15)), stream_id: k }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-coordinate moments of `R` replicate vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub replicates: usize,
    pub seed: u64,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// Row-major sample covariance (divisor `R − 1`).
    pub cov: Vec<Vec<f64>>,
}

impl McSummary {
    pub fn from_samples(samples: &[Vec<f64>], seed: u64) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return Err(Error::TooSmall(format!("{r} replicates")));
        }
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::DimensionError("replicates of unequal length".into()));
        }
        let mean: Vec<f64> = (0..dim)
            .map(|j| {
                let mut acc = KahanSum::default();
                samples.iter().for_each(|s| acc.add(s[j]));
                acc.value() / r as f64
            })
            .collect();
        let mut cov = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            for k in j..dim {
                let mut acc = KahanSum::default();
                samples.iter().for_each(|s| acc.add((s[j] - mean[j]) * (s[k] - mean[k])));
                let c = acc.value() / (r - 1) as f64;
                cov[j][k] = c;
                cov[k][j] = c;
            }
        }
        let se = (0..dim).map(|j| (cov[j][j] / r as f64).sqrt()).collect();
        Ok(McSummary { replicates: r, seed, mean, se, cov })
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.mean.len();
        DMatrix::from_fn(d, d, |j, k| self.cov[j][k])
    }

    /// Standard error of the covariance entry `(j, k)`, from the replicate
    /// fourth moments.
    pub fn cov_se(samples: &[Vec<f64>], mean: &[f64], j: usize, k: usize) -> f64 {
        let r = samples.len() as f64;
        let prods: Vec<f64> = samples.iter().map(|s| (s[j] - mean[j]) * (s[k] - mean[k])).collect();
        let m = prods.iter().sum::<f64>() / r;
        (prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
    }
}

/// Run `sampler` on streams `(seed, 1..=R)` in parallel and aggregate in
/// replicate order.
pub fn mc_collect<F>(replicates: usize, seed: u64, sampler: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(RngStream) -> Result<Vec<f64>> + Sync,
{
    (1..=replicates as u64)
        .into_par_iter()
        .map(|i| {
            sampler(RngStream::new(seed, i)).map_err(|e| Error::Replicate { replicate: i, source: Box::new(e) })
        })
        .collect()
}

/// [`mc_collect`] followed by [`McSummary::from_samples`]; requires `R ≥ 100`.
pub fn mc_run<F>(replicates: usize, seed: u64, sampler: F) -> Result<McSummary>
where
    F: Fn(RngStream) -> Result<Vec<f64>> + Sync,
{
    if replicates < 100 {
        return Err(Error::TooSmall(format!("{replicates} replicates, need at least 100")));
    }
    McSummary::from_samples(&mc_collect(replicates, seed, sampler)?, seed)
}

/// Kolmogorov distribution tail `P(√n D_n > x)` for large `n`.
pub fn kolmogorov_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic of `xs` against `N(0, var)`.
pub fn ks_normal(xs: &[f64], var: f64) -> f64 {
    let normal = Normal::new(0.0, var.sqrt()).expect("positive variance");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityThresholds {
    pub frob: f64,
    pub ks_alpha: f64,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        NormalityThresholds { frob: 0.15, ks_alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub samples: usize,
    pub frob_rel_err: f64,
    pub ks_stats: Vec<f64>,
    pub ks_pvalues: Vec<f64>,
    pub frob_pass: bool,
    pub ks_pass: bool,
    pub pass: bool,
}

/// Covariance and marginal-KS comparison of `samples` with `N(0, target)`.
pub fn normality_check(samples: &[Vec<f64>], target: &DMatrix<f64>, th: NormalityThresholds) -> Result<NormalityReport> {
    if samples.len() < 500 {
        return Err(Error::TooSmall(format!("{} samples, need at least 500", samples.len())));
    }
    let s = McSummary::from_samples(samples, 0)?;
    let dim = s.mean.len();
    if target.nrows() != dim || target.ncols() != dim {
        return Err(Error::DimensionError(format!("target {}x{} vs {dim}", target.nrows(), target.ncols())));
    }
    if let Some(j) = (0..dim).find(|&j| !(s.cov[j][j] > 0.0)) {
        return Err(Error::DegenerateSamples(format!("coordinate {j} has zero variance")));
    }
    let diff = s.cov_matrix() - target;
    let frob_rel_err = diff.norm() / target.norm();
    let n = samples.len() as f64;
    let mut ks_stats = Vec::with_capacity(dim);
    let mut ks_pvalues = Vec::with_capacity(dim);
    for j in 0..dim {
        let xs: Vec<f64> = samples.iter().map(|v| v[j] - s.mean[j]).collect();
        let d = ks_normal(&xs, target[(j, j)]);
        ks_stats.push(d);
        ks_pvalues.push(kolmogorov_tail(d * n.sqrt()));
    }
    let frob_pass = frob_rel_err <= th.frob;
    let ks_pass = ks_pvalues.iter().all(|&p| p > th.ks_alpha);
    Ok(NormalityReport {
        samples: samples.len(),
        frob_rel_err,
        ks_stats,
        ks_pvalues,
        frob_pass,
        ks_pass,
        pass: frob_pass && ks_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Two-sample chi-square test on nonnegative integer data of equal size,
/// with adjacent bins merged until each pooled expected count is at least 5.
pub fn chi_square_two_sample(x: &[u64], y: &[u64]) -> Result<ChiSquareReport> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionError(format!("sample sizes {} and {}", x.len(), y.len())));
    }
    let top = x.iter().chain(y).copied().max().unwrap_or(0) as usize;
    let mut cx = vec![0u64; top + 1];
    let mut cy = vec![0u64; top + 1];
    x.iter().for_each(|&v| cx[v as usize] += 1);
    y.iter().for_each(|&v| cy[v as usize] += 1);
    let mut bins: Vec<(u64, u64)> = vec![];
    let (mut ax, mut ay) = (0u64, 0u64);
    for k in 0..=top {
        ax += cx[k];
        ay += cy[k];
        if (ax + ay) as f64 / 2.0 >= 5.0 {
            bins.push((ax, ay));
            ax = 0;
            ay = 0;
        }
    }
    if ax + ay > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += ax;
                last.1 += ay;
            }
            None => bins.push((ax, ay)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::DegenerateSamples("fewer than two bins after merging".into()));
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (a as f64, b as f64);
            (a - b).powi(2) / (a + b)
        })
        .sum();
    let df = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(df as f64).expect("df >= 1").cdf(statistic);
    Ok(ChiSquareReport { statistic, df, p_value, bins: bins.len() })
}
