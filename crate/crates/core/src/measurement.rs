//! Exact simulation of the commuting number-operator measurement and the
//! block scheme.
//!
//! For an `m`-mode symbol `A`, rotate by the DFT unitary, `M = U*AU`, and set
//! `Q' = (M − I)/2 ≥ 0`. Draw `α = V D^{1/2} z` with `Q' = VDV*` and `z`
//! standard complex normal, then `N_j ~ Poisson(|α_j|²)` independently given
//! `α`. This Gaussian-mixed Poisson law has `E N_j = Q'_jj`, geometric
//! marginals, and `Cov(N_j, N_k) = |Q'_jk|²` for `j ≠ k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::distributions::poisson;
use crate::harness::RngStream;
use crate::linalg::{CMat, HermEig};
use crate::spectral::SpectralDensity;
use crate::toeplitz::{abs_square, toeplitz_from_density, DftUnitary, SymbolMatrix};
use crate::{Error, Result};

/// Negative eigenvalues of `Q'` above this magnitude are rejected.
pub const PSD_TOL: f64 = 1e-10;

/// Partition of `n` modes into `r` blocks of `m` separated by gaps of `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockScheme {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub r: usize,
}

/// `m = 2⌊ln(n)/2⌋ + 1`, `r = ⌊n/(m + d)⌋`.
pub fn block_scheme(n: usize, d: usize) -> Result<BlockScheme> {
    if n < 8 {
        return Err(Error::TooSmall(format!("n = {n} below 8")));
    }
    let m = 2 * ((n as f64).ln() / 2.0).floor() as usize + 1;
    let r = n / (m + d);
    if r == 0 {
        return Err(Error::TooSmall(format!("no complete block for n = {n}, m = {m}, d = {d}")));
    }
    Ok(BlockScheme { n, d, m, r })
}

/// `(E Π, Cov Π)` for `Π_j = 2N_j + 1`: `E Π_j = u_j*Au_j`, `Cov = (U*AU)^[2] − I`.
pub fn pi_moments(a: &SymbolMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let lmin = a.eig()?.0;
    if lmin - 1.0 <= 0.0 {
        return Err(Error::NotFaithful { margin: lmin - 1.0 });
    }
    let u = DftUnitary::new(a.n())?;
    let rot = u.matrix().adjoint() * a.entries() * u.matrix();
    let mean = (0..a.n()).map(|j| rot[(j, j)].re).collect();
    let cov = abs_square(&rot) - DMatrix::identity(a.n(), a.n());
    Ok((mean, cov))
}

/// Precomputed sampler for one symbol.
#[derive(Debug, Clone)]
pub struct NumberSampler {
    factor: CMat,
}

impl NumberSampler {
    /// Sampler for `Π` of an `m`-mode symbol in the DFT basis (`m` odd).
    pub fn new(a: &SymbolMatrix) -> Result<Self> {
        let u = DftUnitary::new(a.n())?;
        let rot = u.matrix().adjoint() * a.entries() * u.matrix();
        Self::from_rotated(&rot)
    }

    /// Sampler for numbers with normally ordered covariance `(M − I)/2`,
    /// with `M` already in the measured basis.
    pub fn from_rotated(m: &CMat) -> Result<Self> {
        let n = m.nrows();
        let q = (m - CMat::identity(n, n)) * Complex64::new(0.5, 0.0);
        let q = crate::linalg::hermitian_part(&q);
        let e = HermEig::new(&q)?;
        let mut factor = e.vectors.clone();
        for (j, &v) in e.values.iter().enumerate() {
            if v < -PSD_TOL {
                return Err(Error::NotPSD(format!("Q' eigenvalue {v:.3e}")));
            }
            factor.column_mut(j).scale_mut(v.max(0.0).sqrt());
        }
        Ok(NumberSampler { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let n = self.dim();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = DVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        });
        let alpha = &self.factor * z;
        alpha.iter().map(|a| poisson(a.norm_sqr(), rng)).collect()
    }
}

/// One draw of the numbers `N` for symbol `A` (odd dimension).
pub fn sample_number_ops<R: Rng + ?Sized>(a: &SymbolMatrix, rng: &mut R) -> Result<Vec<u64>> {
    Ok(NumberSampler::new(a)?.draw(rng))
}

/// Outcomes of `r` independent blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementDraw {
    /// `blocks[b][j] = N`, `j` in symmetric order `−(m−1)/2..(m−1)/2`.
    pub blocks: Vec<Vec<u64>>,
    /// `Π̄_j = (1/r) Σ_b (2N[b][j] + 1)`.
    pub pi_bar: Vec<f64>,
}

impl MeasurementDraw {
    pub fn from_blocks(blocks: Vec<Vec<u64>>) -> Self {
        let r = blocks.len();
        let m = blocks.first().map_or(0, |b| b.len());
        let pi_bar = (0..m)
            .map(|j| blocks.iter().map(|b| (2 * b[j] + 1) as f64).sum::<f64>() / r as f64)
            .collect();
        MeasurementDraw { blocks, pi_bar }
    }
}

/// Block `b` uses stream `stream.block_rng(b)`.
pub fn sample_pi_blocks_with(sampler: &NumberSampler, r: usize, stream: RngStream) -> MeasurementDraw {
    let blocks = (0..r as u64).map(|b| sampler.draw(&mut stream.block_rng(b))).collect();
    MeasurementDraw::from_blocks(blocks)
}

/// `r` independent draws on `A_m(a)`.
pub fn sample_pi_blocks(a: &SpectralDensity, scheme: &BlockScheme, stream: RngStream) -> Result<MeasurementDraw> {
    let sampler = block_sampler(a, scheme.m)?;
    Ok(sample_pi_blocks_with(&sampler, scheme.r, stream))
}

/// Sampler on `A_m(a)`, refusing `λ_min(A_m) ≤ 1`.
pub fn block_sampler(a: &SpectralDensity, m: usize) -> Result<NumberSampler> {
    let am = toeplitz_from_density(a, m)?;
    let lmin = am.eig()?.0;
    if lmin <= 1.0 {
        return Err(Error::NotFaithful { margin: lmin - 1.0 });
    }
    NumberSampler::new(&am)
}

/// `ǎ_j = (n^{1/2}/(n − |j|)) v_j*Π`, `v_j = n^{−1/2}(e^{ijω_k})_k`, `|j| ≤ d`.
pub fn unbiased_cov_estimates(pi: &[f64], d: usize) -> Result<Vec<Complex64>> {
    let n = pi.len();
    if n.is_multiple_of(2) || 2 * d + 1 > n {
        return Err(Error::DimensionError(format!("need odd n >= 2d+1; n = {n}, d = {d}")));
    }
    let w = crate::spectral::fourier_grid(n)?;
    let di = d as i64;
    let scale = (n as f64).sqrt().recip();
    Ok((-di..=di)
        .map(|j| {
            // v_j*Π with v_j(k) = n^{−1/2} e^{ijω_k}.
            let ip: Complex64 = w.iter().zip(pi).map(|(&wk, &p)| Complex64::from_polar(scale * p, -(j as f64) * wk)).sum();
            ip * ((n as f64).sqrt() / (n as f64 - j.unsigned_abs() as f64))
        })
        .collect())
}
