//! Preliminary and one-step estimators of a `d`-dependent density, the
//! projection onto `Θ2'`, the `Φ⁰`/`Φ` matrices and the truncated-series
//! nonparametric estimator.

use nalgebra::{DMatrix, DVector};

use crate::linalg::sym_eigvals;
use crate::spectral::{fourier_grid, periodic_mean, psi, uniform_grid, RealParam, SpectralDensity};
use crate::{Error, Result};

pub const PHI_NODES: usize = 4096;
pub const PROJECTION_GRID: usize = 512;
pub const PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_SWEEPS: usize = 10_000;
pub const MAX_CONDITION: f64 = 1e12;

/// `W` (`m×(2d+1)`, columns `w_j = m^{−1/2}(ψ_j(ω_{k,m}))_k`), `F = diag(m/(m − |j|))`
/// and, when a parameter is supplied, `Δ = diag(a_θ²(ω_{k,m}) − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub m: usize,
    pub d: usize,
    pub w: DMatrix<f64>,
    pub f: Vec<f64>,
    pub delta: Option<Vec<f64>>,
}

pub fn design_matrices(m: usize, d: usize, theta: Option<&RealParam>) -> Result<DesignMatrices> {
    if m.is_multiple_of(2) || 2 * d + 1 > m {
        return Err(Error::DimensionError(format!("need odd m >= 2d+1; m = {m}, d = {d}")));
    }
    let grid = fourier_grid(m)?;
    let s = (m as f64).sqrt().recip();
    let di = d as i64;
    let w = DMatrix::from_fn(m, 2 * d + 1, |k, c| s * psi(c as i64 - di, grid[k]));
    let f = (-di..=di).map(|j| m as f64 / (m as f64 - j.abs() as f64)).collect();
    let delta = match theta {
        None => None,
        Some(t) => {
            if t.d != d {
                return Err(Error::DimensionError(format!("theta has d = {}, expected {d}", t.d)));
            }
            let v: Vec<f64> = grid.iter().map(|&x| t.eval(x).powi(2) - 1.0).collect();
            if let Some(bad) = v.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::NotAdmissible(format!("a_θ² − 1 = {} at ω = {}", v[bad], grid[bad])));
            }
            Some(v)
        }
    };
    Ok(DesignMatrices { m, d, w, f, delta })
}

impl DesignMatrices {
    /// `E Π̄ = m^{1/2} W F^{−1} θ`.
    pub fn mean_pi(&self, theta: &RealParam) -> Vec<f64> {
        let scaled = DVector::from_iterator(self.f.len(), theta.theta.iter().zip(&self.f).map(|(t, f)| t / f));
        (&self.w * scaled * (self.m as f64).sqrt()).iter().copied().collect()
    }

    fn check_pi(&self, pi_bar: &[f64]) -> Result<()> {
        if pi_bar.len() != self.m {
            return Err(Error::DimensionError(format!("Π̄ has {} entries, expected m = {}", pi_bar.len(), self.m)));
        }
        Ok(())
    }
}

/// `θ̂ = m^{−1/2} F W′ Π̄`.
pub fn preliminary_estimator(pi_bar: &[f64], m: usize, d: usize) -> Result<RealParam> {
    let dm = design_matrices(m, d, None)?;
    preliminary_with(&dm, pi_bar)
}

pub fn preliminary_with(dm: &DesignMatrices, pi_bar: &[f64]) -> Result<RealParam> {
    dm.check_pi(pi_bar)?;
    let p = DVector::from_column_slice(pi_bar);
    let wt = dm.w.transpose() * p;
    let s = (dm.m as f64).sqrt().recip();
    RealParam::new(dm.d, wt.iter().zip(&dm.f).map(|(v, f)| s * f * v).collect())
}

/// `θ̃ = m^{−1/2} F (W′Δ̂^{−1}W)^{−1} W′Δ̂^{−1} Π̄` with `Δ̂ = Δ(θ̄)`.
pub fn improved_estimator(pi_bar: &[f64], theta_bar: &RealParam, m: usize, d: usize) -> Result<RealParam> {
    let dm = design_matrices(m, d, Some(theta_bar))?;
    improved_with(&dm, pi_bar)
}

pub fn improved_with(dm: &DesignMatrices, pi_bar: &[f64]) -> Result<RealParam> {
    dm.check_pi(pi_bar)?;
    let delta = dm.delta.as_ref().ok_or_else(|| Error::InvalidInput("design has no Δ".into()))?;
    weighted_estimate(dm, pi_bar, delta)
}

/// The generalised least-squares step with weights `1/δ_k`.
pub fn weighted_estimate(dm: &DesignMatrices, pi_bar: &[f64], delta: &[f64]) -> Result<RealParam> {
    let p = dm.w.ncols();
    let mut wtw = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for k in 0..dm.m {
        let inv = 1.0 / delta[k];
        for a in 0..p {
            rhs[a] += dm.w[(k, a)] * inv * pi_bar[k];
            for b in 0..p {
                wtw[(a, b)] += dm.w[(k, a)] * inv * dm.w[(k, b)];
            }
        }
    }
    let eig = sym_eigvals(&wtw)?;
    let condition = eig[p - 1] / eig[0];
    if !(eig[0] > 0.0) || condition > MAX_CONDITION {
        return Err(Error::SingularSystem { condition });
    }
    let x = wtw
        .cholesky()
        .ok_or(Error::SingularSystem { condition })?
        .solve(&rhs);
    let s = (dm.m as f64).sqrt().recip();
    RealParam::new(dm.d, x.iter().zip(&dm.f).map(|(v, f)| s * f * v).collect())
}

/// `Θ2'(d, M) = {‖θ‖² ≤ M} ∩ {a_θ(ω_g) ≥ 1 + 1/M on a grid}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta2Prime {
    pub d: usize,
    pub m: f64,
    pub grid: Vec<f64>,
}

impl Theta2Prime {
    pub fn new(d: usize, m: f64) -> Result<Self> {
        Self::with_grid(d, m, PROJECTION_GRID)
    }

    pub fn with_grid(d: usize, m: f64, grid: usize) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::RangeError(format!("M = {m} must be positive")));
        }
        Ok(Theta2Prime { d, m, grid: uniform_grid(grid) })
    }

    fn normal(&self, omega: f64) -> Vec<f64> {
        let d = self.d as i64;
        (-d..=d).map(|j| psi(j, omega)).collect()
    }

    /// Largest violation over the ball and all half-spaces.
    pub fn infeasibility(&self, theta: &[f64]) -> f64 {
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut worst = (norm - self.m.sqrt()).max(0.0);
        let floor = 1.0 + 1.0 / self.m;
        for &w in &self.grid {
            let v: f64 = self.normal(w).iter().zip(theta).map(|(g, t)| g * t).sum();
            worst = worst.max(floor - v);
        }
        worst
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.infeasibility(theta) <= 0.0
    }
}

/// Euclidean projection onto [`Theta2Prime`] by Dykstra's alternating
/// projections between the ball and the polyhedron cut out by the grid
/// half-spaces. The polyhedral step is an exact least-distance solve, so the
/// outer iteration sees two sets regardless of the grid size.
pub fn project_theta(theta_hat: &RealParam, space: &Theta2Prime) -> Result<RealParam> {
    if theta_hat.d != space.d {
        return Err(Error::DimensionError(format!("theta has d = {}, space has d = {}", theta_hat.d, space.d)));
    }
    if space.contains(&theta_hat.theta) {
        return Ok(theta_hat.clone());
    }
    let normals: Vec<Vec<f64>> = space.grid.iter().map(|&w| space.normal(w)).collect();
    let floor = 1.0 + 1.0 / space.m;
    let radius = space.m.sqrt();
    if floor > radius {
        return Err(Error::NotAdmissible(format!("Θ2' is empty for M = {}", space.m)));
    }
    let p = theta_hat.theta.len();
    let mut x = theta_hat.theta.clone();
    let mut inc_ball = vec![0.0; p];
    let mut inc_poly = vec![0.0; p];
    let mut last_change = f64::INFINITY;
    for _ in 0..PROJECTION_MAX_SWEEPS {
        let start = x.clone();
        let y: Vec<f64> = x.iter().zip(&inc_ball).map(|(a, b)| a + b).collect();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b: Vec<f64> = if ny > radius { y.iter().map(|v| v * radius / ny).collect() } else { y.clone() };
        inc_ball = y.iter().zip(&b).map(|(a, c)| a - c).collect();
        let y: Vec<f64> = b.iter().zip(&inc_poly).map(|(a, c)| a + c).collect();
        x = project_polyhedron(&y, &normals, floor)?;
        inc_poly = y.iter().zip(&x).map(|(a, c)| a - c).collect();
        last_change = x.iter().zip(&start).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        if last_change < PROJECTION_TOL && space.infeasibility(&x) < PROJECTION_TOL {
            return RealParam::new(theta_hat.d, x);
        }
    }
    Err(Error::NonConvergence { iterations: PROJECTION_MAX_SWEEPS, residual: last_change.max(space.infeasibility(&x)) })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `argmin ‖x − y‖` subject to `⟨g_i, x⟩ ≥ c` for all `i`.
///
/// With `z = x − y` this is least-distance programming, `min ‖z‖` subject to
/// `Gz ≥ h`, `h_i = c − ⟨g_i, y⟩`. Its solution is read off the residual
/// `ρ = Eu − f` of the nonnegative least squares problem with `E = [G h]ᵀ`,
/// `f = e_{p}`: `z = −ρ_{0..p} / ρ_p`.
fn project_polyhedron(y: &[f64], normals: &[Vec<f64>], c: f64) -> Result<Vec<f64>> {
    if normals.iter().all(|g| dot(g, y) >= c) {
        return Ok(y.to_vec());
    }
    let p = y.len();
    let e = DMatrix::from_fn(p + 1, normals.len(), |i, j| if i < p { normals[j][i] } else { c - dot(&normals[j], y) });
    let mut f = DVector::zeros(p + 1);
    f[p] = 1.0;
    let u = nnls(&e, &f)?;
    let rho = &e * u - f;
    if rho[p].abs() <= f64::EPSILON {
        return Err(Error::NotAdmissible("half-spaces have empty intersection".into()));
    }
    Ok((0..p).map(|i| y[i] - rho[i] / rho[p]).collect())
}

/// Lawson–Hanson active-set solver for `min ‖Eu − f‖` subject to `u ≥ 0`.
fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let k = e.ncols();
    let tol = 1e-12 * (1.0 + e.amax()) * (1.0 + f.amax());
    let mut u = DVector::zeros(k);
    let mut passive = vec![false; k];
    let max_iter = 3 * k + 10;
    let solve = |passive: &[bool]| -> Result<DVector<f64>> {
        let cols: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
        let ep = DMatrix::from_fn(e.nrows(), cols.len(), |i, j| e[(i, cols[j])]);
        let zp = ep.svd(true, true).solve(f, 1e-14).map_err(|_| Error::SingularSystem { condition: f64::INFINITY })?;
        let mut z = DVector::zeros(k);
        cols.iter().zip(zp.iter()).for_each(|(&j, &v)| z[j] = v);
        Ok(z)
    };
    for _ in 0..max_iter {
        let w = e.transpose() * (f - e * &u);
        let pick = (0..k).filter(|&j| !passive[j] && w[j] > tol).max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = pick else { return Ok(u) };
        passive[j] = true;
        loop {
            let z = solve(&passive)?;
            if (0..k).all(|j| !passive[j] || z[j] > 0.0) {
                u = z;
                break;
            }
            // Step back to the first passive coordinate that hits zero.
            let alpha = (0..k)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| u[j] / (u[j] - z[j]))
                .fold(1.0, f64::min);
            u = &u + (z - &u) * alpha;
            for j in 0..k {
                if passive[j] && u[j] <= tol {
                    passive[j] = false;
                    u[j] = 0.0;
                }
            }
            if !passive.iter().any(|&b| b) {
                break;
            }
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: f64::NAN })
}

/// `Φ⁰_{jk} = (1/2π)∫(a_θ² − 1)ψ_jψ_k` and `Φ_{jk} = (1/2π)∫(a_θ² − 1)^{−1}ψ_jψ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrices {
    pub phi0: DMatrix<f64>,
    pub phi: DMatrix<f64>,
}

pub fn phi_matrices(theta: &RealParam) -> Result<FisherMatrices> {
    phi_matrices_with(theta, PHI_NODES)
}

pub fn phi_matrices_with(theta: &RealParam, nodes: usize) -> Result<FisherMatrices> {
    let grid = uniform_grid(nodes);
    let vals: Vec<f64> = grid.iter().map(|&w| theta.eval(w).powi(2) - 1.0).collect();
    if let Some(bad) = vals.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NotAdmissible(format!("a_θ² − 1 = {} at ω = {}", vals[bad], grid[bad])));
    }
    let d = theta.d as i64;
    let p = theta.theta.len();
    let basis: Vec<Vec<f64>> = (-d..=d).map(|j| grid.iter().map(|&w| psi(j, w)).collect()).collect();
    let mut phi0 = DMatrix::zeros(p, p);
    let mut phi = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let (mut s0, mut s1) = (0.0, 0.0);
            for (i, &v) in vals.iter().enumerate() {
                let pp = basis[a][i] * basis[b][i];
                s0 += v * pp;
                s1 += pp / v;
            }
            phi0[(a, b)] = s0 / nodes as f64;
            phi0[(b, a)] = phi0[(a, b)];
            phi[(a, b)] = s1 / nodes as f64;
            phi[(b, a)] = phi[(a, b)];
        }
    }
    Ok(FisherMatrices { phi0, phi })
}

/// `â(ω) = Σ_{|j|≤d_n} θ̂_{j,n}ψ_j(ω)` with `θ̂_{j,n} = (n^{1/2}/(n − |j|)) w_{j,n}′Π`.
pub fn nonparametric_estimate(pi: &[f64], d_n: usize) -> Result<(RealParam, SpectralDensity)> {
    let n = pi.len();
    if n.is_multiple_of(2) || (d_n as f64) > (n as f64).sqrt() / 2.0 {
        return Err(Error::DimensionError(format!("need odd n and d_n <= n^(1/2)/2; n = {n}, d_n = {d_n}")));
    }
    let theta = preliminary_estimator(pi, n, d_n)?;
    let density = theta.to_density();
    Ok((theta, density))
}

/// `(1/2π)∫(â − a)²` for two densities.
pub fn l2_error_sq(a: &SpectralDensity, b: &SpectralDensity) -> f64 {
    let k = a.k_max().max(b.k_max()) as i64;
    (-k..=k).map(|j| (a.coeff(j) - b.coeff(j)).norm_sqr()).sum()
}

/// `(1/2π)∫ f` with the Φ quadrature.
pub fn mean_over_period(f: impl Fn(f64) -> f64) -> f64 {
    periodic_mean(PHI_NODES, f)
}
