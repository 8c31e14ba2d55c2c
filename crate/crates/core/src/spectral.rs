//! Spectral densities, parameter spaces, grids and approximation operators.
//!
//! A density is stored by its Fourier coefficients `a_k`, `0 ≤ k ≤ K_max`;
//! negative lags are implied by `a_{-k} = conj(a_k)`, so `a(ω)` is real by
//! construction. All `L²` norms on `[-π, π]` carry the weight `1/2π`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative imaginary residue tolerated when evaluating a density.
pub const REAL_RESIDUE_TOL: f64 = 1e-10;
/// Quadrature nodes used to build a density from a callable.
pub const FROM_FN_NODES: usize = 8192;
/// Default frequency grid for the lower-bound constraint.
pub const DEFAULT_GRID: usize = 1024;
/// Grid on which truncation sup-errors are reported.
pub const SUP_GRID: usize = 4096;

/// Reduce an angle to `[-π, π]`; ties map to `π`.
pub fn reduce_angle(omega: f64) -> f64 {
    let turns = (omega / (2.0 * PI)).round_ties_even();
    let w = omega - 2.0 * PI * turns;
    if w <= -PI {
        PI
    } else {
        w
    }
}

/// A real trigonometric series `a(ω) = Σ_{|k| ≤ K_max} a_k e^{ikω}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    /// `coeffs[k] = a_k` for `k = 0..=K_max`; `coeffs[0]` is real.
    coeffs: Vec<Complex64>,
}

impl SpectralDensity {
    /// From nonnegative lags `a_0, a_1, …`. Trailing zeros are kept so that
    /// `K_max` is what the caller declared.
    pub fn from_nonnegative(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("density needs at least a_0".into()));
        }
        if coeffs[0].im != 0.0 {
            return Err(Error::HermitianSymmetryViolation {
                lag: 0,
                detail: format!("a_0 has imaginary part {}", coeffs[0].im),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(SpectralDensity { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::from_nonnegative(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// From an explicit list of `(k, a_k)` over positive and negative lags.
    /// Both members of a pair must satisfy `a_{-k} = conj(a_k)` exactly.
    pub fn from_lags(lags: &[(i64, Complex64)]) -> Result<Self> {
        let k_max = lags.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0) as usize;
        let mut pos: Vec<Option<Complex64>> = vec![None; k_max + 1];
        let mut neg: Vec<Option<Complex64>> = vec![None; k_max + 1];
        for &(k, v) in lags {
            let slot = if k >= 0 { &mut pos[k as usize] } else { &mut neg[(-k) as usize] };
            if slot.replace(v).is_some() {
                return Err(Error::InvalidInput(format!("lag {k} given twice")));
            }
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k_max + 1];
        for k in 0..=k_max {
            coeffs[k] = match (pos[k], if k == 0 { pos[0] } else { neg[k] }) {
                (Some(p), Some(q)) if k > 0 => {
                    if p != q.conj() {
                        return Err(Error::HermitianSymmetryViolation {
                            lag: k as i64,
                            detail: format!("a_{k} = {p}, a_-{k} = {q}"),
                        });
                    }
                    p
                }
                (Some(p), _) => p,
                (None, Some(q)) => q.conj(),
                (None, None) => Complex64::new(0.0, 0.0),
            };
        }
        Self::from_nonnegative(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        SpectralDensity { coeffs: vec![Complex64::new(c, 0.0)] }
    }

    /// `a(ω) = a0 + a1·cos ω`, i.e. `a_{±1} = a1/2`.
    pub fn cosine(a0: f64, a1: f64) -> Self {
        SpectralDensity { coeffs: vec![Complex64::new(a0, 0.0), Complex64::new(a1 / 2.0, 0.0)] }
    }

    /// Fourier coefficients of a real-valued callable by periodic trapezoid.
    pub fn from_fn(f: impl Fn(f64) -> f64, k_max: usize) -> Result<Self> {
        let n = FROM_FN_NODES;
        let vals: Vec<f64> = (0..n).map(|j| f(-PI + 2.0 * PI * j as f64 / n as f64)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("callable returned a non-finite value".into()));
        }
        let mut coeffs = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in vals.iter().enumerate() {
                let w = -PI + 2.0 * PI * j as f64 / n as f64;
                acc += Complex64::from_polar(v, -(k as f64) * w);
            }
            coeffs.push(acc / n as f64);
        }
        coeffs[0].im = 0.0;
        Self::from_nonnegative(coeffs)
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `a_k` for any integer lag.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            None => Complex64::new(0.0, 0.0),
            Some(&c) if k >= 0 => c,
            Some(&c) => c.conj(),
        }
    }

    /// Nonnegative-lag coefficients.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Evaluate `a(ω)`; `ω` is reduced modulo `2π`.
    pub fn eval(&self, omega: f64) -> f64 {
        let w = reduce_angle(omega);
        let mut full = self.coeffs[0];
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(1.0, k as f64 * w);
            full += c * e + c.conj() * e.conj();
        }
        debug_assert!(full.im.abs() < REAL_RESIDUE_TOL * (1.0 + full.re.abs()));
        full.re
    }

    /// `a'(ω)` and `a''(ω)`.
    pub fn derivatives(&self, omega: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            let kf = k as f64;
            let z = c * Complex64::from_polar(1.0, kf * omega);
            d1 += -2.0 * kf * z.im;
            d2 += -2.0 * kf * kf * z.re;
        }
        (d1, d2)
    }

    /// `(Σ_{k≠0} |k|^{2α}|a_k|², a_0² + seminorm)`.
    pub fn sobolev_norm(&self, alpha: f64) -> (f64, f64) {
        let semi: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| 2.0 * (k as f64).powf(2.0 * alpha) * c.norm_sqr())
            .sum();
        (semi, self.coeffs[0].re.powi(2) + semi)
    }

    /// `Σ_k |a_k|²`, the `L²` norm squared with weight `1/2π`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.sobolev_norm(0.0).1
    }

    /// Keep lags `|k| ≤ (m-1)/2`.
    pub fn fourier_truncate(&self, m: usize) -> Result<Self> {
        if m.is_multiple_of(2) {
            return Err(Error::RangeError(format!("truncation order m = {m} must be odd")));
        }
        let keep = ((m - 1) / 2).min(self.k_max());
        Ok(SpectralDensity { coeffs: self.coeffs[..=keep].to_vec() })
    }

    /// `sup_ω |a − ã_m|` on a uniform grid.
    pub fn truncation_sup_error(&self, m: usize) -> Result<f64> {
        let t = self.fourier_truncate(m)?;
        Ok(uniform_grid(SUP_GRID)
            .into_iter()
            .map(|w| (self.eval(w) - t.eval(w)).abs())
            .fold(0.0, f64::max))
    }

    /// Cell averages `J_{j,n} = (n/2π)∫_{W_{j,n}} a(ω)dω`, `j = 1..n`, with
    /// `W_{j,n} = 2π((j-1)/n − 1/2, j/n − 1/2)`. Closed form per lag.
    pub fn local_averages(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::RangeError("local averages need n >= 1".into()));
        }
        let nf = n as f64;
        Ok((1..=n)
            .map(|j| {
                let lo = 2.0 * PI * ((j as f64 - 1.0) / nf - 0.5);
                let hi = 2.0 * PI * (j as f64 / nf - 0.5);
                let mut v = self.coeffs[0].re;
                for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
                    let kf = k as f64;
                    // ∫ e^{ikω} over the cell is (e^{ik·hi} − e^{ik·lo})/(ik).
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo);
                    let integral = Complex64::from_polar(2.0 * (kf * half).sin() / kf, kf * mid);
                    v += 2.0 * (c * integral).re * nf / (2.0 * PI);
                }
                v
            })
            .collect())
    }

    /// `L²` projection on step functions over `W_{j,n}`.
    pub fn piecewise_project(&self, n: usize) -> Result<StepFunction> {
        Ok(StepFunction { heights: self.local_averages(n)? })
    }

    /// `min_ω a(ω)` with its location: grid scan, then Newton polish of every
    /// grid-local minimum. Exact for `K_max ≤ 1`.
    pub fn global_min(&self, grid: usize) -> (f64, f64) {
        if self.k_max() == 0 {
            return (0.0, self.coeffs[0].re);
        }
        if self.k_max() == 1 {
            let c = self.coeffs[1];
            // a0 + 2|c| cos(ω + arg c) is minimal where ω + arg c = π.
            let w = reduce_angle(PI - c.arg());
            return (w, self.coeffs[0].re - 2.0 * c.norm());
        }
        let g = uniform_grid(grid);
        let vals: Vec<f64> = g.iter().map(|&w| self.eval(w)).collect();
        let mut best = (g[0], vals[0]);
        for i in 0..grid {
            let prev = vals[(i + grid - 1) % grid];
            let next = vals[(i + 1) % grid];
            if vals[i] <= prev && vals[i] <= next {
                let (w, v) = self.newton_min(g[i], 2.0 * PI / grid as f64);
                let (w, v) = if v < vals[i] { (w, v) } else { (g[i], vals[i]) };
                if v < best.1 {
                    best = (w, v);
                }
            }
        }
        best
    }

    /// `max_ω a(ω)` by the same scheme applied to `−a`.
    pub fn global_max(&self, grid: usize) -> (f64, f64) {
        let neg = SpectralDensity { coeffs: self.coeffs.iter().map(|c| -c).collect() };
        let (w, v) = neg.global_min(grid);
        (w, -v)
    }

    fn newton_min(&self, start: f64, step: f64) -> (f64, f64) {
        let mut w = start;
        for _ in 0..50 {
            let (d1, d2) = self.derivatives(w);
            if d2 <= 0.0 {
                break;
            }
            let dw = (d1 / d2).clamp(-step, step);
            w -= dw;
            if dw.abs() < 1e-15 {
                break;
            }
        }
        let w = reduce_angle(w);
        (w, self.eval(w))
    }

    pub fn to_json(&self) -> DensityJson {
        DensityJson {
            k_max: self.k_max(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| CoeffJson { k: k as i64, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_json(doc: &DensityJson) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); doc.k_max + 1];
        let mut seen = vec![false; doc.k_max + 1];
        for c in &doc.coeffs {
            if c.k < 0 || c.k as usize > doc.k_max {
                return Err(Error::InvalidInput(format!(
                    "coefficient lag {} outside 0..={}",
                    c.k, doc.k_max
                )));
            }
            let k = c.k as usize;
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidInput(format!("lag {k} given twice")));
            }
            coeffs[k] = Complex64::new(c.re, c.im);
        }
        Self::from_nonnegative(coeffs)
    }
}

/// Wire format of a density. Only `k ≥ 0` is stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    #[serde(rename = "K_max")]
    pub k_max: usize,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffJson {
    pub k: i64,
    pub re: f64,
    pub im: f64,
}

/// Step function with heights on the cells `W_{j,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub heights: Vec<f64>,
}

impl StepFunction {
    /// `‖a − ā_n‖²` with the `1/2π` weight: `‖a‖² − (1/n)Σ J_j²` by
    /// orthogonality of the projection.
    pub fn l2_dist_sq(&self, a: &SpectralDensity) -> f64 {
        let n = self.heights.len() as f64;
        let proj: f64 = self.heights.iter().map(|h| h * h).sum::<f64>() / n;
        (a.l2_norm_sq() - proj).max(0.0)
    }
}

/// Real parameter `θ_j`, `j = −d..d`, of a `d`-dependent density:
/// `θ_0 = a_0`, `θ_j = √2 Re a_j`, `θ_{−j} = −√2 Im a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealParam {
    pub d: usize,
    /// `theta[j + d]` holds `θ_j`.
    pub theta: Vec<f64>,
}

impl RealParam {
    pub fn new(d: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != 2 * d + 1 {
            return Err(Error::DimensionError(format!(
                "theta has {} entries, expected 2d+1 = {}",
                theta.len(),
                2 * d + 1
            )));
        }
        Ok(RealParam { d, theta })
    }

    pub fn get(&self, j: i64) -> f64 {
        self.theta[(j + self.d as i64) as usize]
    }

    /// Requires `K_max ≤ d`.
    pub fn from_density(a: &SpectralDensity, d: usize) -> Result<Self> {
        if a.k_max() > d && a.coeffs()[d + 1..].iter().any(|c| c.norm() != 0.0) {
            return Err(Error::DimensionError(format!(
                "density has lags beyond d = {d} (K_max = {})",
                a.k_max()
            )));
        }
        let mut theta = vec![0.0; 2 * d + 1];
        theta[d] = a.coeff(0).re;
        for j in 1..=d {
            let c = a.coeff(j as i64);
            theta[d + j] = std::f64::consts::SQRT_2 * c.re;
            theta[d - j] = -std::f64::consts::SQRT_2 * c.im;
        }
        Ok(RealParam { d, theta })
    }

    pub fn to_density(&self) -> SpectralDensity {
        let d = self.d;
        let mut coeffs = vec![Complex64::new(self.theta[d], 0.0)];
        for j in 1..=d {
            coeffs.push(Complex64::new(self.theta[d + j], -self.theta[d - j]) / std::f64::consts::SQRT_2);
        }
        SpectralDensity { coeffs }
    }

    /// `a_θ(ω) = Σ_j θ_j ψ_j(ω)`.
    pub fn eval(&self, omega: f64) -> f64 {
        let d = self.d as i64;
        (-d..=d).map(|j| self.get(j) * psi(j, omega)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }
}

/// Orthonormal basis under `(1/2π)∫`: `ψ_0 = 1`, `ψ_j = √2 cos(jω)`,
/// `ψ_{−j} = √2 sin(jω)`.
pub fn psi(j: i64, omega: f64) -> f64 {
    use std::f64::consts::SQRT_2;
    match j {
        0 => 1.0,
        j if j > 0 => SQRT_2 * (j as f64 * omega).cos(),
        j => SQRT_2 * (-j as f64 * omega).sin(),
    }
}

/// The three parameter families over which membership is decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceKind {
    /// Sobolev ball `a_0² + Σ|k|^{2α}|a_k|² ≤ M`.
    Theta1 { alpha: f64, m: f64 },
    /// `Σ_{|j|≤d}|a_j|² ≤ M` and `a_j = 0` for `|j| > d`.
    Theta2 { d: usize, m: f64 },
    /// `‖θ‖² ≤ M` over real parameters of a `d`-dependent density.
    Theta2Prime { d: usize, m: f64 },
}

impl SpaceKind {
    pub fn bound(&self) -> f64 {
        match *self {
            SpaceKind::Theta1 { m, .. } | SpaceKind::Theta2 { m, .. } | SpaceKind::Theta2Prime { m, .. } => m,
        }
    }
}

/// A parameter space with the lower bound `a ≥ 1 + 1/M` imposed on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSpace {
    pub kind: SpaceKind,
    pub grid_size: usize,
}

impl ParameterSpace {
    pub fn new(kind: SpaceKind) -> Self {
        ParameterSpace { kind, grid_size: DEFAULT_GRID }
    }

    pub fn with_grid(kind: SpaceKind, grid_size: usize) -> Self {
        ParameterSpace { kind, grid_size }
    }
}

/// The first violated constraint found by [`membership`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Norm { value: f64, limit: f64 },
    Support { lag: usize },
    LowerBound { omega: f64, value: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// `(ω*, min a)` over the grid refined by Newton steps.
    pub minimum: (f64, f64),
    pub violation: Option<Violation>,
}

/// Membership of `a` in `space`.
pub fn membership(a: &SpectralDensity, space: &ParameterSpace) -> Result<Membership> {
    if space.grid_size < 256 {
        return Err(Error::RangeError(format!("grid size {} below 256", space.grid_size)));
    }
    let bound = space.kind.bound();
    if !(bound > 0.0) {
        return Err(Error::RangeError(format!("M = {bound} must be positive")));
    }
    let (norm, support) = match space.kind {
        SpaceKind::Theta1 { alpha, .. } => (a.sobolev_norm(alpha).1, None),
        SpaceKind::Theta2 { d, .. } | SpaceKind::Theta2Prime { d, .. } => {
            let beyond = (d + 1..=a.k_max()).find(|&k| a.coeff(k as i64).norm() != 0.0);
            let norm = match space.kind {
                SpaceKind::Theta2Prime { .. } => match RealParam::from_density(a, d) {
                    Ok(p) => p.norm_sq(),
                    Err(_) => f64::INFINITY,
                },
                _ => (-(d as i64)..=d as i64).map(|j| a.coeff(j).norm_sqr()).sum(),
            };
            (norm, beyond)
        }
    };
    let minimum = a.global_min(space.grid_size);
    let limit = 1.0 + 1.0 / bound;
    let violation = if let Some(lag) = support {
        Some(Violation::Support { lag })
    } else if norm > bound {
        Some(Violation::Norm { value: norm, limit: bound })
    } else if minimum.1 < limit - 1e-12 {
        Some(Violation::LowerBound { omega: minimum.0, value: minimum.1, limit })
    } else {
        None
    };
    Ok(Membership { member: violation.is_none(), minimum, violation })
}

/// `t_{j,n} = 2π(j/n − 1/2)`, `j = 1..n`.
pub fn point_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 2.0 * PI * (j as f64 / n as f64 - 0.5)).collect()
}

/// `ω_{j,m} = 2πj/m`, `j = −(m−1)/2..(m−1)/2`.
pub fn fourier_grid(m: usize) -> Result<Vec<f64>> {
    if m.is_multiple_of(2) || m == 0 {
        return Err(Error::RangeError(format!("Fourier grid needs odd m, got {m}")));
    }
    let h = ((m - 1) / 2) as i64;
    Ok((-h..=h).map(|j| 2.0 * PI * j as f64 / m as f64).collect())
}

/// Both grids at once.
pub fn grids(n: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::RangeError("point grid needs n >= 1".into()));
    }
    Ok((point_grid(n), fourier_grid(m)?))
}

/// `L` equispaced points `−π + 2πl/L` on the period.
pub fn uniform_grid(l: usize) -> Vec<f64> {
    (0..l).map(|i| -PI + 2.0 * PI * i as f64 / l as f64).collect()
}

/// `(1/2π)∫ f` by the periodic trapezoid rule on `nodes` points.
pub fn periodic_mean(nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    uniform_grid(nodes).into_iter().map(f).sum::<f64>() / nodes as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn two_plus_cos() -> SpectralDensity {
        SpectralDensity::from_real(&[2.0, 0.5]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(SpectralDensity::constant(2.0).eval(1.0), 2.0);
        assert!((two_plus_cos().eval(0.0) - 3.0).abs() < TOL);
        assert!((two_plus_cos().eval(PI / 2.0) - 2.0).abs() < TOL);
        assert!((SpectralDensity::cosine(2.0, 0.5).eval(PI) - 1.5).abs() < TOL);
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(reduce_angle(PI), PI);
        assert_eq!(reduce_angle(-PI), PI);
        assert!((reduce_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((reduce_angle(0.25)) == 0.25);
    }

    #[test]
    fn asymmetric_lags_rejected() {
        let bad = SpectralDensity::from_lags(&[
            (0, Complex64::new(2.0, 0.0)),
            (1, Complex64::new(0.3, 0.1)),
            (-1, Complex64::new(0.3, 0.1)),
        ]);
        assert!(matches!(bad, Err(Error::HermitianSymmetryViolation { lag: 1, .. })));
        let ok = SpectralDensity::from_lags(&[
            (0, Complex64::new(2.0, 0.0)),
            (1, Complex64::new(0.3, 0.1)),
            (-1, Complex64::new(0.3, -0.1)),
        ])
        .unwrap();
        assert_eq!(ok.coeff(-1), Complex64::new(0.3, -0.1));
        let imag0 = SpectralDensity::from_nonnegative(vec![Complex64::new(1.0, 1e-3)]);
        assert!(matches!(imag0, Err(Error::HermitianSymmetryViolation { lag: 0, .. })));
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(SpectralDensity::constant(2.0).sobolev_norm(1.0), (0.0, 4.0));
        let (s, n) = two_plus_cos().sobolev_norm(1.0);
        assert!((s - 0.5).abs() < TOL && (n - 4.5).abs() < TOL);
        let a = SpectralDensity::from_real(&[2.0, 0.0, 0.25]).unwrap();
        let (s, n) = a.sobolev_norm(2.0);
        assert!((s - 2.0).abs() < TOL && (n - 6.0).abs() < TOL);
    }

    #[test]
    fn membership_examples() {
        let th1 = ParameterSpace::new(SpaceKind::Theta1 { alpha: 1.0, m: 4.0 });
        assert!(membership(&SpectralDensity::constant(2.0), &th1).unwrap().member);
        let low = membership(&SpectralDensity::constant(1.0), &th1).unwrap();
        assert!(matches!(low.violation, Some(Violation::LowerBound { .. })));
        // 2 + cos ω touches 1 at π, below 1 + 1/5.
        let th2 = ParameterSpace::new(SpaceKind::Theta2 { d: 1, m: 5.0 });
        let r = membership(&two_plus_cos(), &th2).unwrap();
        assert!(!r.member);
        assert!((r.minimum.1 - 1.0).abs() < TOL);
        // 2 + 0.5 cos ω has minimum 1.5 and coefficient norm 4.125.
        assert!(membership(&SpectralDensity::cosine(2.0, 0.5), &th2).unwrap().member);
        let wide = SpectralDensity::from_real(&[2.0, 0.0, 0.1]).unwrap();
        let r = membership(&wide, &th2).unwrap();
        assert_eq!(r.violation, Some(Violation::Support { lag: 2 }));
    }

    #[test]
    fn membership_grid_floor() {
        let s = ParameterSpace::with_grid(SpaceKind::Theta1 { alpha: 1.0, m: 4.0 }, 100);
        assert!(membership(&SpectralDensity::constant(2.0), &s).is_err());
    }

    #[test]
    fn newton_min_matches_fine_grid() {
        let a = SpectralDensity::from_lags(&[
            (0, Complex64::new(3.0, 0.0)),
            (1, Complex64::new(0.4, 0.3)),
            (2, Complex64::new(-0.2, 0.25)),
        ])
        .unwrap();
        let (_, v) = a.global_min(1024);
        let fine = uniform_grid(1 << 20).into_iter().map(|w| a.eval(w)).fold(f64::INFINITY, f64::min);
        assert!(v <= fine + 1e-13);
        assert!(fine - v < 1e-10);
    }

    #[test]
    fn local_average_examples() {
        assert_eq!(SpectralDensity::constant(3.0).local_averages(5).unwrap(), vec![3.0; 5]);
        let j1 = two_plus_cos().local_averages(1).unwrap();
        assert!((j1[0] - 2.0).abs() < TOL);
        // Midpoint-rule oracle on each cell.
        let a = two_plus_cos();
        let n = 4;
        let j = a.local_averages(n).unwrap();
        let pts = 1_000_000;
        for (c, &jc) in j.iter().enumerate() {
            let lo = c as f64 / n as f64;
            let h = 1.0 / (n as f64 * pts as f64);
            let s: f64 = (0..pts).map(|i| a.eval(2.0 * PI * (lo + (i as f64 + 0.5) * h - 0.5))).sum();
            assert!((s / pts as f64 - jc).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_examples() {
        let a = two_plus_cos();
        assert_eq!(a.fourier_truncate(5).unwrap(), a);
        let b = SpectralDensity::from_real(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert_eq!(b.fourier_truncate(3).unwrap().coeffs().len(), 2);
        let geo: Vec<f64> = (0..=30).map(|k| 0.5f64.powi(k)).collect();
        let g = SpectralDensity::from_real(&geo).unwrap();
        let tail = 2.0 * (5..=30).map(|k| 0.5f64.powi(k)).sum::<f64>();
        assert!(g.truncation_sup_error(9).unwrap() <= tail + 1e-14);
        assert!(SpectralDensity::constant(1.0).fourier_truncate(4).is_err());
    }

    #[test]
    fn piecewise_rate() {
        let a = two_plus_cos();
        let d8 = a.piecewise_project(8).unwrap().l2_dist_sq(&a);
        let d16 = a.piecewise_project(16).unwrap().l2_dist_sq(&a);
        assert!(d8 / d16 >= 3.9, "ratio {}", d8 / d16);
        let one = a.piecewise_project(1).unwrap();
        assert!((one.heights[0] - 2.0).abs() < TOL);
    }

    #[test]
    fn grid_examples() {
        let (t, w) = grids(2, 3).unwrap();
        assert!((t[0]).abs() < 1e-15 && (t[1] - PI).abs() < 1e-15);
        assert!((w[0] + 2.0 * PI / 3.0).abs() < 1e-15 && w[1] == 0.0);
        // Cell midpoints of W_{j,5} sit on ω_{j−3,5}.
        let w5 = fourier_grid(5).unwrap();
        for j in 1..=5 {
            let mid = 2.0 * PI * ((j as f64 - 0.5) / 5.0 - 0.5);
            assert!((mid - w5[j - 1]).abs() < 1e-14);
        }
    }

    #[test]
    fn real_param_round_trip() {
        let a = SpectralDensity::from_lags(&[
            (0, Complex64::new(3.0, 0.0)),
            (1, Complex64::new(0.2, -0.1)),
            (2, Complex64::new(0.05, 0.07)),
        ])
        .unwrap();
        let p = RealParam::from_density(&a, 2).unwrap();
        let back = p.to_density();
        for k in 0..=2 {
            assert!((back.coeff(k) - a.coeff(k)).norm() < 1e-14);
        }
        for &w in &[0.0, 0.7, -2.1, PI] {
            assert!((p.eval(w) - a.eval(w)).abs() < 1e-13);
        }
        assert!(RealParam::from_density(&a, 1).is_err());
    }

    #[test]
    fn psi_orthonormal() {
        for j in -3i64..=3 {
            for k in -3i64..=3 {
                let ip = periodic_mean(64, |w| psi(j, w) * psi(k, w));
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn from_fn_recovers_coefficients() {
        let a = SpectralDensity::from_fn(|w| 2.0 + 0.6 * w.cos() - 0.2 * (2.0 * w).sin(), 3).unwrap();
        assert!((a.coeff(0).re - 2.0).abs() < 1e-14);
        assert!((a.coeff(1) - Complex64::new(0.3, 0.0)).norm() < 1e-14);
        assert!((a.coeff(2) - Complex64::new(0.0, 0.1)).norm() < 1e-14);
        assert!(a.coeff(3).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let a = SpectralDensity::from_lags(&[(0, Complex64::new(2.0, 0.0)), (2, Complex64::new(0.1, 0.2))]).unwrap();
        let s = serde_json::to_string(&a.to_json()).unwrap();
        assert!(s.contains("\"K_max\":2"));
        let back = SpectralDensity::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, a);
        let bad: std::result::Result<DensityJson, _> = serde_json::from_str(r#"{"K_max":0,"coeffs":[],"x":1}"#);
        assert!(bad.is_err());
    }
}
