//! Geometric and negative-binomial laws, Hellinger distances, Chernoff
//! exponents and the arccosh variance-stabilising transform.
//!
//! Hellinger convention: `H²(P, Q) = Σ(√p − √q)² = 2(1 − BC)` with `BC` the
//! Bhattacharyya coefficient, except where a function says otherwise.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::spectral::{periodic_mean, SpectralDensity};
use crate::{Error, Result};

/// Series truncate once the remaining tail mass is below this.
pub const SERIES_TAIL: f64 = 1e-14;
/// Interval tolerance of the golden-section search.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Quadrature nodes for the quantum Chernoff integral.
pub const CHERNOFF_NODES: usize = 4096;

fn check_symbol(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::RangeError(format!("symbol value {a} must exceed 1")))
    }
}

/// `p = (a − 1)/(a + 1)`.
pub fn p_of(a: f64) -> f64 {
    (a - 1.0) / (a + 1.0)
}

/// Geometric law `(1 − p)p^k`, `k ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometric {
    pub p: f64,
}

impl Geometric {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Geometric { p })
        } else {
            Err(Error::RangeError(format!("geometric p = {p} outside (0, 1)")))
        }
    }

    pub fn from_symbol(a: f64) -> Result<Self> {
        check_symbol(a)?;
        Self::new(p_of(a))
    }

    pub fn pmf(&self, k: u64) -> f64 {
        (1.0 - self.p) * self.p.powf(k as f64)
    }

    pub fn mean(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    /// Smallest `K` with tail mass `p^{K+1}` below [`SERIES_TAIL`].
    pub fn series_len(&self) -> u64 {
        (SERIES_TAIL.ln() / self.p.ln()).ceil().max(1.0) as u64
    }
}

/// Negative binomial `Γ(k + r)/(Γ(r)k!)(1 − p)^r p^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinomial {
    pub r: f64,
    pub p: f64,
}

impl NegBinomial {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !(p > 0.0 && p < 1.0) {
            return Err(Error::RangeError(format!("NB(r = {r}, p = {p}) out of range")));
        }
        Ok(NegBinomial { r, p })
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        let kf = k as f64;
        ln_gamma(kf + self.r) - ln_gamma(self.r) - ln_gamma(kf + 1.0)
            + self.r * (-self.p).ln_1p()
            + kf * self.p.ln()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    pub fn mean(&self) -> f64 {
        self.r * self.p / (1.0 - self.p)
    }

    /// Gamma–Poisson mixture: `λ ~ Gamma(r, scale p/(1 − p))`, `X ~ Poisson(λ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let g = Gamma::new(self.r, self.p / (1.0 - self.p)).expect("validated NB parameters");
        poisson(g.sample(rng), rng)
    }
}

/// `Poisson(λ)` draw; `λ ≤ 0` gives 0.
pub fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite Poisson mean").sample(rng) as u64
}

/// `NB(r, p)` draw.
pub fn nb_sample<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> Result<u64> {
    Ok(NegBinomial::new(r, p)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoStats {
    pub p: f64,
    pub mean: f64,
    pub var: f64,
    /// Upper bound `(5/8)(a + 1)⁴` on the fourth central moment.
    pub m4_bound: f64,
    pub fisher_j: f64,
    pub tau: f64,
}

/// Moments and information of `Geo(p(a))` in the symbol parametrisation.
pub fn geo_stats(a: f64) -> Result<GeoStats> {
    check_symbol(a)?;
    let p = p_of(a);
    Ok(GeoStats {
        p,
        mean: (a - 1.0) / 2.0,
        var: (a * a - 1.0) / 4.0,
        m4_bound: 0.625 * (a + 1.0).powi(4),
        fisher_j: 1.0 / (a * a - 1.0),
        tau: p.ln(),
    })
}

/// `∂_a log pmf(x; a) = (x − (a − 1)/2)·2/(a² − 1)`.
pub fn score(x: u64, a: f64) -> Result<f64> {
    check_symbol(a)?;
    Ok((x as f64 - (a - 1.0) / 2.0) * 2.0 / (a * a - 1.0))
}

/// Bhattacharyya coefficient of two geometrics.
pub fn bhattacharyya_geo(p1: f64, p2: f64) -> f64 {
    ((1.0 - p1) * (1.0 - p2)).sqrt() / (1.0 - (p1 * p2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerGeo {
    pub h2_exact: f64,
    pub h2_bound: f64,
}

/// Exact `H²(Geo(p(λ)), Geo(p(μ)))` and the bound `(λ − μ)²/((λ − 1)(μ − 1))`.
pub fn hellinger_geo(lambda: f64, mu: f64) -> Result<HellingerGeo> {
    check_symbol(lambda)?;
    check_symbol(mu)?;
    let h2_exact = (2.0 * (1.0 - bhattacharyya_geo(p_of(lambda), p_of(mu)))).max(0.0);
    let h2_bound = (lambda - mu).powi(2) / ((lambda - 1.0) * (mu - 1.0));
    Ok(HellingerGeo { h2_exact, h2_bound })
}

/// `r(a_1 − a_2)²/((a_1 − 1)(a_2 − 1))`, bounding `H²(NB(r, p_1), NB(r, p_2))`.
pub fn hellinger_nb_bound_prob(r: f64, a1: f64, a2: f64) -> Result<f64> {
    check_symbol(a1)?;
    check_symbol(a2)?;
    if !(r > 0.0) {
        return Err(Error::RangeError(format!("NB size r = {r} must be positive")));
    }
    Ok(r * (a1 - a2).powi(2) / ((a1 - 1.0) * (a2 - 1.0)))
}

/// `1 − Γ((r_1 + r_2)/2)/(Γ(r_1)Γ(r_2))^{1/2}`, the exact `1 − BC` of the
/// mixing Gamma laws. Bounds `1 − BC` of `NB(r_1, p)` and `NB(r_2, p)`, i.e.
/// half the squared Hellinger distance in the convention of this module.
pub fn hellinger_nb_bound_size(r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::RangeError(format!("NB sizes ({r1}, {r2}) must be positive")));
    }
    Ok(1.0 - (ln_gamma(0.5 * (r1 + r2)) - 0.5 * ln_gamma(r1) - 0.5 * ln_gamma(r2)).exp())
}

/// `BC(NB(r_1, p_1), NB(r_2, p_2))` by direct summation.
pub fn bhattacharyya_nb_series(x: &NegBinomial, y: &NegBinomial) -> f64 {
    let mut bc = 0.0;
    let mut k = 0u64;
    loop {
        let term = (0.5 * (x.ln_pmf(k) + y.ln_pmf(k))).exp();
        bc += term;
        // The term ratio tends to √(p_1p_2); stop when the geometric tail is negligible.
        let ratio = (x.p * y.p).sqrt();
        if k as f64 > (x.mean() + y.mean()) * 2.0 + 10.0 && term / (1.0 - ratio) < SERIES_TAIL * 1e-2 {
            break;
        }
        k += 1;
        if k > 100_000_000 {
            break;
        }
    }
    bc
}

/// `½‖Geo(p_1) − Geo(p_2)‖₁` by direct summation.
pub fn tv_geo(p1: f64, p2: f64) -> f64 {
    let (g1, g2) = (Geometric { p: p1 }, Geometric { p: p2 });
    let len = g1.series_len().max(g2.series_len());
    let head: f64 = (0..=len).map(|k| (g1.pmf(k) - g2.pmf(k)).abs()).sum();
    let tail = p1.powf(len as f64 + 1.0) + p2.powf(len as f64 + 1.0);
    0.5 * (head + tail)
}

/// `KL(Geo(p_1)‖Geo(p_2))` in closed form.
pub fn kl_geo(p1: f64, p2: f64) -> f64 {
    ((1.0 - p1) / (1.0 - p2)).ln() + p1 / (1.0 - p1) * (p1 / p2).ln()
}

/// `ψ̃(t) = −log ½[(a_0 + 1)^t(a_1 + 1)^{1−t} − (a_0 − 1)^t(a_1 − 1)^{1−t}]`,
/// which equals `log Σ_k q_0(k)^t q_1(k)^{1−t} ≤ 0`.
pub fn chernoff_geo(a0: f64, a1: f64, t: f64) -> Result<f64> {
    check_symbol(a0)?;
    check_symbol(a1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::RangeError(format!("t = {t} outside [0, 1]")));
    }
    Ok(chernoff_bracket(a0, a1, t))
}

fn chernoff_bracket(a0: f64, a1: f64, t: f64) -> f64 {
    let plus = t * (a0 + 1.0).ln() + (1.0 - t) * (a1 + 1.0).ln();
    let minus = t * (a0 - 1.0).ln() + (1.0 - t) * (a1 - 1.0).ln();
    // ½e^{plus}(1 − e^{minus − plus}), kept in log form.
    -((0.5f64).ln() + plus + (-(minus - plus).exp()).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffInf {
    pub t_star: f64,
    pub value: f64,
    /// Minimum over the guard grid `t = k/100`.
    pub grid_min: f64,
}

fn golden_min(f: impl Fn(f64) -> f64) -> ChernoffInf {
    let grid_min = (0..=100).map(|k| f(k as f64 / 100.0)).fold(f64::INFINITY, f64::min);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let t_star = 0.5 * (lo + hi);
    let mut value = f(t_star);
    let mut t_star = t_star;
    for t in [0.0, 1.0] {
        let v = f(t);
        if v < value {
            value = v;
            t_star = t;
        }
    }
    ChernoffInf { t_star, value, grid_min }
}

/// `inf_{t∈[0,1]} ψ̃(t)` by golden section.
pub fn chernoff_geo_inf(a0: f64, a1: f64) -> Result<ChernoffInf> {
    check_symbol(a0)?;
    check_symbol(a1)?;
    Ok(golden_min(|t| chernoff_bracket(a0, a1, t)))
}

fn check_density_above_one(a: &SpectralDensity, nodes: usize) -> Result<()> {
    let (w, v) = a.global_min(nodes.max(256));
    if v > 1.0 {
        Ok(())
    } else {
        Err(Error::RangeError(format!("density reaches {v} ≤ 1 at ω = {w}")))
    }
}

/// `ψ(t) = (1/2π)∫ ψ̃_{a_0(ω), a_1(ω)}(t) dω`, periodic trapezoid.
pub fn chernoff_quantum_with(a0: &SpectralDensity, a1: &SpectralDensity, t: f64, nodes: usize) -> Result<f64> {
    check_density_above_one(a0, nodes)?;
    check_density_above_one(a1, nodes)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::RangeError(format!("t = {t} outside [0, 1]")));
    }
    Ok(periodic_mean(nodes, |w| chernoff_bracket(a0.eval(w), a1.eval(w), t)))
}

pub fn chernoff_quantum(a0: &SpectralDensity, a1: &SpectralDensity, t: f64) -> Result<f64> {
    chernoff_quantum_with(a0, a1, t, CHERNOFF_NODES)
}

pub fn chernoff_quantum_inf(a0: &SpectralDensity, a1: &SpectralDensity) -> Result<ChernoffInf> {
    check_density_above_one(a0, CHERNOFF_NODES)?;
    check_density_above_one(a1, CHERNOFF_NODES)?;
    let v0: Vec<f64> = crate::spectral::uniform_grid(CHERNOFF_NODES).iter().map(|&w| a0.eval(w)).collect();
    let v1: Vec<f64> = crate::spectral::uniform_grid(CHERNOFF_NODES).iter().map(|&w| a1.eval(w)).collect();
    Ok(golden_min(|t| {
        v0.iter().zip(&v1).map(|(&x, &y)| chernoff_bracket(x, y, t)).sum::<f64>() / CHERNOFF_NODES as f64
    }))
}

/// `g(a) = arccosh a = log(a + √(a² − 1))`.
pub fn varstab_arccosh(a: f64) -> Result<f64> {
    check_symbol(a)?;
    Ok(a.acosh())
}

/// Derivative of `log(a + √(a² − 1))` by the chain rule.
pub fn varstab_derivative(a: f64) -> Result<f64> {
    check_symbol(a)?;
    let s = (a * a - 1.0).sqrt();
    Ok((1.0 + a / s) / (a + s))
}

/// `|g'(a) − 1/√(a² − 1)|`.
pub fn varstab_ode_residual(a: f64) -> Result<f64> {
    Ok((varstab_derivative(a)? - 1.0 / (a * a - 1.0).sqrt()).abs())
}

/// `(E[X²Y²], Cov(X², Y²))` for a centred bivariate normal.
pub fn gaussian_square_cov(sx2: f64, sy2: f64, sxy: f64) -> Result<(f64, f64)> {
    if sx2 < 0.0 || sy2 < 0.0 || sxy * sxy > sx2 * sy2 * (1.0 + 1e-12) {
        return Err(Error::NotPSD(format!("[[{sx2}, {sxy}], [{sxy}, {sy2}]]")));
    }
    Ok((2.0 * sxy * sxy + sx2 * sy2, 2.0 * sxy * sxy))
}
