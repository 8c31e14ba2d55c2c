//! Gauge-invariant centred Gaussian states given by their symbols.
//!
//! A symbol `A ≥ I` fixes the state; `Q = (A − I)/2` is the normally ordered
//! covariance and `R = (A − I)(A + I)^{−1}` has spectrum in `[0, 1)`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{self, CMat, HermEig};
use crate::toeplitz::{hs_distance, op_distance, SymbolMatrix};
use crate::{Error, Result};

/// Entropy routines refuse symbols with `λ_min(A) − 1` at or below this.
pub const EPS_FAITHFUL: f64 = 1e-8;
/// Slack on `λ_min(A) ≥ 1` for admissibility.
pub const ADMISSIBLE_TOL: f64 = 1e-10;
/// Eigenvalues of `R` are clamped into `[EPS_CLAMP, 1 − EPS_CLAMP]`.
pub const EPS_CLAMP: f64 = 1e-14;
/// Largest rounding excursion the clamp is allowed to absorb.
pub const CLAMP_LIMIT: f64 = 1e-12;

/// A state with memoised eigendecomposition of its symbol.
#[derive(Debug)]
pub struct GaussState {
    symbol: SymbolMatrix,
    eig: OnceLock<HermEig>,
}

impl Clone for GaussState {
    fn clone(&self) -> Self {
        GaussState { symbol: self.symbol.clone(), eig: self.eig.clone() }
    }
}

impl GaussState {
    /// Requires `λ_min(A) ≥ 1` up to [`ADMISSIBLE_TOL`].
    pub fn new(symbol: SymbolMatrix) -> Result<Self> {
        let eig = HermEig::new(symbol.entries())?;
        if eig.min() < 1.0 - ADMISSIBLE_TOL {
            return Err(Error::NotFaithful { margin: eig.min() - 1.0 });
        }
        let cell = OnceLock::new();
        let _ = cell.set(eig);
        Ok(GaussState { symbol, eig: cell })
    }

    pub fn symbol(&self) -> &SymbolMatrix {
        &self.symbol
    }

    pub fn n(&self) -> usize {
        self.symbol.n()
    }

    fn eig(&self) -> Result<&HermEig> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = HermEig::new(self.symbol.entries())?;
        Ok(self.eig.get_or_init(|| e))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eig()?.min())
    }

    pub fn is_faithful(&self) -> Result<bool> {
        Ok(self.lambda_min()? - 1.0 > EPS_FAITHFUL)
    }

    fn require_faithful(&self) -> Result<&HermEig> {
        let e = self.eig()?;
        if e.min() - 1.0 <= EPS_FAITHFUL {
            return Err(Error::NotFaithful { margin: e.min() - 1.0 });
        }
        Ok(e)
    }

    /// `Q = (A − I)/2`.
    pub fn q(&self) -> CMat {
        let n = self.n();
        (self.symbol.entries() - CMat::identity(n, n)) * Complex64::new(0.5, 0.0)
    }

    /// `R = (A − I)(A + I)^{−1}`, obtained from the Hermitian solve
    /// `(A + I) R = A − I` (the two factors commute).
    pub fn r(&self) -> Result<CMat> {
        let n = self.n();
        let id = CMat::identity(n, n);
        let plus = self.symbol.entries() + &id;
        let minus = self.symbol.entries() - &id;
        let chol = plus
            .cholesky()
            .ok_or_else(|| Error::NotPSD("A + I is not positive definite".into()))?;
        Ok(linalg::hermitian_part(&chol.solve(&minus)))
    }

    /// Spectrum of `R` from that of `A`: `r = (λ − 1)/(λ + 1)`.
    pub fn r_spectrum(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values.iter().map(|&l| (l - 1.0) / (l + 1.0)).collect())
    }

    /// Real `2n×2n` covariance of the canonical variables.
    pub fn covariance(&self) -> DMatrix<f64> {
        covariance_from_symbol(&self.symbol)
    }
}

/// `Σ(A) = ½[[Re A, −Im A], [Im A, Re A]]`.
pub fn covariance_from_symbol(a: &SymbolMatrix) -> DMatrix<f64> {
    let n = a.n();
    let e = a.entries();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = e[(i % n, j % n)];
        0.5 * match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `R` spectrum after the rounding clamp; rejects values outside `(0, 1)`
/// by more than [`CLAMP_LIMIT`].
fn clamp_unit_spectrum(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&r| {
            if !(r > -CLAMP_LIMIT && r < 1.0 + CLAMP_LIMIT) {
                return Err(Error::SpectralRangeError(format!("eigenvalue {r} of R outside (0, 1)")));
            }
            let c = r.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
            if (c - r).abs() > CLAMP_LIMIT {
                return Err(Error::EigenFailure(format!("clamp of {r} exceeds {CLAMP_LIMIT:e}")));
            }
            Ok(c)
        })
        .collect()
}

/// `log R` and `log(I − R)` from an eigendecomposition of `R`.
struct UnitLogs {
    r: CMat,
    log_r: CMat,
    log_one_minus: CMat,
}

impl UnitLogs {
    fn from_eig(vectors: &CMat, r: &[f64]) -> Result<Self> {
        let r = clamp_unit_spectrum(r)?;
        let lr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let l1: Vec<f64> = r.iter().map(|v| (-v).ln_1p()).collect();
        Ok(UnitLogs {
            r: linalg::with_spectrum(vectors, &r),
            log_r: linalg::with_spectrum(vectors, &lr),
            log_one_minus: linalg::with_spectrum(vectors, &l1),
        })
    }

    fn from_matrix(r: &CMat) -> Result<Self> {
        let e = HermEig::new(r)?;
        Self::from_eig(&e.vectors, &e.values)
    }

    /// From a symbol, sharing its eigenvectors.
    fn from_state(s: &GaussState) -> Result<Self> {
        let e = s.require_faithful()?;
        let r: Vec<f64> = e.values.iter().map(|&l| (l - 1.0) / (l + 1.0)).collect();
        Self::from_eig(&e.vectors, &r)
    }
}

fn s2_from_logs(one: &UnitLogs, two: &UnitLogs) -> CMat {
    let n = one.r.nrows();
    let id = CMat::identity(n, n);
    &one.r * (&one.log_r - &two.log_r) + (&id - &one.r) * (&one.log_one_minus - &two.log_one_minus)
}

/// `S_2(R_1‖R_2) = R_1(log R_1 − log R_2) + (I − R_1)(log(I − R_1) − log(I − R_2))`.
pub fn s2_matrix(r1: &CMat, r2: &CMat) -> Result<CMat> {
    if r1.shape() != r2.shape() || !r1.is_square() {
        return Err(Error::DimensionError(format!("{:?} vs {:?}", r1.shape(), r2.shape())));
    }
    let one = UnitLogs::from_matrix(r1)?;
    let two = UnitLogs::from_matrix(r2)?;
    let s = s2_from_logs(&one, &two);
    Ok(linalg::hermitian_part(&s))
}

/// Relative entropy `S(ρ_1‖ρ_2) = Re Tr[(I + Q_1) S_2(R_1‖R_2)]`.
pub fn relative_entropy(a1: &GaussState, a2: &GaussState) -> Result<f64> {
    if a1.n() != a2.n() {
        return Err(Error::DimensionError(format!("{} vs {}", a1.n(), a2.n())));
    }
    let one = UnitLogs::from_state(a1)?;
    let two = UnitLogs::from_state(a2)?;
    let n = a1.n();
    let weight = a1.q() + CMat::identity(n, n);
    let prod = weight * s2_from_logs(&one, &two);
    let tr = prod.trace();
    let s = tr.re;
    if tr.im.abs() >= 1e-8 * (1.0 + s.abs()) {
        return Err(Error::EigenFailure(format!("relative entropy has imaginary part {}", tr.im)));
    }
    if s < -1e-10 {
        return Err(Error::EigenFailure(format!("negative relative entropy {s:.3e}")));
    }
    Ok(s.max(0.0))
}

/// Upper bound `√(2S)` on the trace distance `‖ρ_1 − ρ_2‖₁`.
pub fn pinsker_trace_bound(a1: &GaussState, a2: &GaussState) -> Result<f64> {
    Ok((2.0 * relative_entropy(a1, a2)?).sqrt())
}

/// Smallest `λ ∈ (1/2, 1)` with `(1 − λ)I < R_i < λI` for both states,
/// padded by `margin` inside the open bracket.
pub fn bracket_lambda(a1: &GaussState, a2: &GaussState, margin: f64) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in [a1, a2] {
        let r = s.r_spectrum()?;
        lo = lo.min(r[0]);
        hi = hi.max(r[r.len() - 1]);
    }
    let lambda = (0.5f64).max(hi).max(1.0 - lo) + margin;
    if lambda >= 1.0 {
        return Err(Error::SpectralRangeError(format!("no bracket: R spectrum in [{lo}, {hi}]")));
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBoundReport {
    pub lambda: f64,
    pub delta: f64,
    pub s: f64,
    /// `‖R_1 − R_2‖₂` and `‖R_1 − R_2‖_op`.
    pub h_hs: f64,
    pub h_op: f64,
    /// `‖A_1 − A_2‖₂` and `‖A_1 − A_2‖_op`.
    pub a_hs: f64,
    pub a_op: f64,
    /// `‖H‖₂ < δ`, the precondition of the entropy bound.
    pub applies: bool,
    /// Vacuous when the precondition fails, else `S ≤ ‖H‖₂²/δ`.
    pub holds: bool,
    /// `‖H‖₂² ≤ (1 − λ)^{−2}‖A_1 − A_2‖₂²`.
    pub symbol_form_holds: bool,
}

/// Local entropy bound in terms of `H = R_1 − R_2` with
/// `δ = min((1 − λ)/2, (1 − λ)³/(8λ))`.
pub fn entropy_symbol_bound(a1: &GaussState, a2: &GaussState, lambda: f64) -> Result<SymbolBoundReport> {
    if !(lambda > 0.5 && lambda < 1.0) {
        return Err(Error::RangeError(format!("lambda = {lambda} outside (1/2, 1)")));
    }
    for s in [a1, a2] {
        let r = s.r_spectrum()?;
        if !(r[0] > 1.0 - lambda && r[r.len() - 1] < lambda) {
            return Err(Error::SpectralRangeError(format!(
                "R spectrum [{}, {}] not inside ({}, {lambda})",
                r[0],
                r[r.len() - 1],
                1.0 - lambda
            )));
        }
    }
    let delta = ((1.0 - lambda) / 2.0).min((1.0 - lambda).powi(3) / (8.0 * lambda));
    let s = relative_entropy(a1, a2)?;
    let h = SymbolMatrix::general(a1.r()? - a2.r()?)?;
    let zero = SymbolMatrix::from_real_diagonal(&vec![0.0; a1.n()]);
    let h_hs = hs_distance(&h, &zero)?;
    let h_op = crate::toeplitz::op_norm(&h)?;
    let a_hs = hs_distance(a1.symbol(), a2.symbol())?;
    let a_op = op_distance(a1.symbol(), a2.symbol())?;
    let applies = h_hs < delta;
    let holds = !applies || s <= h_hs * h_hs / delta + 1e-9;
    let symbol_form_holds = h_hs * h_hs <= a_hs * a_hs / (1.0 - lambda).powi(2) + 1e-12;
    Ok(SymbolBoundReport { lambda, delta, s, h_hs, h_op, a_hs, a_op, applies, holds, symbol_form_holds })
}

/// Photon-number law of a one-mode thermal state: `(1 − p)p^k`,
/// `p = (a − 1)/(a + 1)`, with tail mass `p^{k_max+1}`.
pub fn thermal_pmf(a: f64, k_max: usize) -> Result<(Vec<f64>, f64)> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::RangeError(format!("thermal symbol a = {a} must exceed 1")));
    }
    let p = (a - 1.0) / (a + 1.0);
    let pmf = (0..=k_max).map(|k| (1.0 - p) * p.powi(k as i32)).collect();
    Ok((pmf, p.powi(k_max as i32 + 1)))
}
