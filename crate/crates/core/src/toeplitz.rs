//! Symbol matrices: Toeplitz sections `A_n(a)`, circulant approximants
//! `Ã_m(a)`, the DFT unitary `U_m`, and the matrix-distance bounds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat, HermEig};
use crate::spectral::{fourier_grid, SpectralDensity};
use crate::{Error, Result};

/// Hermitian defect a general matrix may have before it is symmetrised.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Toeplitz,
    Circulant,
    General,
}

/// Dense complex Hermitian matrix with a structural tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    entries: CMat,
    tag: Tag,
}

impl SymbolMatrix {
    /// Accepts a matrix Hermitian up to [`HERMITIAN_TOL`] relative to its
    /// scale and stores its exact Hermitian part.
    pub fn general(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionError(format!("{}x{} symbol", m.nrows(), m.ncols())));
        }
        let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let defect = linalg::max_hermitian_defect(&m);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::InvalidInput(format!("symbol not Hermitian (defect {defect:.3e})")));
        }
        Ok(SymbolMatrix { entries: linalg::hermitian_part(&m), tag: Tag::General })
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (j, &v) in d.iter().enumerate() {
            m[(j, j)] = Complex64::new(v, 0.0);
        }
        SymbolMatrix { entries: m, tag: Tag::General }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymbolMatrix { entries: CMat::identity(n, n) * Complex64::new(c, 0.0), tag: Tag::Toeplitz }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    /// `U* A U` for a unitary `U`, tagged general.
    pub fn conjugate_by(&self, u: &CMat) -> Result<Self> {
        if u.nrows() != self.n() || !u.is_square() {
            return Err(Error::DimensionError(format!(
                "conjugating a {}-dimensional symbol by a {}x{} matrix",
                self.n(),
                u.nrows(),
                u.ncols()
            )));
        }
        Self::general(u.adjoint() * &self.entries * u)
    }

    pub fn eig(&self) -> Result<(f64, f64)> {
        let e = HermEig::new(&self.entries)?;
        Ok((e.min(), e.max()))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(HermEig::new(&self.entries)?.values)
    }

    pub fn to_json(&self) -> MatrixJson {
        let n = self.n();
        let row = |f: fn(&Complex64) -> f64, j: usize| (0..n).map(|k| f(&self.entries[(j, k)])).collect();
        MatrixJson {
            n,
            tag: self.tag,
            re: (0..n).map(|j| row(|z| z.re, j)).collect(),
            im: (0..n).map(|j| row(|z| z.im, j)).collect(),
        }
    }

    pub fn from_json(doc: &MatrixJson) -> Result<Self> {
        let n = doc.n;
        if doc.re.len() != n || doc.im.len() != n || doc.re.iter().chain(&doc.im).any(|r| r.len() != n) {
            return Err(Error::DimensionError(format!("matrix JSON rows do not match n = {n}")));
        }
        let m = CMat::from_fn(n, n, |j, k| Complex64::new(doc.re[j][k], doc.im[j][k]));
        let mut s = Self::general(m)?;
        s.tag = doc.tag;
        s.check_tag()?;
        Ok(s)
    }

    fn check_tag(&self) -> Result<()> {
        let n = self.n();
        let e = &self.entries;
        let ok = match self.tag {
            Tag::General => true,
            Tag::Toeplitz => (0..n).all(|j| (0..n).all(|k| j == 0 || k == 0 || e[(j, k)] == e[(j - 1, k - 1)])),
            Tag::Circulant => is_circulant(e),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("entries do not match tag {:?}", self.tag)))
        }
    }
}

/// Wire format of a symbol (row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub tag: Tag,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

fn is_circulant(e: &CMat) -> bool {
    let n = e.nrows();
    (0..n).all(|j| (0..n).all(|k| e[(j, k)] == e[(0, (k + n - j) % n)]))
}

/// `A[j][k] = a_{k−j}`.
pub fn toeplitz_from_density(a: &SpectralDensity, n: usize) -> Result<SymbolMatrix> {
    if n == 0 {
        return Err(Error::RangeError("symbol dimension must be >= 1".into()));
    }
    let m = CMat::from_fn(n, n, |j, k| a.coeff(k as i64 - j as i64));
    Ok(SymbolMatrix { entries: m, tag: Tag::Toeplitz })
}

/// Circulant with row 0 equal to `(a_0, a_1, …, a_h, a_{−h}, …, a_{−1})`,
/// `h = (m−1)/2`; it agrees with `A_m(a)` on lags `|k| ≤ h`.
pub fn circulant_from_density(a: &SpectralDensity, m: usize) -> Result<SymbolMatrix> {
    if m.is_multiple_of(2) {
        return Err(Error::RangeError(format!("circulant order m = {m} must be odd")));
    }
    let h = ((m - 1) / 2) as i64;
    let lag = |s: usize| -> i64 {
        let s = s as i64;
        if s <= h {
            s
        } else {
            s - m as i64
        }
    };
    let e = CMat::from_fn(m, m, |j, k| a.coeff(lag((k + m - j) % m)));
    Ok(SymbolMatrix { entries: e, tag: Tag::Circulant })
}

/// Unitary with columns `u_j = m^{−1/2}(ε_j^k)_{k=0..m−1}`, `ε_j = e^{2πij/m}`,
/// for `j = −(m−1)/2..(m−1)/2`.
#[derive(Debug, Clone)]
pub struct DftUnitary {
    m: usize,
    mat: CMat,
}

impl DftUnitary {
    pub fn new(m: usize) -> Result<Self> {
        if m.is_multiple_of(2) {
            return Err(Error::RangeError(format!("DFT unitary needs odd m, got {m}")));
        }
        let h = ((m - 1) / 2) as i64;
        let s = (m as f64).sqrt().recip();
        let mat = CMat::from_fn(m, m, |k, c| {
            let j = c as i64 - h;
            // Reduce jk mod m before scaling keeps the phase exact.
            let r = (j * k as i64).rem_euclid(m as i64);
            Complex64::from_polar(s, 2.0 * PI * r as f64 / m as f64)
        });
        Ok(DftUnitary { m, mat })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Column `u_j`, `|j| ≤ (m−1)/2`.
    pub fn column(&self, j: i64) -> Vec<Complex64> {
        let c = (j + ((self.m - 1) / 2) as i64) as usize;
        self.mat.column(c).iter().copied().collect()
    }
}

/// Eigenvalues of a Hermitian circulant indexed by `j = −(m−1)/2..(m−1)/2`:
/// `Σ_k C[0][k] ε_j^k`, which equals `ã_m(ω_{j,m})` for `Ã_m(a)`.
pub fn circulant_eigs(c: &SymbolMatrix) -> Result<Vec<f64>> {
    let m = c.n();
    if m.is_multiple_of(2) {
        return Err(Error::NotCirculant(format!("even dimension {m}")));
    }
    if !is_circulant(&c.entries) {
        return Err(Error::NotCirculant("rows are not cyclic shifts of row 0".into()));
    }
    let w = fourier_grid(m)?;
    Ok(w.iter()
        .map(|&om| {
            (0..m)
                .map(|k| c.entries[(0, k)] * Complex64::from_polar(1.0, om * k as f64))
                .sum::<Complex64>()
                .re
        })
        .collect())
}

/// Upper-left `n×n` block, tagged general.
pub fn principal_submatrix(a: &SymbolMatrix, n: usize) -> Result<SymbolMatrix> {
    if n > a.n() || n == 0 {
        return Err(Error::DimensionError(format!("submatrix of size {n} from {}", a.n())));
    }
    let tag = if n == a.n() { a.tag } else { Tag::General };
    Ok(SymbolMatrix { entries: a.entries.view((0, 0), (n, n)).into_owned(), tag })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `‖A_n(a) − Ã_{n,m}(a)‖₂²` from dense entries.
    pub hs_sq: f64,
    /// The same quantity from the lag sum `2Σ_{k=(m+1)/2}^{n−1}(n−k)|a_k − conj(a_{m−k})|²`.
    pub hs_sq_lag_sum: f64,
    /// `4(m−n+1)^{1−2α}M`.
    pub bound: f64,
}

/// Distance between the Toeplitz section and the section of the circulant.
/// Requires `n < m < 2(n−1)`, `m` odd, `α > 1/2` and `‖a‖²_{2,α} ≤ M`.
pub fn toeplitz_circulant_gap(a: &SpectralDensity, n: usize, m: usize, alpha: f64, big_m: f64) -> Result<GapReport> {
    if m.is_multiple_of(2) || m <= n || m + 2 >= 2 * n {
        return Err(Error::RangeError(format!("need odd m with n < m < 2(n-1); n = {n}, m = {m}")));
    }
    if alpha <= 0.5 {
        return Err(Error::RangeError(format!("alpha = {alpha} must exceed 1/2")));
    }
    let norm = a.sobolev_norm(alpha).1;
    if norm > big_m * (1.0 + 1e-12) {
        return Err(Error::NotAdmissible(format!("Sobolev norm {norm} exceeds M = {big_m}")));
    }
    let an = toeplitz_from_density(a, n)?;
    let cn = principal_submatrix(&circulant_from_density(a, m)?, n)?;
    let diff = &an.entries - &cn.entries;
    let hs_sq = diff.iter().map(|z| z.norm_sqr()).sum();
    let hs_sq_lag_sum = 2.0
        * (m.div_ceil(2)..n)
            .map(|k| (n - k) as f64 * (a.coeff(k as i64) - a.coeff((m - k) as i64).conj()).norm_sqr())
            .sum::<f64>();
    let bound = 4.0 * ((m - n + 1) as f64).powf(1.0 - 2.0 * alpha) * big_m;
    Ok(GapReport { hs_sq, hs_sq_lag_sum, bound })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub inf_a: f64,
    pub sup_a: f64,
    pub pass: bool,
}

/// Compare the spectrum of `A_n(a)` with the range of `a`.
pub fn eigen_bracket_check(a: &SpectralDensity, n: usize) -> Result<BracketReport> {
    let e = toeplitz_from_density(a, n)?.eigenvalues()?;
    let (lambda_min, lambda_max) = (e[0], e[e.len() - 1]);
    let grid = crate::spectral::DEFAULT_GRID;
    let inf_a = a.global_min(grid).1;
    let sup_a = a.global_max(grid).1;
    let pass = inf_a - 1e-9 <= lambda_min && lambda_max <= sup_a + 1e-9;
    Ok(BracketReport { lambda_min, lambda_max, inf_a, sup_a, pass })
}

/// Entrywise `|M_{jl}|²`.
pub fn abs_square(m: &CMat) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |j, k| m[(j, k)].norm_sqr())
}

/// `‖A − B‖₂`.
pub fn hs_distance(a: &SymbolMatrix, b: &SymbolMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionError(format!("{} vs {}", a.n(), b.n())));
    }
    Ok(linalg::frobenius(&(&a.entries - &b.entries)))
}

/// Largest singular value of a Hermitian matrix.
pub fn op_norm(a: &SymbolMatrix) -> Result<f64> {
    let (lo, hi) = a.eig()?;
    Ok(lo.abs().max(hi.abs()))
}

/// `‖A − B‖_op`.
pub fn op_distance(a: &SymbolMatrix, b: &SymbolMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionError(format!("{} vs {}", a.n(), b.n())));
    }
    let d = SymbolMatrix { entries: &a.entries - &b.entries, tag: Tag::General };
    op_norm(&d)
}
