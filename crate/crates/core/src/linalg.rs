//! Dense Hermitian helpers shared by the matrix-valued modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) type CMat = DMatrix<Complex64>;

const EIG_MAX_ITER: usize = 100_000;

/// Eigendecomposition `M = V diag(λ) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub(crate) struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEig {
    pub fn new(m: &CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionError(format!(
                "eigendecomposition of a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(HermEig { values: vec![], vectors: CMat::zeros(0, 0) });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::EigenFailure("non-finite matrix entry".into()));
        }
        let (raw_values, raw_vectors) = match SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER) {
            Some(e) if e.eigenvalues.iter().chain(e.eigenvectors.iter().map(|z| &z.re)).all(|v| v.is_finite()) => {
                (e.eigenvalues.iter().copied().collect::<Vec<f64>>(), e.eigenvectors)
            }
            // The tridiagonal QR can break down on matrices with exactly zero
            // columns below the diagonal; Jacobi has no such failure mode.
            _ => jacobi_eigen(m)?,
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| raw_values[i].total_cmp(&raw_values[j]));
        let values: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &raw_vectors.column(src));
        }
        Ok(HermEig { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `V diag(f(λ)) V*`.
    #[cfg(test)]
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let diag: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        with_spectrum(&self.vectors, &diag)
    }
}

/// `V diag(d) V*`.
pub(crate) fn with_spectrum(v: &CMat, d: &[f64]) -> CMat {
    let mut scaled = v.clone();
    for (j, &dj) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(dj);
    }
    &scaled * v.adjoint()
}

pub(crate) fn max_hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

/// `(M + M*)/2`, exactly Hermitian.
pub(crate) fn hermitian_part(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut out = m.clone();
    for j in 0..n {
        out[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
        for k in (j + 1)..n {
            let v = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
            out[(j, k)] = v;
            out[(k, j)] = v.conj();
        }
    }
    out
}

pub(crate) fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub(crate) fn sym_eigvals(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `L` with `L Lᵀ = S` for a symmetric PSD `S`, via eigendecomposition.
pub(crate) fn psd_factor(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut l = eig.eigenvectors.clone();
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -tol {
            return Err(Error::NotPSD(format!("eigenvalue {v:.3e}")));
        }
        l.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    Ok(l)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi: `A ← G*AG` with `G` zeroing one off-diagonal pair at
/// a time, until the off-diagonal mass is below `ε·‖A‖_F`.
pub(crate) fn jacobi_eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    let mut a = hermitian_part(m);
    let mut v = CMat::identity(n, n);
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);
    let off = |a: &CMat| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[(p, q)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= f64::EPSILON * scale {
            let values = (0..n).map(|j| a[(j, j)].re).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let abs_g = g.norm();
                if abs_g <= f64::MIN_POSITIVE {
                    continue;
                }
                let e = g / abs_g;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * abs_g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -e.conj() * s;
                let gqq = e.conj() * c;
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * gpp + y * gqp;
                    a[(k, q)] = x * gpq + y * gqq;
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * gpp + y * gqp;
                    v[(k, q)] = x * gpq + y * gqq;
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = gpp.conj() * x + gqp.conj() * y;
                    a[(q, k)] = gpq.conj() * x + gqq.conj() * y;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Err(Error::NonConvergence { iterations: JACOBI_MAX_SWEEPS, residual: off(&a) / scale })
}
