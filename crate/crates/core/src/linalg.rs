//! Small dense kernels: Vandermonde rows, SPD solves, log-space helpers.
//!
//! Matrices here are at most `(r+1)×(r+1)` for the regression normal
//! equations or `η×η` for observed-information matrices, so everything is
//! plain row-major `Vec` storage with no blocking.

use crate::error::{CwmError, Result};
use crate::scalar::Scalar;

/// Relative pivot floor used by [`solve_spd`] and [`Cholesky::factor`].
pub const PIVOT_FLOOR: f64 = 1e-12;

/// `(1, x, x², …, x^r)`.
pub fn vandermonde<T: Scalar>(x: T, degree: usize) -> Vec<T> {
    let mut row = Vec::with_capacity(degree + 1);
    let mut p = T::one();
    row.push(p);
    for _ in 0..degree {
        p = p * x;
        row.push(p);
    }
    row
}

/// Evaluates `Σ_l beta[l] x^l` by Horner's rule.
pub fn poly_eval<T: Scalar>(beta: &[T], x: T) -> T {
    beta.iter().rev().fold(T::zero(), |acc, &b| acc * x + b)
}

/// Symmetric square matrix. Writes through [`SymMatrix::set`] mirror both
/// triangles, so symmetry holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from a full row-major matrix, reading only the lower triangle.
    pub fn from_lower(dim: usize, rows: &[T]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(CwmError::ShapeMismatch {
                expected: format!("{} entries", dim * dim),
                found: format!("{} entries", rows.len()),
            });
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, rows[i * dim + j]);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `weight · v vᵀ`.
    pub fn add_outer(&mut self, weight: T, v: &[T]) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let wi = weight * v[i];
            for j in 0..=i {
                let idx = i * self.dim + j;
                self.data[idx] = self.data[idx] + wi * v[j];
            }
        }
        for i in 0..self.dim {
            for j in 0..i {
                self.data[j * self.dim + i] = self.data[i * self.dim + j];
            }
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_diag(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    dim: usize,
    lower: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`CwmError::SingularMatrix`] when a pivot drops below
    /// `PIVOT_FLOOR` times the largest diagonal entry of `a`.
    pub fn factor(a: &SymMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let floor = T::lit(PIVOT_FLOOR) * a.max_diag();
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) || !d.is_finite() || d <= T::zero() {
                return Err(CwmError::SingularMatrix { pivot: j });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s = s - self.lower[i * n + k] * z[k];
            }
            z[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s = s - self.lower[k * n + i] * z[k];
            }
            z[i] = s / self.lower[i * n + i];
        }
        z
    }

    pub fn inverse(&self) -> SymMatrix<T> {
        let n = self.dim;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for (i, &v) in col.iter().enumerate().skip(j) {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn solve_spd<T: Scalar>(a: &SymMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != a.dim() {
        return Err(CwmError::ShapeMismatch {
            expected: format!("rhs of length {}", a.dim()),
            found: format!("length {}", b.len()),
        });
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

/// `A⁻¹` for symmetric positive-definite `A`.
pub fn inverse_spd<T: Scalar>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    Ok(Cholesky::factor(a)?.inverse())
}

/// `ln Σ exp(v_i)`, shifted by the maximum.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> Result<T> {
    let max = values.iter().copied().fold(T::neg_infinity(), |a, b| a.max(b));
    if max == T::neg_infinity() {
        return Err(CwmError::AllNegInfinity);
    }
    if max == T::infinity() {
        return Ok(max);
    }
    let s: T = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + s.ln())
}

/// Log density of `N(mu, sigma²)` at `x`.
pub fn log_normal_pdf<T: Scalar>(x: T, mu: T, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return Err(CwmError::NonPositiveScale(sigma.to_f64_lossy()));
    }
    Ok(log_normal_pdf_unchecked(x, mu, sigma))
}

#[inline]
pub(crate) fn log_normal_pdf_unchecked<T: Scalar>(x: T, mu: T, sigma: T) -> T {
    let z = (x - mu) / sigma;
    -T::half_ln_two_pi() - sigma.ln() - T::lit(0.5) * z * z
}
