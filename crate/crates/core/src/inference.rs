//! Post-fit uncertainty.
//!
//! Standard errors come from a central finite-difference Hessian of the
//! observed-data log-likelihood at `ψ̂`. The working coordinates are
//!
//! ```text
//! π_1 … π_{k-1} | per component j: β_0j … β_rj, ln σ_εj, μ_X|j, ln σ_X|j
//! ```
//!
//! with `π_k = 1 − Σ π_j`; log-scale standard errors are mapped back with
//! the delta method.

use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::error::{CwmError, Result};
use crate::linalg::{inverse_spd, solve_spd, vandermonde, Cholesky, SymMatrix};
use crate::model::{loglik_unchecked, ComponentParams, Dataset, MixtureKind, MixtureParams};
use crate::scalar::Scalar;

/// Relative finite-difference step: `h_i = step · (1 + |θ_i|)`.
pub const DEFAULT_REL_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStdErrors<T> {
    pub beta: Vec<T>,
    pub sigma_eps: T,
    pub mu_x: T,
    pub sigma_x: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdErrors<T> {
    /// All `k` weights; the last one is derived from the others.
    pub weights: Vec<T>,
    pub components: Vec<ComponentStdErrors<T>>,
    /// Covariance in working coordinates.
    pub covariance: SymMatrix<T>,
}

/// Flattens `psi` into working coordinates.
pub fn pack<T: Scalar>(psi: &MixtureParams<T>) -> Vec<T> {
    let k = psi.k();
    let mut theta: Vec<T> = psi.weights[..k - 1].to_vec();
    for c in &psi.components {
        theta.extend_from_slice(&c.beta);
        theta.push(c.sigma_eps.ln());
        theta.push(c.mu_x);
        theta.push(c.sigma_x.ln());
    }
    theta
}

/// Inverse of [`pack`]. Returns `None` if the implied last weight is not
/// positive.
pub fn unpack<T: Scalar>(theta: &[T], k: usize, degree: usize) -> Option<MixtureParams<T>> {
    let p = degree + 1;
    debug_assert_eq!(theta.len(), working_dim(k, degree));
    let mut weights = theta[..k - 1].to_vec();
    let last = T::one() - weights.iter().copied().sum::<T>();
    weights.push(last);
    if weights.iter().any(|&w| !(w > T::zero())) {
        return None;
    }
    let mut components = Vec::with_capacity(k);
    let mut at = k - 1;
    for _ in 0..k {
        let block = &theta[at..at + p + 3];
        components.push(ComponentParams {
            beta: block[..p].to_vec(),
            sigma_eps: block[p].exp(),
            mu_x: block[p + 1],
            sigma_x: block[p + 2].exp(),
        });
        at += p + 3;
    }
    Some(MixtureParams { weights, components })
}

/// Length of the working coordinate vector, `k·r + 5k − 1`.
pub fn working_dim(k: usize, degree: usize) -> usize {
    k - 1 + k * (degree + 4)
}

/// Central-difference Hessian of `f` at `theta`.
pub fn numerical_hessian<T, F>(f: F, theta: &[T], rel_step: f64) -> Result<SymMatrix<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let d = theta.len();
    let steps: Vec<T> = theta.iter().map(|t| T::lit(rel_step) * (T::one() + t.abs())).collect();
    let f0 = f(theta);
    let eval = |shifts: &[(usize, T)]| {
        let mut t = theta.to_vec();
        for &(i, s) in shifts {
            t[i] = t[i] + s;
        }
        f(&t)
    };
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let entries: Vec<T> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (hi, hj) = (steps[i], steps[j]);
            if i == j {
                (eval(&[(i, hi)]) - T::lit(2.0) * f0 + eval(&[(i, -hi)])) / (hi * hi)
            } else {
                (eval(&[(i, hi), (j, hj)]) - eval(&[(i, hi), (j, -hj)]) - eval(&[(i, -hi), (j, hj)])
                    + eval(&[(i, -hi), (j, -hj)]))
                    / (T::lit(4.0) * hi * hj)
            }
        })
        .collect();
    let mut h = SymMatrix::zeros(d);
    for (&(i, j), &v) in pairs.iter().zip(&entries) {
        if !v.is_finite() {
            return Err(CwmError::NumericalBreakdown(format!(
                "non-finite second difference at ({i}, {j})"
            )));
        }
        h.set(i, j, v);
    }
    Ok(h)
}

/// `(−H)⁻¹` for a Hessian `H` of a log-likelihood.
pub fn covariance_from_hessian<T: Scalar>(hessian: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let neg = hessian.scale(-T::one());
    match Cholesky::factor(&neg) {
        Ok(c) => Ok(c.inverse()),
        Err(CwmError::SingularMatrix { pivot }) => Err(CwmError::HessianNotPd { direction: pivot }),
        Err(e) => Err(e),
    }
}

/// Standard errors of `psi_hat` from the inverted negative Hessian.
pub fn standard_errors<T: Scalar>(data: &Dataset<T>, psi_hat: &MixtureParams<T>) -> Result<StdErrors<T>> {
    let step = DEFAULT_REL_STEP.max(T::epsilon().to_f64_lossy().cbrt());
    standard_errors_with_step(data, psi_hat, step)
}

pub fn standard_errors_with_step<T: Scalar>(
    data: &Dataset<T>,
    psi_hat: &MixtureParams<T>,
    rel_step: f64,
) -> Result<StdErrors<T>> {
    psi_hat.validate()?;
    data.check_labels(psi_hat.k())?;
    let (k, r) = (psi_hat.k(), psi_hat.degree());
    let theta = pack(psi_hat);
    let objective = |t: &[T]| match unpack(t, k, r) {
        Some(psi) => {
            let log_w: Vec<T> = psi.weights.iter().map(|w| w.ln()).collect();
            loglik_unchecked(MixtureKind::ClusterWeighted, data, &psi, &log_w)
        }
        None => T::nan(),
    };
    let hessian = numerical_hessian(objective, &theta, rel_step)?;
    let cov = covariance_from_hessian(&hessian)?;
    Ok(assemble(psi_hat, cov))
}

fn assemble<T: Scalar>(psi: &MixtureParams<T>, cov: SymMatrix<T>) -> StdErrors<T> {
    let (k, r) = (psi.k(), psi.degree());
    let p = r + 1;
    let sd = |i: usize| cov.get(i, i).max(T::zero()).sqrt();
    let mut weights: Vec<T> = (0..k - 1).map(sd).collect();
    let mut var_last = T::zero();
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            var_last = var_last + cov.get(i, j);
        }
    }
    weights.push(var_last.max(T::zero()).sqrt());
    let mut components = Vec::with_capacity(k);
    let mut at = k - 1;
    for c in &psi.components {
        components.push(ComponentStdErrors {
            beta: (at..at + p).map(sd).collect(),
            sigma_eps: c.sigma_eps * sd(at + p),
            mu_x: sd(at + p + 1),
            sigma_x: c.sigma_x * sd(at + p + 2),
        });
        at += p + 3;
    }
    StdErrors {
        weights,
        components,
        covariance: cov,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsCoefficient<T> {
    pub estimate: T,
    pub std_error: T,
    pub t_value: T,
    pub p_value: f64,
}

/// Ordinary least-squares polynomial fit with classical inference.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsReport<T> {
    pub coefficients: Vec<OlsCoefficient<T>>,
    /// `sqrt(RSS / df)`.
    pub residual_scale: T,
    pub rss: T,
    pub df: usize,
    pub residuals: Vec<T>,
}

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

pub fn ols_polyfit<T: Scalar>(x: &[T], y: &[T], degree: usize) -> Result<OlsReport<T>> {
    if x.len() != y.len() {
        return Err(CwmError::ShapeMismatch {
            expected: format!("{} responses", x.len()),
            found: y.len().to_string(),
        });
    }
    let n = x.len();
    let p = degree + 1;
    if n <= p {
        return Err(CwmError::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    let mut gram = SymMatrix::zeros(p);
    let mut rhs = vec![T::zero(); p];
    for (&xi, &yi) in x.iter().zip(y) {
        let v = vandermonde(xi, degree);
        gram.add_outer(T::one(), &v);
        for (r, vi) in rhs.iter_mut().zip(&v) {
            *r = *r + *vi * yi;
        }
    }
    let singular = |_| CwmError::SingularDesign { component: 1 };
    let beta = solve_spd(&gram, &rhs).map_err(singular)?;
    let inv = inverse_spd(&gram).map_err(singular)?;
    let residuals: Vec<T> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| yi - crate::linalg::poly_eval(&beta, xi))
        .collect();
    let rss: T = residuals.iter().map(|e| *e * *e).sum();
    let df = n - p;
    let s2 = rss / T::from_count(df);
    let coefficients = beta
        .iter()
        .enumerate()
        .map(|(l, &b)| {
            let se = (s2 * inv.get(l, l)).max(T::zero()).sqrt();
            let t = if se > T::zero() {
                b / se
            } else if b == T::zero() {
                T::zero()
            } else {
                b.signum() * T::infinity()
            };
            OlsCoefficient {
                estimate: b,
                std_error: se,
                t_value: t,
                p_value: t_two_sided_p(t.to_f64_lossy(), df as f64),
            }
        })
        .collect();
    Ok(OlsReport {
        coefficients,
        residual_scale: s2.sqrt(),
        rss,
        df,
        residuals,
    })
}
