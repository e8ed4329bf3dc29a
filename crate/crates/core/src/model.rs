//! Data, parameters and likelihood evaluation for the polynomial Gaussian
//! cluster-weighted model.
//!
//! Component labels are 1-based (`1..=k`) everywhere in the public API.
//! Labeled observations are stored first; [`Dataset`] records the
//! permutation so per-row outputs can be mapped back to input order.

use crate::error::{CwmError, Result};
use crate::linalg::{log_normal_pdf, log_normal_pdf_unchecked, log_sum_exp, poly_eval};
use crate::scalar::Scalar;

/// `n` bivariate observations, the first `m` of which carry a known label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Vec<T>,
    y: Vec<T>,
    labels: Vec<usize>,
    original_index: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from rows in input order. Labeled rows are moved to
    /// the front (stable), and the original position of every stored row is
    /// kept.
    pub fn new(x: Vec<T>, y: Vec<T>, labels: Vec<Option<usize>>) -> Result<Self> {
        if x.len() != y.len() || x.len() != labels.len() {
            return Err(CwmError::ShapeMismatch {
                expected: format!("{} rows in x, y and labels", x.len()),
                found: format!("{} / {} / {}", x.len(), y.len(), labels.len()),
            });
        }
        if x.is_empty() {
            return Err(CwmError::InsufficientData("dataset has no rows".into()));
        }
        for (row, (xi, yi)) in x.iter().zip(&y).enumerate() {
            if !xi.is_finite() || !yi.is_finite() {
                return Err(CwmError::InvalidParams(format!("row {} is not finite", row + 1)));
            }
        }
        let mut order: Vec<usize> = (0..x.len()).filter(|&i| labels[i].is_some()).collect();
        let m = order.len();
        order.extend((0..x.len()).filter(|&i| labels[i].is_none()));
        let mut stored_labels = Vec::with_capacity(m);
        for &i in &order[..m] {
            let l = labels[i].unwrap();
            if l == 0 {
                return Err(CwmError::LabelOutOfRange {
                    row: i + 1,
                    label: 0,
                    k: 0,
                });
            }
            stored_labels.push(l);
        }
        Ok(Self {
            x: order.iter().map(|&i| x[i]).collect(),
            y: order.iter().map(|&i| y[i]).collect(),
            labels: stored_labels,
            original_index: order,
        })
    }

    pub fn unlabeled(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        Self::new(x, y, vec![None; n])
    }

    /// Rows already arranged labeled-first: `labels[i]` belongs to row `i`.
    pub fn labeled_first(x: Vec<T>, y: Vec<T>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() > x.len() {
            return Err(CwmError::ShapeMismatch {
                expected: format!("at most {} labels", x.len()),
                found: labels.len().to_string(),
            });
        }
        let mut all: Vec<Option<usize>> = labels.into_iter().map(Some).collect();
        all.resize(x.len(), None);
        Self::new(x, y, all)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Number of labeled rows.
    #[inline]
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Known labels of the first `m` stored rows.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels.get(i).copied()
    }

    /// `original_index()[i]` is the input position of stored row `i`.
    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    /// Reorders per-row values from storage order back to input order.
    pub fn to_original_order<U: Clone>(&self, stored: &[U]) -> Vec<U> {
        assert_eq!(stored.len(), self.n());
        let mut out: Vec<Option<U>> = vec![None; self.n()];
        for (s, &orig) in self.original_index.iter().enumerate() {
            out[orig] = Some(stored[s].clone());
        }
        out.into_iter().map(|v| v.unwrap()).collect()
    }

    /// Reorders per-row values from input order into storage order.
    pub fn to_stored_order<U: Clone>(&self, original: &[U]) -> Vec<U> {
        assert_eq!(original.len(), self.n());
        self.original_index.iter().map(|&i| original[i].clone()).collect()
    }

    pub fn check_labels(&self, k: usize) -> Result<()> {
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 0 || l > k {
                return Err(CwmError::LabelOutOfRange {
                    row: self.original_index[i] + 1,
                    label: l,
                    k,
                });
            }
        }
        Ok(())
    }
}

/// Parameters of one component: polynomial regression of `Y` on `x` plus a
/// Gaussian marginal for `X`. Scales are standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams<T> {
    pub beta: Vec<T>,
    pub sigma_eps: T,
    pub mu_x: T,
    pub sigma_x: T,
}

impl<T: Scalar> ComponentParams<T> {
    pub fn new(beta: Vec<T>, sigma_eps: T, mu_x: T, sigma_x: T) -> Result<Self> {
        let c = Self {
            beta,
            sigma_eps,
            mu_x,
            sigma_x,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_empty() || self.beta.iter().any(|b| !b.is_finite()) {
            return Err(CwmError::InvalidParams("beta must be non-empty and finite".into()));
        }
        for s in [self.sigma_eps, self.sigma_x] {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(CwmError::NonPositiveScale(s.to_f64_lossy()));
            }
        }
        if !self.mu_x.is_finite() {
            return Err(CwmError::InvalidParams("mu_x is not finite".into()));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.beta.len() - 1
    }

    /// `μ_r(x; β)`.
    #[inline]
    pub fn regression_mean(&self, x: T) -> T {
        poly_eval(&self.beta, x)
    }

    #[inline]
    pub fn log_conditional(&self, x: T, y: T) -> T {
        log_normal_pdf_unchecked(y, self.regression_mean(x), self.sigma_eps)
    }

    #[inline]
    pub fn log_marginal(&self, x: T) -> T {
        log_normal_pdf_unchecked(x, self.mu_x, self.sigma_x)
    }
}

/// Full parameter vector: weights and `k` components sharing one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams<T> {
    pub weights: Vec<T>,
    pub components: Vec<ComponentParams<T>>,
}

impl<T: Scalar> MixtureParams<T> {
    pub fn new(weights: Vec<T>, components: Vec<ComponentParams<T>>) -> Result<Self> {
        let p = Self { weights, components };
        p.validate()?;
        Ok(p)
    }

    pub fn weight_tolerance() -> T {
        T::lit(1e-12).max(T::lit(64.0) * T::epsilon())
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.weights.len() != self.components.len() {
            return Err(CwmError::InvalidParams(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.components.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(CwmError::InvalidParams("weights must be positive".into()));
        }
        let total: T = self.weights.iter().copied().sum();
        if (total - T::one()).abs() > Self::weight_tolerance() {
            return Err(CwmError::InvalidParams(format!("weights sum to {total}")));
        }
        let r = self.components[0].degree();
        for c in &self.components {
            c.validate()?;
            if c.degree() != r {
                return Err(CwmError::InvalidParams("components differ in degree".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    /// Reorders components: new component `j` is old component `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
            components: perm.iter().map(|&p| self.components[p].clone()).collect(),
        }
    }
}

/// Which factors of the component density enter the likelihood.
///
/// `ClusterWeighted` is the full model. The other two are the reference
/// models obtained by dropping one factor: a finite mixture of polynomial
/// regressions of `Y` on `x`, and a Gaussian mixture on `X` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixtureKind {
    #[default]
    ClusterWeighted,
    RegressionOnly,
    MarginalOnly,
}

impl MixtureKind {
    #[inline]
    pub fn log_component<T: Scalar>(self, x: T, y: T, c: &ComponentParams<T>) -> T {
        match self {
            Self::ClusterWeighted => c.log_conditional(x, y) + c.log_marginal(x),
            Self::RegressionOnly => c.log_conditional(x, y),
            Self::MarginalOnly => c.log_marginal(x),
        }
    }

    pub fn uses_regression(self) -> bool {
        !matches!(self, Self::MarginalOnly)
    }

    pub fn uses_marginal(self) -> bool {
        !matches!(self, Self::RegressionOnly)
    }
}

/// n×k matrix of posterior membership probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities<T> {
    n: usize,
    k: usize,
    data: Vec<T>,
}

impl<T: Scalar> Responsibilities<T> {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            data: vec![T::zero(); n * k],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) || k == 0 {
            return Err(CwmError::ShapeMismatch {
                expected: "rectangular matrix with k >= 1".into(),
                found: "ragged rows".into(),
            });
        }
        Ok(Self {
            n,
            k,
            data: rows.concat(),
        })
    }

    /// Hard 0/1 matrix from 1-based labels.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        let mut z = Self::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            if l == 0 || l > k {
                return Err(CwmError::LabelOutOfRange {
                    row: i + 1,
                    label: l,
                    k,
                });
            }
            z.set(i, l - 1, T::one());
        }
        Ok(z)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.k + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.k + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.k)
    }

    pub fn column_sum(&self, j: usize) -> T {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// 1-based argmax of row `i`; ties go to the lowest index.
    pub fn map_label(&self, i: usize) -> usize {
        let row = self.row(i);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = j;
            }
        }
        best + 1
    }

    /// Replaces every row by the unit vector of its MAP component.
    pub fn hardened(&self) -> Self {
        let mut out = Self::zeros(self.n, self.k);
        for i in 0..self.n {
            out.set(i, self.map_label(i) - 1, T::one());
        }
        out
    }

    pub fn is_hard(&self) -> bool {
        self.data.iter().all(|&v| v == T::zero() || v == T::one())
    }
}

/// `ln φ(y | x; μ_r(x; β), σ_ε²) + ln φ(x; μ_X, σ_X²)`.
pub fn log_component_density<T: Scalar>(x: T, y: T, c: &ComponentParams<T>) -> Result<T> {
    let cond = log_normal_pdf(y, c.regression_mean(x), c.sigma_eps)?;
    let marg = log_normal_pdf(x, c.mu_x, c.sigma_x)?;
    Ok(cond + marg)
}

/// `ln Σ_j π_j f(x, y; ϑ_j)`.
pub fn log_mixture_density<T: Scalar>(x: T, y: T, psi: &MixtureParams<T>) -> Result<T> {
    log_mixture_density_of(MixtureKind::ClusterWeighted, x, y, psi)
}

pub fn log_mixture_density_of<T: Scalar>(kind: MixtureKind, x: T, y: T, psi: &MixtureParams<T>) -> Result<T> {
    psi.validate()?;
    let terms: Vec<T> = psi
        .weights
        .iter()
        .zip(&psi.components)
        .map(|(&w, c)| w.ln() + kind.log_component(x, y, c))
        .collect();
    log_sum_exp(&terms)
}

/// Observed-data log-likelihood: labeled rows contribute their own
/// component's term, unlabeled rows the log mixture density.
pub fn observed_loglik<T: Scalar>(data: &Dataset<T>, psi: &MixtureParams<T>) -> Result<T> {
    observed_loglik_of(MixtureKind::ClusterWeighted, data, psi)
}

pub fn observed_loglik_of<T: Scalar>(kind: MixtureKind, data: &Dataset<T>, psi: &MixtureParams<T>) -> Result<T> {
    psi.validate()?;
    data.check_labels(psi.k())?;
    Ok(loglik_unchecked(
        kind,
        data,
        psi,
        &psi.weights.iter().map(|w| w.ln()).collect::<Vec<_>>(),
    ))
}

/// Hot-path evaluation; callers guarantee validity.
pub(crate) fn loglik_unchecked<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    psi: &MixtureParams<T>,
    log_w: &[T],
) -> T {
    let mut buf = vec![T::zero(); psi.k()];
    let mut total = T::zero();
    for i in 0..data.n() {
        let (x, y) = (data.x[i], data.y[i]);
        total = total
            + match data.label(i) {
                Some(l) => log_w[l - 1] + kind.log_component(x, y, &psi.components[l - 1]),
                None => {
                    for (j, c) in psi.components.iter().enumerate() {
                        buf[j] = log_w[j] + kind.log_component(x, y, c);
                    }
                    log_sum_exp(&buf).unwrap_or(T::neg_infinity())
                }
            };
    }
    total
}

/// The three additive pieces of the complete-data log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteLoglik<T> {
    /// `Σ z_ij ln π_j`
    pub weights: T,
    /// `Σ z_ij ln φ(y_i | x_i; β_j, σ_ε_j²)`
    pub regression: T,
    /// `Σ z_ij ln φ(x_i; μ_X|j, σ_X|j²)`
    pub marginal: T,
}

impl<T: Scalar> CompleteLoglik<T> {
    pub fn total(&self) -> T {
        self.weights + self.regression + self.marginal
    }
}

pub fn complete_loglik<T: Scalar>(data: &Dataset<T>, psi: &MixtureParams<T>, resp: &Responsibilities<T>) -> Result<T> {
    Ok(complete_loglik_parts(data, psi, resp)?.total())
}

pub fn complete_loglik_parts<T: Scalar>(
    data: &Dataset<T>,
    psi: &MixtureParams<T>,
    resp: &Responsibilities<T>,
) -> Result<CompleteLoglik<T>> {
    psi.validate()?;
    if resp.n() != data.n() || resp.k() != psi.k() {
        return Err(CwmError::ShapeMismatch {
            expected: format!("{}x{}", data.n(), psi.k()),
            found: format!("{}x{}", resp.n(), resp.k()),
        });
    }
    let mut parts = CompleteLoglik {
        weights: T::zero(),
        regression: T::zero(),
        marginal: T::zero(),
    };
    for i in 0..data.n() {
        let (x, y) = (data.x[i], data.y[i]);
        for (j, c) in psi.components.iter().enumerate() {
            let z = resp.get(i, j);
            if z == T::zero() {
                continue;
            }
            parts.weights = parts.weights + z * psi.weights[j].ln();
            parts.regression = parts.regression + z * c.log_conditional(x, y);
            parts.marginal = parts.marginal + z * c.log_marginal(x);
        }
    }
    Ok(parts)
}
