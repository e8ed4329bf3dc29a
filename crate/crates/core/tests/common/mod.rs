//! Oracles shared by the integration suites. Nothing here calls into the
//! code paths it is used to check.

#![allow(dead_code)]

use polycwm::{ComponentParams64, MixtureParams64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn poly(beta: &[f64], x: f64) -> f64 {
    beta.iter().enumerate().map(|(l, b)| b * x.powi(l as i32)).sum()
}

/// Which factors of the component density enter the posterior.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Factors {
    Both,
    Conditional,
    Marginal,
}

/// Posterior membership computed in linear space straight from the
/// density formulas.
pub fn posterior(x: f64, y: f64, psi: &MixtureParams64, which: Factors) -> Vec<f64> {
    let terms: Vec<f64> = psi
        .weights
        .iter()
        .zip(&psi.components)
        .map(|(w, c)| {
            let cond = normal_pdf(y, poly(&c.beta, x), c.sigma_eps);
            let marg = normal_pdf(x, c.mu_x, c.sigma_x);
            w * match which {
                Factors::Both => cond * marg,
                Factors::Conditional => cond,
                Factors::Marginal => marg,
            }
        })
        .collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

/// Weighted least squares by modified Gram-Schmidt QR of `sqrt(w)·X`.
pub fn wls(x: &[f64], y: &[f64], w: &[f64], degree: usize) -> Vec<f64> {
    let n = x.len();
    let p = degree + 1;
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|l| (0..n).map(|i| w[i].sqrt() * x[i].powi(l as i32)).collect())
        .collect();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        for i in 0..j {
            let d: f64 = (0..n).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = d;
            for t in 0..n {
                q[j][t] -= d * q[i][t];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = norm;
        for t in 0..n {
            q[j][t] /= norm;
        }
    }
    let rhs: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|t| q[j][t] * w[t].sqrt() * y[t]).sum())
        .collect();
    let mut beta = vec![0.0; p];
    for j in (0..p).rev() {
        let s: f64 = (j + 1..p).map(|l| r[j][l] * beta[l]).sum();
        beta[j] = (rhs[j] - s) / r[j][j];
    }
    beta
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random valid parameters with the given shape.
pub fn random_params(rng: &mut ChaCha8Rng, k: usize, degree: usize) -> MixtureParams64 {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let components = (0..k)
        .map(|_| {
            let beta = (0..=degree).map(|l| normal(rng) * 2.0 / (l + 1) as f64).collect();
            ComponentParams64::new(
                beta,
                rng.random_range(0.3..2.5),
                rng.random_range(-4.0..4.0),
                rng.random_range(0.3..2.0),
            )
            .unwrap()
        })
        .collect();
    MixtureParams64::new(weights, components).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
