//! Parameter counting, BIC / ICL, and grid search over `(k, r)`.
//!
//! Both criteria are oriented so that larger is better.

use rayon::prelude::*;

use crate::em::{fit, FitConfig, FitResult};
use crate::error::{CwmError, Result};
use crate::model::{Dataset, Responsibilities};
use crate::rng::mix_seed;
use crate::scalar::Scalar;

/// Free parameters of a `k`-component model of degree `r`: `k·r + 4k − 1`.
pub fn num_params(k: usize, r: usize) -> usize {
    k * r + 4 * k - 1
}

/// `2·loglik − η·ln n`.
pub fn bic<T: Scalar>(loglik: T, k: usize, r: usize, n: usize) -> T {
    T::lit(2.0) * loglik - T::from_count(num_params(k, r)) * T::from_count(n).ln()
}

/// BIC plus `Σ_{i>m} ln ẑ_{i,MAP(i)}` over the unlabeled rows.
pub fn icl<T: Scalar>(bic_value: T, resp: &Responsibilities<T>, m: usize) -> T {
    let entropy: T = (m..resp.n()).map(|i| resp.get(i, resp.map_label(i) - 1).ln()).sum();
    bic_value + entropy
}

/// Which criterion drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    #[default]
    Bic,
    Icl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Fitted,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct GridCell<T> {
    pub k: usize,
    pub r: usize,
    pub seed: u64,
    pub status: CellStatus,
    /// `2·l(ψ̂)`; `None` for failed cells.
    pub two_loglik: Option<T>,
    pub bic: Option<T>,
    pub icl: Option<T>,
    pub fit: Option<FitResult<T>>,
}

impl<T: Scalar> GridCell<T> {
    pub fn score(&self, criterion: Criterion) -> Option<T> {
        match criterion {
            Criterion::Bic => self.bic,
            Criterion::Icl => self.icl,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult<T> {
    /// Sorted by `(k, r)`.
    pub cells: Vec<GridCell<T>>,
    pub best_bic: (usize, usize),
    pub best_icl: (usize, usize),
}

impl<T: Scalar> GridResult<T> {
    pub fn cell(&self, k: usize, r: usize) -> Option<&GridCell<T>> {
        self.cells.iter().find(|c| c.k == k && c.r == r)
    }

    pub fn best(&self, criterion: Criterion) -> &GridCell<T> {
        let (k, r) = match criterion {
            Criterion::Bic => self.best_bic,
            Criterion::Icl => self.best_icl,
        };
        self.cell(k, r).expect("best cell is in the grid")
    }
}

/// Seed of grid cell `(k, r)`; independent of the other cells.
pub fn cell_seed(seed: u64, k: usize, r: usize) -> u64 {
    mix_seed(&[seed, k as u64, r as u64])
}

/// Fits every `(k, r)` in the ranges independently and picks the maximum of
/// each criterion. Ties go to the smaller parameter count, then smaller `k`.
pub fn grid_search<T: Scalar>(
    data: &Dataset<T>,
    k_range: &[usize],
    r_range: &[usize],
    cfg: &FitConfig,
) -> Result<GridResult<T>> {
    if k_range.is_empty() || r_range.is_empty() {
        return Err(CwmError::InvalidConfig("empty k or r range".into()));
    }
    let mut pairs: Vec<(usize, usize)> = k_range
        .iter()
        .flat_map(|&k| r_range.iter().map(move |&r| (k, r)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let n = data.n();
    let cells: Vec<GridCell<T>> = pairs
        .par_iter()
        .map(|&(k, r)| {
            let seed = cell_seed(cfg.seed, k, r);
            let cell_cfg = FitConfig { seed, ..cfg.clone() };
            match fit(data, k, r, &cell_cfg) {
                Ok(res) => {
                    let l = res.loglik();
                    let b = bic(l, k, r, n);
                    let i = icl(b, &res.resp, data.m());
                    GridCell {
                        k,
                        r,
                        seed,
                        status: CellStatus::Fitted,
                        two_loglik: Some(T::lit(2.0) * l),
                        bic: Some(b),
                        icl: Some(i),
                        fit: Some(res),
                    }
                }
                Err(e) => GridCell {
                    k,
                    r,
                    seed,
                    status: CellStatus::Failed(e.to_string()),
                    two_loglik: None,
                    bic: None,
                    icl: None,
                    fit: None,
                },
            }
        })
        .collect();
    let best_bic = argmax(&cells, Criterion::Bic).ok_or(CwmError::AllCellsFailed)?;
    let best_icl = argmax(&cells, Criterion::Icl).ok_or(CwmError::AllCellsFailed)?;
    Ok(GridResult {
        cells,
        best_bic,
        best_icl,
    })
}

fn argmax<T: Scalar>(cells: &[GridCell<T>], criterion: Criterion) -> Option<(usize, usize)> {
    let mut best: Option<(&GridCell<T>, T)> = None;
    for c in cells {
        let Some(s) = c.score(criterion) else { continue };
        let wins = match best {
            None => true,
            Some((b, bs)) => s > bs || (s == bs && (num_params(c.k, c.r), c.k) < (num_params(b.k, b.r), b.k)),
        };
        if wins {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| (c.k, c.r))
}
