//! Sampling from a cluster-weighted generator, reference mixture fits, and
//! the two scripted experiments (artificial-data model selection and the
//! labeled-fraction classification study).
//!
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat) driven
//! by a ChaCha8 stream, so samples are reproducible across platforms.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::em::{fit, fit_from_partition, fit_model, FitConfig, FitResult};
use crate::error::{CwmError, Result};
use crate::evaluation::{adjusted_rand_index, ari_unlabeled_subset, Partition};
use crate::inference::{standard_errors, StdErrors};
use crate::model::{ComponentParams, Dataset, MixtureKind, MixtureParams};
use crate::rng::{mix_seed, task_rng};
use crate::scalar::Scalar;
use crate::selection::{grid_search, Criterion, GridResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    pub psi: MixtureParams<T>,
    /// Exact per-component counts; `None` draws memberships from the weights.
    pub group_sizes: Option<Vec<usize>>,
    pub seed: u64,
}

/// Observations with their true 1-based component.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub truth: Vec<usize>,
}

impl<T: Scalar> LabeledSample<T> {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn truth_partition(&self) -> Partition {
        Partition(self.truth.clone())
    }

    /// Dataset with every label hidden.
    pub fn unlabeled(&self) -> Result<Dataset<T>> {
        Dataset::unlabeled(self.x.clone(), self.y.clone())
    }

    /// Dataset revealing the true label of the rows in `labeled`.
    pub fn with_labeled_rows(&self, labeled: &[usize]) -> Result<Dataset<T>> {
        let mut labels = vec![None; self.n()];
        for &i in labeled {
            labels[i] = Some(self.truth[i]);
        }
        Dataset::new(self.x.clone(), self.y.clone(), labels)
    }
}

/// Generating parameters of the cubic two-component artificial example.
pub fn table1_params<T: Scalar>() -> MixtureParams<T> {
    let c = |beta: [f64; 4], se: f64, mx: f64, sx: f64| ComponentParams {
        beta: beta.iter().map(|&b| T::lit(b)).collect(),
        sigma_eps: T::lit(se),
        mu_x: T::lit(mx),
        sigma_x: T::lit(sx),
    };
    MixtureParams {
        weights: vec![T::lit(0.571), T::lit(0.429)],
        components: vec![
            c([0.0, -1.0, 0.0, 0.1], 1.6, -2.0, 1.0),
            c([-8.0, 0.1, -0.1, 0.15], 2.3, 3.8, 0.7),
        ],
    }
}

/// Group sizes of the artificial example (`n = 700`).
pub const TABLE1_GROUP_SIZES: [usize; 2] = [400, 300];

pub fn table1_generator<T: Scalar>(seed: u64) -> Generator<T> {
    Generator {
        psi: table1_params(),
        group_sizes: Some(TABLE1_GROUP_SIZES.to_vec()),
        seed,
    }
}

/// Draws `n` observations: component `j`, then `x ~ N(μ_X|j, σ_X|j²)`, then
/// `y = μ_r(x; β_j) + ε` with `ε ~ N(0, σ_εj²)`. With fixed group sizes the
/// rows come out grouped by component.
pub fn sample<T: Scalar>(gen: &Generator<T>, n: usize) -> Result<LabeledSample<T>> {
    gen.psi.validate()?;
    let k = gen.psi.k();
    let mut rng = task_rng(gen.seed, 0);
    let truth: Vec<usize> = match &gen.group_sizes {
        Some(sizes) => {
            if sizes.len() != k || sizes.contains(&0) {
                return Err(CwmError::InvalidConfig(format!(
                    "need {k} positive group sizes, got {sizes:?}"
                )));
            }
            if sizes.iter().sum::<usize>() != n {
                return Err(CwmError::InvalidConfig(format!(
                    "group sizes sum to {}, not n = {n}",
                    sizes.iter().sum::<usize>()
                )));
            }
            sizes
                .iter()
                .enumerate()
                .flat_map(|(j, &s)| std::iter::repeat_n(j + 1, s))
                .collect()
        }
        None => {
            let cum: Vec<f64> = gen
                .psi
                .weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w.to_f64_lossy();
                    Some(*acc)
                })
                .collect();
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * cum[k - 1];
                    cum.iter().position(|&c| u < c).unwrap_or(k - 1) + 1
                })
                .collect()
        }
    };
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for &j in &truth {
        let c = &gen.psi.components[j - 1];
        let zx: f64 = rng.sample(StandardNormal);
        let ze: f64 = rng.sample(StandardNormal);
        let xi = c.mu_x + c.sigma_x * T::lit(zx);
        x.push(xi);
        y.push(c.regression_mean(xi) + c.sigma_eps * T::lit(ze));
    }
    Ok(LabeledSample { x, y, truth })
}

/// EM for a finite mixture of polynomial regressions of `Y` on `x`
/// (no X-marginal in the posteriors or the likelihood).
pub fn fit_reference_fmr<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
) -> Result<FitResult<T>> {
    fit_model(MixtureKind::RegressionOnly, data, k, degree, cfg)
}

/// Same model as [`fit_reference_fmr`], single run started from `init`.
pub fn fit_reference_fmr_from<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
    init: &[usize],
) -> Result<FitResult<T>> {
    fit_from_partition(MixtureKind::RegressionOnly, data, k, degree, cfg, init)
}

/// EM for a univariate Gaussian mixture on `x` alone. The regression fields
/// of the result hold degree-0 weighted moments of `y` and do not enter the
/// likelihood.
pub fn fit_reference_gmm_x<T: Scalar>(data: &Dataset<T>, k: usize, cfg: &FitConfig) -> Result<FitResult<T>> {
    fit_model(MixtureKind::MarginalOnly, data, k, 0, cfg)
}

#[derive(Debug, Clone)]
pub struct ArtificialConfig {
    pub group_sizes: Vec<usize>,
    pub k_range: Vec<usize>,
    pub r_range: Vec<usize>,
    pub fit: FitConfig,
}

impl Default for ArtificialConfig {
    fn default() -> Self {
        Self {
            group_sizes: TABLE1_GROUP_SIZES.to_vec(),
            k_range: (1..=5).collect(),
            r_range: (1..=5).collect(),
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArtificialReport<T> {
    pub seed: u64,
    pub sample: LabeledSample<T>,
    pub grid: GridResult<T>,
    /// Fit of the BIC-selected cell.
    pub selected: FitResult<T>,
    pub std_errors: std::result::Result<StdErrors<T>, CwmError>,
    /// ARI of the BIC-selected fit against the generating labels.
    pub ari: f64,
}

/// Samples the cubic two-component example and grid-searches `(k, r)`.
pub fn run_artificial_experiment<T: Scalar>(seed: u64, cfg: &ArtificialConfig) -> Result<ArtificialReport<T>> {
    let gen = Generator {
        psi: table1_params(),
        group_sizes: Some(cfg.group_sizes.clone()),
        seed,
    };
    let n = cfg.group_sizes.iter().sum();
    let sample = sample(&gen, n)?;
    let data = sample.unlabeled()?;
    let fit_cfg = FitConfig {
        seed: mix_seed(&[seed, 0xF17]),
        ..cfg.fit.clone()
    };
    let grid = grid_search(&data, &cfg.k_range, &cfg.r_range, &fit_cfg)?;
    let selected = grid.best(Criterion::Bic).fit.clone().expect("selected cell was fitted");
    let ari = adjusted_rand_index(&Partition(selected.map_labels.clone()), &sample.truth_partition())?;
    let std_errors = standard_errors(&data, &selected.psi_hat);
    Ok(ArtificialReport {
        seed,
        sample,
        grid,
        selected,
        std_errors,
        ari,
    })
}

#[derive(Debug, Clone)]
pub struct LabeledFractionConfig {
    pub m_values: Vec<usize>,
    pub reps: usize,
    pub k: usize,
    pub degree: usize,
    pub fit: FitConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub rep: usize,
    /// ARI on the unlabeled rows; `None` if the fit failed.
    pub ari: Option<f64>,
    pub loglik: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionSummary {
    pub m: usize,
    pub k: usize,
    pub degree: usize,
    pub replications: Vec<Replication>,
    pub mean: f64,
    /// Monte-Carlo standard error of `mean`.
    pub std_error: f64,
    pub q025: f64,
    pub q05: f64,
    pub q95: f64,
    pub q975: f64,
}

impl FractionSummary {
    pub fn failures(&self) -> usize {
        self.replications.iter().filter(|r| r.ari.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<FractionSummary>,
}

/// For each `m`, repeatedly reveals the true labels of `m` rows drawn
/// uniformly without replacement, fits, and scores ARI on the other rows.
pub fn run_labeled_fraction_study<T: Scalar>(
    sample: &LabeledSample<T>,
    cfg: &LabeledFractionConfig,
) -> Result<ExperimentReport> {
    let n = sample.n();
    if cfg.reps == 0 {
        return Err(CwmError::InvalidConfig("reps must be >= 1".into()));
    }
    if let Some(&bad) = cfg.m_values.iter().find(|&&m| m + 2 > n) {
        return Err(CwmError::InvalidConfig(format!(
            "m = {bad} leaves fewer than 2 unlabeled rows out of {n}"
        )));
    }
    let rows = cfg
        .m_values
        .iter()
        .map(|&m| {
            let replications: Vec<Replication> = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| replicate(sample, cfg, m, rep))
                .collect::<Result<_>>()?;
            Ok(summarize(m, cfg, replications))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { rows })
}

/// `m` distinct row indices out of `0..n`, uniformly without replacement.
pub fn draw_labeled_rows(n: usize, m: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    if m > n {
        return Err(CwmError::InvalidConfig(format!("cannot label {m} of {n} rows")));
    }
    let mut rng = task_rng(seed, stream);
    Ok(index::sample(&mut rng, n, m).into_vec())
}

fn replicate<T: Scalar>(
    sample: &LabeledSample<T>,
    cfg: &LabeledFractionConfig,
    m: usize,
    rep: usize,
) -> Result<Replication> {
    let labeled = draw_labeled_rows(sample.n(), m, mix_seed(&[cfg.seed, m as u64]), rep as u64)?;
    let data = sample.with_labeled_rows(&labeled)?;
    let fit_cfg = FitConfig {
        seed: mix_seed(&[cfg.seed, m as u64, rep as u64]),
        ..cfg.fit.clone()
    };
    match fit(&data, cfg.k, cfg.degree, &fit_cfg) {
        Ok(res) => {
            let truth = data.to_stored_order(&sample.truth);
            let ari = ari_unlabeled_subset(&Partition(res.map_labels.clone()), &Partition(truth), data.m())?;
            Ok(Replication {
                rep,
                ari: Some(ari),
                loglik: Some(res.loglik().to_f64_lossy()),
            })
        }
        Err(CwmError::AllRestartsFailed(_)) => Ok(Replication {
            rep,
            ari: None,
            loglik: None,
        }),
        Err(e) => Err(e),
    }
}

fn summarize(m: usize, cfg: &LabeledFractionConfig, replications: Vec<Replication>) -> FractionSummary {
    let mut values: Vec<f64> = replications.iter().filter_map(|r| r.ari).collect();
    values.sort_by(f64::total_cmp);
    let cnt = values.len() as f64;
    let mean = values.iter().sum::<f64>() / cnt;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (cnt - 1.0)
    } else {
        0.0
    };
    FractionSummary {
        m,
        k: cfg.k,
        degree: cfg.degree,
        mean,
        std_error: (var / cnt).sqrt(),
        q025: quantile_sorted(&values, 0.025),
        q05: quantile_sorted(&values, 0.05),
        q95: quantile_sorted(&values, 0.95),
        q975: quantile_sorted(&values, 0.975),
        replications,
    }
}

/// Linear-interpolation sample quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}
