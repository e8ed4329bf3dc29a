//! EM and CEM estimation with random multi-start initialization and an
//! Aitken-acceleration stopping rule.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{CwmError, Result};
use crate::linalg::{log_sum_exp, solve_spd, SymMatrix};
use crate::model::{ComponentParams, Dataset, MixtureKind, MixtureParams, Responsibilities};
use crate::rng::task_rng;
use crate::scalar::Scalar;

/// Minimum effective number of points a component needs in an M-step.
pub const MIN_COMPONENT_MASS: f64 = 2.0;

/// Absolute increment below which a log-likelihood sequence counts as flat.
pub const FLAT_INCREMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Em,
    /// Classification EM: posteriors are hardened to their MAP component
    /// before every M-step.
    Cem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub algorithm: Algorithm,
    /// Number of random initializations.
    pub restarts: usize,
    /// Aitken threshold.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Lower bound on both variances.
    pub variance_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Em,
            restarts: 10,
            epsilon: 0.05,
            max_iter: 1000,
            seed: 0,
            variance_floor: 1e-10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(CwmError::InvalidConfig("restarts must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(CwmError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CwmError::InvalidConfig("epsilon must be > 0".into()));
        }
        if !(self.variance_floor > 0.0) {
            return Err(CwmError::InvalidConfig("variance_floor must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub kind: MixtureKind,
    pub algorithm: Algorithm,
    pub psi_hat: MixtureParams<T>,
    /// Posteriors at `psi_hat`, in storage order.
    pub resp: Responsibilities<T>,
    /// Observed log-likelihood after every E-step.
    pub loglik_trace: Vec<T>,
    /// 1-based MAP labels in storage order.
    pub map_labels: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub best_restart: usize,
    /// `(restart index, reason)` for every restart that aborted.
    pub restart_failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> FitResult<T> {
    /// Final observed log-likelihood `l(ψ̂)`.
    pub fn loglik(&self) -> T {
        *self.loglik_trace.last().expect("trace is never empty")
    }

    pub fn k(&self) -> usize {
        self.psi_hat.k()
    }

    pub fn degree(&self) -> usize {
        self.psi_hat.degree()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Converged,
}

/// Aitken-accelerated stopping rule on three consecutive log-likelihoods.
///
/// With `a = (l_curr - l_prev) / (l_prev - l_prev2)` the asymptotic estimate
/// is `l_inf = l_prev + (l_curr - l_prev) / (1 - a)`; the run has converged
/// when `0 <= l_inf - l_prev < epsilon`. A flat step (`|l_curr - l_prev|`
/// below [`FLAT_INCREMENT`]) always converges. A zero denominator with a
/// non-zero increment, or `a >= 1`, continues.
pub fn aitken_stop(l_prev2: f64, l_prev: f64, l_curr: f64, epsilon: f64) -> StopDecision {
    let inc = l_curr - l_prev;
    if inc.abs() < FLAT_INCREMENT {
        return StopDecision::Converged;
    }
    let denom = l_prev - l_prev2;
    if denom == 0.0 {
        return StopDecision::Continue;
    }
    let a = inc / denom;
    if !(a < 1.0) {
        return StopDecision::Continue;
    }
    let gap = inc / (1.0 - a);
    if gap >= 0.0 && gap < epsilon {
        StopDecision::Converged
    } else {
        StopDecision::Continue
    }
}

/// Posterior membership probabilities at `psi`. Labeled rows get the unit
/// vector of their label.
pub fn e_step<T: Scalar>(data: &Dataset<T>, psi: &MixtureParams<T>) -> Result<Responsibilities<T>> {
    Ok(e_step_of(MixtureKind::ClusterWeighted, data, psi)?.0)
}

/// E-step that also returns the observed log-likelihood at `psi`, which
/// falls out of the same per-row normalizers.
pub fn e_step_of<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    psi: &MixtureParams<T>,
) -> Result<(Responsibilities<T>, T)> {
    psi.validate()?;
    data.check_labels(psi.k())?;
    Ok(e_step_unchecked(kind, data, psi))
}

fn e_step_unchecked<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    psi: &MixtureParams<T>,
) -> (Responsibilities<T>, T) {
    let k = psi.k();
    let log_w: Vec<T> = psi.weights.iter().map(|w| w.ln()).collect();
    let mut resp = Responsibilities::zeros(data.n(), k);
    let mut loglik = T::zero();
    let (xs, ys) = (data.x(), data.y());
    for i in 0..data.n() {
        let row = resp.row_mut(i);
        match data.label(i) {
            Some(l) => {
                row[l - 1] = T::one();
                loglik = loglik + log_w[l - 1] + kind.log_component(xs[i], ys[i], &psi.components[l - 1]);
            }
            None => {
                for (j, c) in psi.components.iter().enumerate() {
                    row[j] = log_w[j] + kind.log_component(xs[i], ys[i], c);
                }
                let norm = log_sum_exp(row).unwrap_or(T::nan());
                for v in row.iter_mut() {
                    *v = (*v - norm).exp();
                }
                loglik = loglik + norm;
            }
        }
    }
    (resp, loglik)
}

/// Closed-form M-step for the full model.
///
/// Weights are column masses over `n`; the X-marginal is the weighted mean
/// and standard deviation of `x`; `β_j` solves the weighted normal
/// equations on the Vandermonde design and `σ_ε_j` is the weighted RMS
/// residual. Both variances are floored at `variance_floor`.
pub fn m_step<T: Scalar>(
    data: &Dataset<T>,
    resp: &Responsibilities<T>,
    degree: usize,
    variance_floor: T,
) -> Result<MixtureParams<T>> {
    Ok(m_step_of(MixtureKind::ClusterWeighted, data, resp, degree, variance_floor)?.params)
}

#[derive(Debug, Clone)]
pub struct MStep<T> {
    pub params: MixtureParams<T>,
    /// Whether any variance used by the model was clamped to the floor.
    pub floored: bool,
}

pub fn m_step_of<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    resp: &Responsibilities<T>,
    degree: usize,
    variance_floor: T,
) -> Result<MStep<T>> {
    let n = data.n();
    let k = resp.k();
    if resp.n() != n || k == 0 {
        return Err(CwmError::ShapeMismatch {
            expected: format!("{n}xk responsibilities"),
            found: format!("{}x{}", resp.n(), k),
        });
    }
    let p = degree + 1;
    let (xs, ys) = (data.x(), data.y());

    let mut mass = vec![T::zero(); k];
    let mut sum_x = vec![T::zero(); k];
    let mut gram = vec![vec![T::zero(); p * p]; k];
    let mut rhs = vec![vec![T::zero(); p]; k];
    let mut powers = vec![T::zero(); p];
    for i in 0..n {
        fill_powers(xs[i], &mut powers);
        for (j, &w) in resp.row(i).iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            mass[j] = mass[j] + w;
            sum_x[j] = sum_x[j] + w * xs[i];
            let g = &mut gram[j];
            for a in 0..p {
                let wa = w * powers[a];
                for b in 0..=a {
                    g[a * p + b] = g[a * p + b] + wa * powers[b];
                }
                rhs[j][a] = rhs[j][a] + wa * ys[i];
            }
        }
    }

    let nf = T::from_count(n);
    let mut floored = false;
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        if !(mass[j] >= T::lit(MIN_COMPONENT_MASS)) {
            return Err(CwmError::EmptyComponent {
                component: j + 1,
                mass: mass[j].to_f64_lossy(),
            });
        }
        let mu_x = sum_x[j] / mass[j];
        let gram_j = SymMatrix::from_lower(p, &gram[j])?;
        let beta = solve_spd(&gram_j, &rhs[j]).map_err(|_| CwmError::SingularDesign { component: j + 1 })?;

        let mut ss_x = T::zero();
        let mut ss_e = T::zero();
        for i in 0..n {
            let w = resp.get(i, j);
            if w == T::zero() {
                continue;
            }
            let dx = xs[i] - mu_x;
            let e = ys[i] - crate::linalg::poly_eval(&beta, xs[i]);
            ss_x = ss_x + w * dx * dx;
            ss_e = ss_e + w * e * e;
        }
        let var_x = ss_x / mass[j];
        let var_e = ss_e / mass[j];
        if var_x < variance_floor && kind.uses_marginal() {
            floored = true;
        }
        if var_e < variance_floor && kind.uses_regression() {
            floored = true;
        }
        components.push(ComponentParams {
            beta,
            sigma_eps: var_e.max(variance_floor).sqrt(),
            mu_x,
            sigma_x: var_x.max(variance_floor).sqrt(),
        });
    }
    let weights = mass.iter().map(|&m| m / nf).collect();
    let params = MixtureParams { weights, components };
    if params
        .components
        .iter()
        .any(|c| !c.mu_x.is_finite() || c.beta.iter().any(|b| !b.is_finite()))
    {
        return Err(CwmError::NumericalBreakdown("non-finite M-step estimate".into()));
    }
    Ok(MStep { params, floored })
}

#[inline]
fn fill_powers<T: Scalar>(x: T, out: &mut [T]) {
    let mut v = T::one();
    for slot in out.iter_mut() {
        *slot = v;
        v = v * x;
    }
}

/// Fits the cluster-weighted model with `k` components of degree `degree`.
pub fn fit<T: Scalar>(data: &Dataset<T>, k: usize, degree: usize, cfg: &FitConfig) -> Result<FitResult<T>> {
    fit_model(MixtureKind::ClusterWeighted, data, k, degree, cfg)
}

/// Multi-start fit of any of the three mixture kinds.
///
/// Each restart draws the unlabeled hard assignments uniformly over
/// `1..=k`, runs an M-step on them, then alternates E and M (hardening in
/// between for CEM) until [`aitken_stop`] fires or `max_iter` E-steps have
/// run. The restart with the highest final observed log-likelihood wins.
pub fn fit_model<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
) -> Result<FitResult<T>> {
    check_inputs(data, k, cfg)?;
    // with nothing latent every restart is the same run
    let restarts = if k == 1 || data.m() == data.n() {
        1
    } else {
        cfg.restarts
    };
    let outcomes: Vec<Result<RunOutcome<T>>> = (0..restarts)
        .into_par_iter()
        .map(|idx| {
            let mut rng = task_rng(cfg.seed, idx as u64);
            let init = random_partition(data, k, &mut rng);
            run_from(kind, data, k, degree, cfg, &init)
        })
        .collect();
    select_best(kind, data, k, degree, cfg, outcomes)
}

/// Single run started from a given hard partition (1-based labels for every
/// stored row). Known labels always override `init` on labeled rows.
pub fn fit_from_partition<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
    init: &[usize],
) -> Result<FitResult<T>> {
    check_inputs(data, k, cfg)?;
    if init.len() != data.n() {
        return Err(CwmError::ShapeMismatch {
            expected: format!("{} initial labels", data.n()),
            found: init.len().to_string(),
        });
    }
    let mut labels = init.to_vec();
    labels[..data.m()].copy_from_slice(data.labels());
    let init = Responsibilities::from_labels(&labels, k)?;
    let outcome = run_from(kind, data, k, degree, cfg, &init);
    select_best(kind, data, k, degree, cfg, vec![outcome])
}

fn check_inputs<T: Scalar>(data: &Dataset<T>, k: usize, cfg: &FitConfig) -> Result<()> {
    cfg.validate()?;
    if k == 0 {
        return Err(CwmError::InvalidConfig("k must be >= 1".into()));
    }
    data.check_labels(k)
}

fn random_partition<T: Scalar, R: Rng>(data: &Dataset<T>, k: usize, rng: &mut R) -> Responsibilities<T> {
    let mut labels = data.labels().to_vec();
    labels.extend((data.m()..data.n()).map(|_| rng.random_range(1..=k)));
    Responsibilities::from_labels(&labels, k).expect("labels drawn within range")
}

struct RunOutcome<T> {
    psi: MixtureParams<T>,
    resp: Responsibilities<T>,
    trace: Vec<T>,
    converged: bool,
}

fn run_from<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
    init: &Responsibilities<T>,
) -> Result<RunOutcome<T>> {
    let floor = T::lit(cfg.variance_floor);
    let first = m_step_of(kind, data, init, degree, floor)?;
    let mut floored_streak = usize::from(first.floored);
    let mut psi = first.params;
    let mut trace: Vec<T> = Vec::new();
    loop {
        let (resp, ll) = e_step_unchecked(kind, data, &psi);
        if !ll.is_finite() {
            return Err(CwmError::NumericalBreakdown(format!(
                "log-likelihood became {ll} at iteration {}",
                trace.len() + 1
            )));
        }
        trace.push(ll);
        let converged = has_converged(&trace, cfg.epsilon);
        if converged || trace.len() >= cfg.max_iter {
            debug_assert_eq!(resp.k(), k);
            return Ok(RunOutcome {
                psi,
                resp,
                trace,
                converged,
            });
        }
        let step = match cfg.algorithm {
            Algorithm::Em => m_step_of(kind, data, &resp, degree, floor)?,
            Algorithm::Cem => m_step_of(kind, data, &resp.hardened(), degree, floor)?,
        };
        if step.floored {
            floored_streak += 1;
            if floored_streak >= 2 {
                return Err(CwmError::VarianceCollapse);
            }
        } else {
            floored_streak = 0;
        }
        psi = step.params;
    }
}

fn has_converged<T: Scalar>(trace: &[T], epsilon: f64) -> bool {
    match trace {
        [.., a, b, c] => {
            aitken_stop(a.to_f64_lossy(), b.to_f64_lossy(), c.to_f64_lossy(), epsilon) == StopDecision::Converged
        }
        [a, b] => (b.to_f64_lossy() - a.to_f64_lossy()).abs() < FLAT_INCREMENT,
        _ => false,
    }
}

fn select_best<T: Scalar>(
    kind: MixtureKind,
    data: &Dataset<T>,
    k: usize,
    degree: usize,
    cfg: &FitConfig,
    outcomes: Vec<Result<RunOutcome<T>>>,
) -> Result<FitResult<T>> {
    let mut failures = Vec::new();
    let mut best: Option<(usize, RunOutcome<T>)> = None;
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(run) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => run.trace.last() > b.trace.last(),
                };
                if better {
                    best = Some((idx, run));
                }
            }
            Err(e) => failures.push((idx, e.to_string())),
        }
    }
    let Some((best_restart, run)) = best else {
        return Err(CwmError::AllRestartsFailed(
            failures.iter().map(|(i, e)| format!("restart {i}: {e}")).collect(),
        ));
    };
    let mut warnings = Vec::new();
    let recommended = k * (degree + 2);
    if data.n() < recommended {
        warnings.push(format!(
            "n = {} is below k*(r+2) = {recommended}; the fit is weakly determined",
            data.n()
        ));
    }
    if !run.converged {
        warnings.push(format!("stopped at max_iter = {} before convergence", cfg.max_iter));
    }
    let map_labels = (0..data.n()).map(|i| run.resp.map_label(i)).collect();
    Ok(FitResult {
        kind,
        algorithm: cfg.algorithm,
        psi_hat: run.psi,
        resp: run.resp,
        iterations: run.trace.len(),
        loglik_trace: run.trace,
        map_labels,
        converged: run.converged,
        best_restart,
        restart_failures: failures,
        warnings,
    })
}
