//! JSON report documents and plot-ready CSV tables.
//!
//! Floats are written with serde_json's shortest round-trip formatting, so a
//! report re-read from disk reproduces every value bit for bit.

use std::path::Path;

use polycwm::inference::StdErrors;
use polycwm::selection::{CellStatus, GridResult};
use polycwm::simulate::{ExperimentReport, FractionSummary};
use polycwm::{ComponentParams64, Dataset64, FitResult64, MixtureParams64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub beta: Vec<f64>,
    pub sigma_eps: f64,
    pub mu_x: f64,
    pub sigma_x: f64,
}

/// Shared shape of parameter estimates and of their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub weights: Vec<f64>,
    pub components: Vec<ComponentDoc>,
}

impl From<&MixtureParams64> for ParamsDoc {
    fn from(p: &MixtureParams64) -> Self {
        Self {
            weights: p.weights.clone(),
            components: p
                .components
                .iter()
                .map(|c| ComponentDoc {
                    beta: c.beta.clone(),
                    sigma_eps: c.sigma_eps,
                    mu_x: c.mu_x,
                    sigma_x: c.sigma_x,
                })
                .collect(),
        }
    }
}

impl From<&StdErrors<f64>> for ParamsDoc {
    fn from(s: &StdErrors<f64>) -> Self {
        Self {
            weights: s.weights.clone(),
            components: s
                .components
                .iter()
                .map(|c| ComponentDoc {
                    beta: c.beta.clone(),
                    sigma_eps: c.sigma_eps,
                    mu_x: c.mu_x,
                    sigma_x: c.sigma_x,
                })
                .collect(),
        }
    }
}

impl ParamsDoc {
    pub fn to_params(&self) -> polycwm::Result<MixtureParams64> {
        let components = self
            .components
            .iter()
            .map(|c| ComponentParams64::new(c.beta.clone(), c.sigma_eps, c.mu_x, c.sigma_x))
            .collect::<polycwm::Result<Vec<_>>>()?;
        MixtureParams64::new(self.weights.clone(), components)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// 1-based row of the input file.
    pub row: usize,
    pub map: usize,
    pub posterior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDoc {
    pub k: usize,
    pub r: usize,
    pub n: usize,
    pub m: usize,
    pub algorithm: String,
    pub num_params: usize,
    pub params: ParamsDoc,
    pub std_errors: Option<ParamsDoc>,
    /// Why the standard errors are missing, if they are.
    pub std_errors_error: Option<String>,
    pub two_loglik: f64,
    pub bic: f64,
    pub icl: f64,
    pub converged: bool,
    pub iterations: usize,
    pub best_restart: usize,
    pub restart_failures: Vec<String>,
    pub warnings: Vec<String>,
    pub loglik_trace: Vec<f64>,
    /// MAP labels in input row order.
    pub labels: Vec<usize>,
    pub posteriors: Vec<Vec<f64>>,
    /// ARI over all rows against the `truth` column.
    pub ari: Option<f64>,
    /// ARI over the rows without a `label`.
    pub ari_unlabeled: Option<f64>,
}

impl FitDoc {
    pub fn new(data: &Dataset64, res: &FitResult64, std_errors: polycwm::Result<StdErrors<f64>>) -> Self {
        let (k, r, n) = (res.k(), res.degree(), data.n());
        let l = res.loglik();
        let bic = polycwm::bic(l, k, r, n);
        let posteriors: Vec<Vec<f64>> = res.resp.rows().map(|row| row.to_vec()).collect();
        let (std_errors, std_errors_error) = match std_errors {
            Ok(s) => (Some(ParamsDoc::from(&s)), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            k,
            r,
            n,
            m: data.m(),
            algorithm: algorithm_name(res.algorithm).into(),
            num_params: polycwm::num_params(k, r),
            params: ParamsDoc::from(&res.psi_hat),
            std_errors,
            std_errors_error,
            two_loglik: 2.0 * l,
            bic,
            icl: polycwm::icl(bic, &res.resp, data.m()),
            converged: res.converged,
            iterations: res.iterations,
            best_restart: res.best_restart,
            restart_failures: res
                .restart_failures
                .iter()
                .map(|(i, e)| format!("restart {i}: {e}"))
                .collect(),
            warnings: res.warnings.clone(),
            loglik_trace: res.loglik_trace.clone(),
            labels: data.to_original_order(&res.map_labels),
            posteriors: data.to_original_order(&posteriors),
            ari: None,
            ari_unlabeled: None,
        }
    }

    /// Rows of the input that carried no label, with their predictions.
    pub fn unlabeled_predictions(&self, labels: &[Option<usize>]) -> Vec<Observation> {
        labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| Observation {
                row: i + 1,
                map: self.labels[i],
                posterior: self.posteriors[i].clone(),
            })
            .collect()
    }
}

pub fn algorithm_name(a: polycwm::Algorithm) -> &'static str {
    match a {
        polycwm::Algorithm::Em => "em",
        polycwm::Algorithm::Cem => "cem",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDoc {
    pub k: usize,
    pub r: usize,
    pub seed: u64,
    pub num_params: usize,
    pub status: String,
    pub two_loglik: Option<f64>,
    pub bic: Option<f64>,
    pub icl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub cells: Vec<CellDoc>,
    pub best_bic: (usize, usize),
    pub best_icl: (usize, usize),
}

impl From<&GridResult<f64>> for GridDoc {
    fn from(g: &GridResult<f64>) -> Self {
        Self {
            cells: g
                .cells
                .iter()
                .map(|c| CellDoc {
                    k: c.k,
                    r: c.r,
                    seed: c.seed,
                    num_params: polycwm::num_params(c.k, c.r),
                    status: match &c.status {
                        CellStatus::Fitted => "fitted".into(),
                        CellStatus::Failed(e) => format!("failed: {e}"),
                    },
                    two_loglik: c.two_loglik,
                    bic: c.bic,
                    icl: c.icl,
                })
                .collect(),
            best_bic: g.best_bic,
            best_icl: g.best_icl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectDoc {
    pub criterion: String,
    pub grid: GridDoc,
    /// Full fit of the cell chosen by `criterion`.
    pub selected: FitDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyDoc {
    pub fit: FitDoc,
    pub predictions: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionDoc {
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub reps: usize,
    pub failures: usize,
    pub mean_ari: f64,
    pub std_error: f64,
    pub q025: f64,
    pub q05: f64,
    pub q95: f64,
    pub q975: f64,
    pub ari: Vec<Option<f64>>,
}

impl From<&FractionSummary> for FractionDoc {
    fn from(s: &FractionSummary) -> Self {
        Self {
            m: s.m,
            k: s.k,
            r: s.degree,
            reps: s.replications.len(),
            failures: s.failures(),
            mean_ari: s.mean,
            std_error: s.std_error,
            q025: s.q025,
            q05: s.q05,
            q95: s.q95,
            q975: s.q975,
            ari: s.replications.iter().map(|r| r.ari).collect(),
        }
    }
}

pub fn fraction_docs(report: &ExperimentReport) -> Vec<FractionDoc> {
    report.rows.iter().map(FractionDoc::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtificialDoc {
    pub seed: u64,
    pub n: usize,
    pub grid: GridDoc,
    pub selected: FitDoc,
    pub ari: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDoc {
    pub artificial: Option<ArtificialDoc>,
    pub labeled_fraction: Vec<FractionDoc>,
}

pub fn write_json<S: Serialize>(path: &Path, doc: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::output(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::output(path, e))
}

pub fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        row: e.line(),
        column: e.column().to_string(),
        message: e.to_string(),
    })
}

/// Number of x positions per regression curve.
pub const CURVE_POINTS: usize = 200;

/// Writes `curve_k<j>.csv` (x, y_hat over the data range) for each component
/// and `assignments.csv` (row, x, y, map, z_1..z_k) in input order.
pub fn write_plot_tables(dir: &Path, x: &[f64], y: &[f64], fit: &FitDoc) -> Result<(), CliError> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    for (j, c) in fit.params.components.iter().enumerate() {
        let path = dir.join(format!("curve_k{}.csv", j + 1));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::output(&path, e))?;
        w.write_record(["x", "y_hat"]).map_err(|e| CliError::output(&path, e))?;
        for i in 0..CURVE_POINTS {
            let t = i as f64 / (CURVE_POINTS - 1) as f64;
            let xv = if hi > lo { lo + t * (hi - lo) } else { lo };
            let yv = polycwm::linalg::poly_eval(&c.beta, xv);
            w.write_record([xv.to_string(), yv.to_string()])
                .map_err(|e| CliError::output(&path, e))?;
        }
        w.flush().map_err(|e| CliError::output(&path, e))?;
    }
    let path = dir.join("assignments.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::output(&path, e))?;
    let mut header = vec!["row".to_string(), "x".into(), "y".into(), "map".into()];
    header.extend((1..=fit.k).map(|j| format!("z_{j}")));
    w.write_record(&header).map_err(|e| CliError::output(&path, e))?;
    for i in 0..x.len() {
        let mut rec = vec![
            (i + 1).to_string(),
            x[i].to_string(),
            y[i].to_string(),
            fit.labels[i].to_string(),
        ];
        rec.extend(fit.posteriors[i].iter().map(|z| z.to_string()));
        w.write_record(&rec).map_err(|e| CliError::output(&path, e))?;
    }
    w.flush().map_err(|e| CliError::output(&path, e))
}
