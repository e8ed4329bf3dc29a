//! Polynomial Gaussian cluster-weighted models for bivariate data.
//!
//! Each mixture component factorizes the joint density of `(X, Y)` into a
//! Gaussian marginal for `X` and a Gaussian polynomial regression of `Y` on
//! `x`. The crate estimates such models by EM or CEM on partially labeled
//! data, selects the number of components and the polynomial degree by BIC
//! or ICL, classifies unlabeled rows by maximum a posteriori, and provides
//! standard errors and simulation tools.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.
//!
//! ```
//! use polycwm::{em, simulate, FitConfig};
//!
//! let sample = simulate::sample(&simulate::table1_generator::<f64>(1), 700).unwrap();
//! let data = sample.unlabeled().unwrap();
//! let fit = em::fit(&data, 2, 3, &FitConfig::default()).unwrap();
//! assert_eq!(fit.psi_hat.k(), 2);
//! ```

// NaN-rejecting guards are written as `!(v > 0)`; index loops mirror the algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod em;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod simulate;

pub use em::{aitken_stop, e_step, fit, m_step, Algorithm, FitConfig, FitResult, StopDecision};
pub use error::{CwmError, Result};
pub use evaluation::{adjusted_rand_index, ari_unlabeled_subset, map_assign, rand_index, Partition};
pub use inference::{ols_polyfit, standard_errors, OlsReport, StdErrors};
pub use linalg::{log_normal_pdf, log_sum_exp, solve_spd, vandermonde, SymMatrix};
pub use model::{
    complete_loglik, log_component_density, log_mixture_density, observed_loglik, ComponentParams, Dataset,
    MixtureKind, MixtureParams, Responsibilities,
};
pub use scalar::Scalar;
pub use selection::{bic, grid_search, icl, num_params, Criterion, GridResult};
pub use simulate::{sample, Generator, LabeledSample};

pub type Dataset64 = Dataset<f64>;
pub type ComponentParams64 = ComponentParams<f64>;
pub type MixtureParams64 = MixtureParams<f64>;
pub type Responsibilities64 = Responsibilities<f64>;
pub type FitResult64 = FitResult<f64>;
pub type GridResult64 = GridResult<f64>;
pub type StdErrors64 = StdErrors<f64>;
pub type OlsReport64 = OlsReport<f64>;
pub type SymMatrix64 = SymMatrix<f64>;

pub type Dataset32 = Dataset<f32>;
pub type ComponentParams32 = ComponentParams<f32>;
pub type MixtureParams32 = MixtureParams<f32>;
pub type Responsibilities32 = Responsibilities<f32>;
pub type FitResult32 = FitResult<f32>;
pub type GridResult32 = GridResult<f32>;
pub type StdErrors32 = StdErrors<f32>;
pub type OlsReport32 = OlsReport<f32>;
pub type SymMatrix32 = SymMatrix<f32>;
