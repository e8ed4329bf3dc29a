use std::path::Path;

use polycwm::CwmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
    #[error("the input has no data rows")]
    EmptyFile,
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("row {row}, column {column}: `{value}` is not a positive integer label")]
    BadLabel { row: usize, column: String, value: String },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(CwmError),
}

impl CliError {
    pub(crate) fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 2 for bad input or arguments, 3 when fitting fails, 4 for numerical
    /// breakdowns that should not happen on valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Output { .. }
            | CliError::EmptyFile
            | CliError::MissingColumn(_)
            | CliError::Parse { .. }
            | CliError::BadLabel { .. }
            | CliError::Usage(_) => 2,
            CliError::Model(e) => match e {
                CwmError::LabelOutOfRange { .. }
                | CwmError::ShapeMismatch { .. }
                | CwmError::LengthMismatch(..)
                | CwmError::InvalidParams(_)
                | CwmError::InvalidConfig(_)
                | CwmError::NonPositiveScale(_) => 2,
                CwmError::EmptyComponent { .. }
                | CwmError::SingularDesign { .. }
                | CwmError::VarianceCollapse
                | CwmError::AllRestartsFailed(_)
                | CwmError::AllCellsFailed
                | CwmError::TooFewPoints(_)
                | CwmError::InsufficientData(_) => 3,
                CwmError::SingularMatrix { .. }
                | CwmError::AllNegInfinity
                | CwmError::HessianNotPd { .. }
                | CwmError::NumericalBreakdown(_) => 4,
            },
        }
    }
}
