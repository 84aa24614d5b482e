use isocorr::correlate::CorrelateError;
use isocorr::curve::CurveError;
use isocorr::oracle::OracleError;
use isocorr::region::RegionError;
use thiserror::Error;

/// Failures grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable input or a region that fails validation.
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A cross-check disagreed beyond tolerance.
    #[error("check failed: {0}")]
    Disagreement(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Disagreement(_) => 4,
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::Region(e) => e.into(),
            CurveError::BadSamplePoints(_) => CliError::Input(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CorrelateError> for CliError {
    fn from(e: CorrelateError) -> Self {
        match e {
            CorrelateError::Region(e) => e.into(),
            CorrelateError::Curve(e) => e.into(),
            CorrelateError::DomainError(_) => CliError::Input(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Correlate(e) => e.into(),
            OracleError::TooLarge { .. } | OracleError::NoPlacements => {
                CliError::Input(e.to_string())
            }
            OracleError::SpreadTooLarge { .. } => CliError::Disagreement(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}
