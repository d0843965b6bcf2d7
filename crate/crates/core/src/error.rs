use std::fmt;
use std::path::PathBuf;

/// Why a method could not produce an endpoint.
///
/// Failures are expected outcomes in a coverage study (small samples,
/// discrete data, extreme quantiles) and are recorded rather than raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Failure {
    /// The functional is undefined on the sample (zero-variance correlation).
    DegenerateEstimate,
    /// Fewer than two resamples produced a usable estimate.
    TooFewValidResamples,
    /// Bias fraction is 0 or 1, so its normal quantile is infinite.
    BiasFractionBoundary,
    /// The BCa denominator vanished.
    ZeroDenominator,
    /// A scale estimate required by the method is zero.
    ZeroVariance,
    /// No order statistic reaches the requested level.
    NoOrderStatistic,
    /// Beta weights of the Maritz-Jarrett estimator are unusable.
    DegenerateWeights,
    /// Not enough observations for the method.
    TooFewObservations,
    /// The oracle could not evaluate the functional on its own draws.
    OracleFailure,
    /// Two-sided interval whose lower endpoint exceeds the upper one.
    CrossedEndpoints,
}

impl Failure {
    pub fn as_str(self) -> &'static str {
        match self {
            Failure::DegenerateEstimate => "degenerate_estimate",
            Failure::TooFewValidResamples => "too_few_valid_resamples",
            Failure::BiasFractionBoundary => "bias_fraction_boundary",
            Failure::ZeroDenominator => "zero_denominator",
            Failure::ZeroVariance => "zero_variance",
            Failure::NoOrderStatistic => "no_order_statistic",
            Failure::DegenerateWeights => "degenerate_weights",
            Failure::TooFewObservations => "too_few_observations",
            Failure::OracleFailure => "oracle_failure",
            Failure::CrossedEndpoints => "crossed_endpoints",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("method failure: {0}")]
    Failure(Failure),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// The method failure carried by this error, if it is one.
    pub fn failure(&self) -> Option<Failure> {
        match self {
            Error::Failure(f) => Some(*f),
            _ => None,
        }
    }
}

impl From<Failure> for Error {
    fn from(f: Failure) -> Self {
        Error::Failure(f)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Splits a library result into a recorded endpoint outcome, passing real
/// errors through.
pub(crate) fn split_failure(r: Result<f64>) -> Result<Result<f64, Failure>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::Failure(f)) => Ok(Err(f)),
        Err(e) => Err(e),
    }
}
