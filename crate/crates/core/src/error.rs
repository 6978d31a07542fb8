use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate covariate: all values identical")]
    DegenerateCovariate,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("nonpositive isotonic weight {weight} at index {index}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("Z column constant: column {0} has no variation")]
    ConstantZColumn(usize),
    #[error("information singular")]
    InformationSingular,
    #[error("too few observations: n = {n} but the model has {params} parameters")]
    TooFewObservations { n: usize, params: usize },
    #[error("no candidate knot configuration converged")]
    AllCandidatesFailed,
    #[error("bootstrap failure rate too high: {failed} of {total} refits failed")]
    BootstrapFailures { failed: usize, total: usize },
    #[error("could not bracket inverse transformation for v = {0}")]
    Bracket(f64),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("data error at line {line}: {msg}")]
    Data { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the input data rather than by numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCovariate
                | Error::ConstantZColumn(_)
                | Error::TooFewObservations { .. }
                | Error::Data { .. }
                | Error::Csv(_)
                | Error::Io(_)
                | Error::Dimension(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
