use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid letter {letter} for rank {rank}")]
    InvalidLetter { letter: i32, rank: usize },

    #[error("budget exceeded: {what} needs {needed} elements, budget is {budget}")]
    Budget { what: String, needed: u128, budget: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("flavor error: {0}")]
    Flavor(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no convergence after {iterations} iterations, norm bracket [{lower}, {upper}]")]
    Convergence { iterations: usize, lower: f64, upper: f64 },

    #[error("coefficient map is not hermitian (defect {defect:e})")]
    Symmetry { defect: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("cutoff construction failed at t = {point}: {reason}")]
    Construction { point: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage { stage, source: Box::new(e) }
    }

    /// Innermost error beneath any stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
