use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("N must be even (got {0})")]
    OddGrid(usize),
    #[error("N must be at least 8 (got {0})")]
    SmallGrid(usize),
    #[error("complex dimension must be 1 or 2 (got {0})")]
    Dimension(usize),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("form is not positive definite")]
    NotPositive,
    #[error("bidegree mismatch: ({0},{1}) vs ({2},{3})")]
    Bidegree(usize, usize, usize, usize),
    #[error("field does not live on this geometry")]
    GeometryMismatch,
    #[error("derivative order {0} exceeds 2")]
    Order(usize),
    #[error("operator does not accept bidegree (0,{0})")]
    Degree(usize),
    #[error("bound violated at k = {k}: {what} ratio {ratio:.6e} exceeds {limit:.6e}")]
    Bound {
        k: u64,
        what: &'static str,
        ratio: f64,
        limit: f64,
    },
    #[error("eigensolver stopped after {iterations} iterations with residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dense eigendecomposition failed")]
    Dense,
    #[error("computed slice ends at {largest:.6e}, below the threshold {threshold:.6e}; raise the count")]
    SliceTooShort { largest: f64, threshold: f64 },
    #[error("chart radius {0} must stay below 1/2")]
    Chart(f64),
    #[error("path leaves the fundamental chart")]
    PathOutsideChart,
    #[error("basis is empty")]
    EmptyBasis,
    #[error("Bergman function vanishes at site {0}")]
    BasePoint(usize),
    #[error("jet generation failed at site {0}")]
    JetGeneration(usize),
    #[error("conjugate gradient broke down after {0} iterations")]
    Breakdown(usize),
    #[error("config: {0}")]
    Config(String),
    #[error("run artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
