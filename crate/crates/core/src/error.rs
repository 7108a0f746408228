use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario parameter violates its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Practical radiation pattern evaluated at a geometry where the
    /// elevation cosines are non-positive.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The precoder subproblem admits no point satisfying the QoS set.
    #[error("precoder subproblem infeasible")]
    Infeasible,

    /// The interior-point solver could not reach its tolerance within the
    /// iteration cap.
    #[error("solver stall: {0}")]
    SolverStall(String),

    /// QoS thresholds stayed infeasible after all configured relaxations.
    #[error("qos infeasible after {retries} retries")]
    QosInfeasible { retries: usize },

    /// Retraction asked to normalize a vector of negligible norm.
    #[error("degenerate retraction: pre-normalization norm below 1e-14")]
    DegenerateRetraction,

    /// Conjugate-direction update with a vanishing denominator; the caller
    /// restarts with steepest descent.
    #[error("degenerate division in direction update")]
    DivisionDegenerate,

    /// Binary fixture or CSV output could not be read/written.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A binary fixture file does not follow the documented layout.
    #[error("malformed dump: {0}")]
    MalformedDump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
