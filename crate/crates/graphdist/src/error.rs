use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("edge ({u}, {v}) has non-positive {what} {value}")]
    NonPositiveWeight {
        u: usize,
        v: usize,
        what: &'static str,
        value: f64,
    },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("node id {id} out of range for n = {n}")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("parameter {name} = {value} out of range ({expected})")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("beta too large: beta * cost = {0} on some edge exceeds the underflow guard 700")]
    BetaTooLarge(f64),

    #[error("linear system I - W is numerically singular ({0})")]
    SingularSystem(String),

    #[error("fundamental matrix underflowed: z[{s}][{t}] = {value} is not strictly positive")]
    UnderflowZ { s: usize, t: usize, value: f64 },

    #[error("flow solver did not converge: gradient norm {grad_norm} after {iters} iterations")]
    SolverNotConverged { grad_norm: f64, iters: usize },

    #[error("graph too large for all-pairs flow minimization: n = {n} exceeds cap {cap}")]
    GraphTooLarge { n: usize, cap: usize },

    #[error("path ensemble too large: more than {cap} hitting paths up to length {t_max}")]
    EnsembleTooLarge { cap: usize, t_max: usize },

    #[error("degenerate path ensemble (no paths enumerated)")]
    DegenerateEnsemble,

    #[error("sigmoid kernel sigma is zero (constant pseudoinverse)")]
    DegenerateSigma,

    #[error("kernel k-means could not repair empty clusters after {0} attempts")]
    EmptyClusterUnrecoverable(usize),

    #[error("could not generate a connected graph in {0} attempts")]
    CouldNotConnect(usize),

    #[error("label set invalid: {0}")]
    InvalidLabels(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag for CLI error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::DuplicateEdge(..) => "DuplicateEdge",
            Error::SelfLoop(..) => "SelfLoop",
            Error::NodeOutOfRange { .. } => "NodeOutOfRange",
            Error::IsolatedNode(..) => "IsolatedNode",
            Error::Disconnected => "Disconnected",
            Error::ParamOutOfRange { .. } => "ParamOutOfRange",
            Error::BetaTooLarge(..) => "BetaTooLarge",
            Error::SingularSystem(..) => "SingularSystem",
            Error::UnderflowZ { .. } => "UnderflowZ",
            Error::SolverNotConverged { .. } => "SolverNotConverged",
            Error::GraphTooLarge { .. } => "GraphTooLarge",
            Error::EnsembleTooLarge { .. } => "EnsembleTooLarge",
            Error::DegenerateEnsemble => "DegenerateEnsemble",
            Error::DegenerateSigma => "DegenerateSigma",
            Error::EmptyClusterUnrecoverable(..) => "EmptyClusterUnrecoverable",
            Error::CouldNotConnect(..) => "CouldNotConnect",
            Error::InvalidLabels(..) => "InvalidLabels",
            Error::Io(..) => "Io",
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BetaTooLarge(..)
                | Error::SingularSystem(..)
                | Error::UnderflowZ { .. }
                | Error::SolverNotConverged { .. }
                | Error::EmptyClusterUnrecoverable(..)
                | Error::CouldNotConnect(..)
        )
    }
}
