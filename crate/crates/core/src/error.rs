use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dimensions {lx}x{ly} too small (both must be >= 2)")]
    DimensionTooSmall { lx: usize, ly: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("{0} qubits exceeds the supported maximum")]
    TooManyQubits(usize),

    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("state not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("projection branch has probability {0:e}")]
    ZeroProbabilityBranch(f64),

    #[error("no flip chain between plaquettes {0} and {1}")]
    NoChainFound(usize, usize),

    #[error("sector unreachable: {0}")]
    UnreachableSector(String),

    #[error("expected {expected} parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("gate {0} has no differentiable parameter")]
    NonDifferentiableGate(usize),

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("imaginary-time propagation stalled: {0}")]
    StalledConvergence(String),

    #[error("{num_qubits} qubits exceeds limit {limit} for this operation")]
    SizeTooLarge { num_qubits: usize, limit: usize },

    #[error("bond ({0}, {1}) is not a z-bond of the lattice")]
    BondNotInLattice(usize, usize),

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("invalid lattice construction: {0}")]
    InvalidLattice(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("missing artifact: {0}")]
    MissingArtifacts(String),

    #[error("bad snapshot: {0}")]
    BadSnapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
