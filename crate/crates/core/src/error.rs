use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("exponent denominator {den} exceeds cap {cap}")]
    DenominatorCapExceeded { den: i64, cap: i64 },
    #[error("extension cap exceeded: {0}")]
    ExtensionCapExceeded(String),
    #[error("no invertible residue Lang solution inside the coefficient field")]
    LangSearchExhausted,
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("root choice ambiguous at level {0}")]
    RootChoiceAmbiguous(usize),
    #[error("level equation not supported without reduction: {0}")]
    NotReduced(String),
    #[error("spec is not block upper triangular")]
    NotBlockTriangular,
    #[error("nilpotency bound {0} exceeded")]
    NilpotencyBoundExceeded(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bases are not related by GL_r(F_q[t]/t^(N+1)): {0}")]
    BasesInequivalent(String),
    #[error("nilpotent part is not nilpotent")]
    NotNilpotent,
    #[error("tail bound {bound} does not dominate target {target}")]
    TailNotDominated { bound: String, target: String },
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("mismatch detected: {0}")]
    MismatchDetected(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("infeasible cell: {0}")]
    InfeasibleCell(String),
    #[error("series did not converge: {0}")]
    NotConvergent(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    InCommand { context: String, source: Box<Error> },
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}
