use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pairing of two sequences with non-vanishing tails is not summable")]
    NonSummable,
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("rank-one vectors are linearly dependent (rank {rank} < {count})")]
    DependentVectors { rank: usize, count: usize },
    #[error("matrix is not self-adjoint")]
    NotSelfAdjoint,
    #[error("series inversion exceeded depth {0}")]
    DepthExceeded(usize),
    #[error("projection chain invariant failed: {0}")]
    ChainInconsistent(String),
    #[error("floating-point decision is ambiguous: {0}")]
    FloatingAmbiguous(String),
    #[error("auxiliary space is trivial")]
    EmptyAuxiliarySpace,
    #[error("requested order {requested} beyond valid truncation order {valid}")]
    TruncationTooShort { requested: i64, valid: i64 },
    #[error("case mismatch: {0}")]
    CaseMismatch(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("quasi-symmetric invertibility equivalence violated: {0}")]
    QsAssumptionViolated(String),
    #[error("identity violated at site {site}: residual {residual}")]
    IdentityViolated { site: i64, residual: String },
    #[error("resolvent matrix is near singular (condition {0:e})")]
    NearSingular(f64),
    #[error("singular matrix")]
    Singular,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("exact and floating scalars cannot be mixed")]
    MixedModes,
}

pub type Result<T> = std::result::Result<T, Error>;
