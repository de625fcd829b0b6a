use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level r = {0} is outside the supported range")]
    InvalidLevel(u32),
    #[error("{value} is not a unit modulo {modulus}")]
    NotAUnit { value: u64, modulus: u64 },
    #[error("{what}: size {size} exceeds budget {budget}")]
    BudgetExceeded { what: String, size: u128, budget: u128 },
    #[error("generator certification failed: closure {reached} of expected {expected}")]
    CertificationFailed { reached: u128, expected: u128 },
    #[error("search exhausted after {0} attempts")]
    SearchExhausted(usize),
    #[error("no conjugating element found: {0}")]
    NotFound(String),
    #[error("psi_beta is not a character on the torus congruence part: {0}")]
    InconsistentRestriction(String),
    #[error("trace pairing is degenerate on the residual space")]
    DegenerateForm,
    #[error("coupling element is not in the torus")]
    GNotInTorus,
    #[error("element is not in Z(p^(l-1)/p^r)")]
    NotInZ,
    #[error("element is not in the congruence level p^{0}")]
    NotInLevel(u32),
    #[error("element is not in the unipotent radical")]
    NotInU,
    #[error("isotypic check failed: {0}")]
    IsotypicFailure(String),
    #[error("no homomorphic Weil lift on the torus image: {0}")]
    LiftInconsistent(String),
    #[error("sigma is not well defined: {0}")]
    WellDefinednessFailure(String),
    #[error("theta and psi_(beta,rho) disagree on T meet Z: {0}")]
    OverlapMismatch(String),
    #[error("expected a non-negative integer, got {0}")]
    NonIntegerResult(String),
    #[error("operation requires r of the other parity")]
    UsageParity,
    #[error("Mackey decomposition disagrees with the direct count: direct {direct}, mackey {mackey}")]
    MackeyMismatch { direct: i64, mackey: i64 },
    #[error("invalid beta: {0}")]
    InvalidBeta(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
