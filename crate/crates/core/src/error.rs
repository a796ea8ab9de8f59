use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not hermitian (max |A - A^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not a density matrix: {0}")]
    NotDensity(String),

    #[error("eigenvalue {value:e} of sector {sector} is below the floor {floor:e}")]
    DegenerateEigenvalue { sector: usize, value: f64, floor: f64 },

    #[error("protocol aborted: {0}")]
    ProtocolAbort(String),

    #[error("protocol state error: {0}")]
    ProtocolState(String),

    #[error("parameter search exhausted: no feasible modulation order M <= {limit}")]
    SearchExhausted { limit: usize },

    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: u64, message: String },

    #[error("stellar polynomial is identically zero")]
    ZeroPolynomial,

    #[error("mixture has no points")]
    EmptyMixture,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
