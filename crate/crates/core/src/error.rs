use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library and the command-line front end.
///
/// Every variant maps to a stable string code (see [`Error::code`]) that the
/// CLI echoes in its JSON error payload.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),

    #[error("explicit list has {available} terms, {requested} requested")]
    ListTooShort { available: usize, requested: usize },

    #[error("residue stream modulo {modulus} is truncated; exact evaluation unavailable")]
    InexactTail { modulus: String },

    #[error("no lower-bound certificate: {reason}")]
    NoCertificate { reason: String },

    #[error("certificate search was inconclusive: {0}")]
    InconclusiveCertificate(String),

    #[error("iteration cap reached in {0}")]
    ConvergenceFailure(&'static str),

    #[error("spectrum meets the branch cut at {0}")]
    SpectrumOnCut(String),

    #[error("matrix is not diagonalizable to working accuracy (eigenvector condition {0:.3e})")]
    NotDiagonalizable(f64),

    #[error("numerical range meets the negative real axis near {0}")]
    NegativeRealInRange(f64),

    #[error("lattice rank {0} exceeds the supported maximum of 4")]
    RankTooLarge(usize),

    #[error("invalid lattice basis: {0}")]
    InvalidBasis(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::ListTooShort { .. } => "list_too_short",
            Error::InexactTail { .. } => "inexact_tail",
            Error::NoCertificate { .. } => "no_certificate",
            Error::InconclusiveCertificate(_) => "inconclusive_certificate",
            Error::ConvergenceFailure(_) => "convergence_failure",
            Error::SpectrumOnCut(_) => "spectrum_on_cut",
            Error::NotDiagonalizable(_) => "not_diagonalizable",
            Error::NegativeRealInRange(_) => "negative_real_in_range",
            Error::RankTooLarge(_) => "rank_too_large",
            Error::InvalidBasis(_) => "invalid_basis",
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
