use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("expectation has imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("qubit count {0} out of range")]
    QubitCount(usize),

    #[error("Pauli words have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("product carries an imaginary phase and cannot be folded into a signed word")]
    ImaginaryPhase,

    #[error("parameter {name} = {value} out of range")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("unknown gate '{0}'")]
    UnknownGate(String),

    #[error("gate '{0}' is not Clifford")]
    NonClifford(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("readout coefficient for {0} is too small to extract ({1:.3e})")]
    Uncalibratable(String, f64),

    #[error("identity target cannot be extracted by readout")]
    IdentityTarget,

    #[error("relevance distribution sums to {0}, expected 1")]
    Normalization(f64),

    #[error("linear system is singular")]
    Singular,

    #[error("incomplete record set: {0}")]
    IncompleteRecords(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that signal a violated numerical invariant rather
    /// than bad user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::NotUnitary(_)
                | Error::ImaginaryResidue(_)
                | Error::Normalization(_)
                | Error::Singular
                | Error::ImaginaryPhase
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
