use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid subsystem index {0} (indices start at 1)")]
    InvalidIndex(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("gain derivation failed at {index_class}: {reason}")]
    Derivation { index_class: String, reason: String },
    #[error("invalid certificate data: {0}")]
    InvalidCertificate(String),
    #[error("small-gain condition violated: {0}")]
    SmallGainViolated(String),
    #[error("cannot certify: {0}")]
    CannotCertify(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("unsupported rule combination: {0}")]
    Unsupported(String),
}
