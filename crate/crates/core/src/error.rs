use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rotation axis is not a unit vector (|axis| = {0})")]
    NonUnitAxis(f64),

    #[error("spin {index} has norm {norm}, expected 1")]
    InvalidSpin { index: usize, norm: f64 },

    #[error("site index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid kick: {0}")]
    InvalidKick(String),

    #[error("invalid drive protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("window too short: {len} samples, need at least {min}")]
    WindowTooShort { len: usize, min: usize },

    #[error("target energy density {target} outside reachable range [{min}, {max}]")]
    Unreachable { target: f64, min: f64, max: f64 },

    #[error("mismatched schedules: {0}")]
    MismatchedSchedule(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
