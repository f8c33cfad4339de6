use thiserror::Error;

/// Errors produced by tnum construction, the operators and the harnesses.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TnumError {
    #[error("ill-formed tnum: value {value:#x} and mask {mask:#x} share bits")]
    IllFormed { value: u64, mask: u64 },

    #[error("width {0} is outside 1..=64")]
    WidthRange(u32),

    #[error("{field} {word:#x} has bits above width {width}")]
    BitsAboveWidth {
        field: &'static str,
        word: u64,
        width: u32,
    },

    #[error("trit index {index} out of range for width {width}")]
    IndexRange { index: u32, width: u32 },

    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("width {width} exceeds the enumeration limit {limit}")]
    WidthTooLargeForEnumeration { width: u32, limit: u32 },

    #[error("concrete set is empty")]
    EmptySet,

    #[error("{op} takes a constant shift amount, got a tnum with unknown bits")]
    NotAShiftAmount { op: &'static str },

    #[error("no usable monotonic timer: {0}")]
    TimerUnavailable(String),

    #[error("fixture record {index}: {message}")]
    Fixture { index: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = TnumError> = std::result::Result<T, E>;
