use thiserror::Error;

/// Errors raised by the key-rate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} outside [0, 1]")]
    Domain { value: f64 },

    #[error("infeasible error pair: e_bit={e_bit}, e_ph={e_ph} admits no Bell-diagonal state")]
    Infeasible { e_bit: f64, e_ph: f64 },

    #[error("lambda3={lambda3} outside feasible interval [{lo}, {hi}]")]
    LambdaOutOfRange { lambda3: f64, lo: f64, hi: f64 },

    #[error("invalid Bell-diagonal state: {0}")]
    InvalidState(String),

    #[error("block size must be at least 1, got {0}")]
    BlockSize(u32),

    #[error("block length mismatch: x has {x} bits, y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("advantage distillation success probability vanished")]
    ZeroSuccess,

    #[error("invalid parameter `{field}`: {constraint}")]
    Param {
        field: &'static str,
        constraint: String,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },

    #[error("no positive-rate region: rate at {at_km} km is not above the floor")]
    NoPositiveRate { at_km: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
