use thiserror::Error;

/// Errors surfaced by the emulator and the circuits built on top of it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} slots, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("operand alignment: levels {left_level}/{right_level}, scales {left_scale}/{right_scale}")]
    Alignment {
        left_level: u32,
        right_level: u32,
        left_scale: u32,
        right_scale: u32,
    },

    #[error("multiplicative depth exhausted: level {level}, need {needed} more")]
    DepthExhausted { level: u32, needed: u32 },

    #[error("rotation key missing for step {step}")]
    KeyMissing { step: i64 },

    #[error("BSGS planning failed: {0}")]
    Planning(String),

    #[error("diagonal decomposition conflict at diagonal {diag}, position {pos}")]
    DecompositionConflict { diag: i64, pos: usize },

    #[error("normalization plan infeasible at round {round}: {reason}")]
    PlanInfeasible { round: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
