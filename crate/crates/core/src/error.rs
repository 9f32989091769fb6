use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Errors raised anywhere in the compilation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unbound parameter: gate angle references t[{0}]")]
    UnboundParameter(usize),

    #[error("parameter index {index} out of range (circuit has {count} parameters)")]
    ParamOutOfRange { index: usize, count: usize },

    #[error("qubit index {index} out of range (circuit has {width} qubits)")]
    QubitOutOfRange { index: usize, width: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("parametrization has {got} values, circuit expects {expected}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("width {width} exceeds dense-matrix cap of {cap} qubits")]
    TooWide { width: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("control pulse has zero time steps")]
    ZeroSteps,

    #[error("no convergence within the upper bound of {upper_bound_ns} ns after {} probes", probes.len())]
    NoConvergence {
        upper_bound_ns: f64,
        probes: Vec<(f64, bool)>,
    },

    #[error("parameter monotonicity violated at gate {gate}: t[{found}] follows t[{previous}]")]
    NotMonotonic {
        gate: usize,
        previous: usize,
        found: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("gate library build failed for {gate}: {reason}")]
    LibraryBuild { gate: String, reason: String },

    #[error("gate library has no entry for {0}")]
    MissingLibraryEntry(String),

    #[error("pulse cache miss for block {0}")]
    CacheMiss(String),

    #[error("missing tuned hyperparameters for block {0}")]
    MissingTuned(String),

    #[error("block {block} failed to compile: {reason}")]
    BlockCompile { block: String, reason: String },

    #[error("overlapping segments drive the same control field on qubit {qubit}")]
    OverlappingSegments { qubit: usize },

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

impl Error {
    /// Stable kebab-case identifier of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnboundParameter(_) => "unbound-parameter",
            Error::ParamOutOfRange { .. } => "param-out-of-range",
            Error::QubitOutOfRange { .. } => "qubit-out-of-range",
            Error::InvalidGate(_) => "invalid-gate",
            Error::ParamCountMismatch { .. } => "param-count-mismatch",
            Error::TooWide { .. } => "too-wide",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Syntax { .. } => "syntax",
            Error::InvalidHamiltonian(_) => "invalid-hamiltonian",
            Error::InvalidConfig(_) => "invalid-config",
            Error::ZeroSteps => "zero-steps",
            Error::NoConvergence { .. } => "no-convergence",
            Error::NotMonotonic { .. } => "not-monotonic",
            Error::Unsupported(_) => "unsupported",
            Error::LibraryBuild { .. } => "library-build",
            Error::MissingLibraryEntry(_) => "missing-library-entry",
            Error::CacheMiss(_) => "cache-miss",
            Error::MissingTuned(_) => "missing-tuned",
            Error::BlockCompile { .. } => "block-compile",
            Error::OverlappingSegments { .. } => "overlapping-segments",
            Error::EmptyGrid => "empty-grid",
            Error::InvalidGraph(_) => "invalid-graph",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
