use thiserror::Error;

/// Errors produced by the simulation layer.
#[derive(Debug, Error)]
pub enum AqiaError {
    #[error("agent must have between 1 and {max} qubits, got {got}", max = crate::agent::MAX_QUBITS)]
    QubitCount { got: usize },
    #[error("bond ({k}, {l}) is invalid for {n} qubits (need 0 <= k < l < n)")]
    InvalidBond { k: usize, l: usize, n: usize },
    #[error("duplicate bond ({k}, {l})")]
    DuplicateBond { k: usize, l: usize },
    #[error("expected {expected} local fields, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error("expected {expected} bond couplings, got {got}")]
    CouplingCount { expected: usize, got: usize },
    #[error("non-finite parameter: {what}")]
    NonFinite { what: &'static str },
    #[error("transverse field must be >= 0, got {got}")]
    NegativeTransverse { got: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: state has {state} amplitudes, agent Hilbert space is {expected}")]
    DimensionMismatch { state: usize, expected: usize },
    #[error("ensemble statistics need at least 2 agents, got {got}")]
    TooFewAgents { got: usize },
    #[error("edge density must be in (0, 1], got {got}")]
    EdgeDensity { got: f64 },
    #[error("{what}")]
    InvalidInput { what: String },
    #[error("all {total} realizations failed to produce a result")]
    AllRealizationsFailed { total: usize },
    #[error("susceptibility needs at least 3 strictly increasing grid points")]
    TooFewGridPoints,
    #[error("Binder cumulant undefined: all samples are zero")]
    DegenerateBinderSamples,
    #[error("no Binder-cumulant crossing found inside the grid")]
    NoCrossing,
    #[error("susceptibility peak for size N={n} lies on the grid boundary")]
    PeakOnBoundary { n: usize },
    #[error("scaling fit needs at least {need} distinct system sizes, got {got}")]
    TooFewSizes { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, AqiaError>;
