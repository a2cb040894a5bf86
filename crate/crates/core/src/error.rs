use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("gate {kind} expects {expected} qubit(s), got {got}")]
    ArityMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gate acts twice on qubit {0}")]
    RepeatedQubit(usize),

    #[error("{num_qubits} qubits exceeds the dense-simulation cap of {cap}")]
    QubitCap { num_qubits: usize, cap: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expectation value has imaginary residue {0:e}")]
    ComplexExpectation(f64),

    #[error("Tr(rho^M) = {0:e} is numerically degenerate")]
    DegenerateDenominator(f64),

    #[error("sampled VD denominator {0:e} too small; increase shots")]
    InsufficientShots(f64),

    #[error("value {0} outside the Pauli expectation range [-1, 1]")]
    ValueOutOfRange(f64),

    #[error("unsupported noise level c = {0}")]
    UnsupportedNoiseLevel(u32),

    #[error("duplicate extrapolation level {0}")]
    SingularLevels(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("all {0} training candidates have vanishing exact values")]
    DegenerateTrainingSet(usize),

    #[error("shot budget {total} too small for {circuits} circuit evaluations")]
    BudgetTooSmall { total: u64, circuits: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}
