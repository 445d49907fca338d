use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("not a permutation of the register's qubits")]
    InvalidPermutation,
    #[error("qubit {qubit} outside register of {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("basis index {0} outside [0, 8)")]
    BasisIndexOutOfRange(usize),
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("perturbation is not valid: {0}")]
    InvalidPerturbation(&'static str),
    #[error("state is not positive semidefinite (lowest eigenvalue {min_eigenvalue:e})")]
    NonPositiveState { min_eigenvalue: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidInput(&'static str),
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("post-selection probability {probability:e} below floor")]
    ZeroSuccessProbability { probability: f64 },
    #[error("bracket [{lo}, {hi}] does not straddle the threshold")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("{0}")]
    InvalidArgument(&'static str),
}
