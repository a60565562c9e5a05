use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bitstring {0:?}: expected a string over '0'/'1'")]
    BadBitstring(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("malformed instance: {0}")]
    Malformed(String),

    #[error("{what} needs {requested} qubits but the cap is {cap}")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("state is not normalized: norm {0}")]
    NotNormalized(f64),

    #[error("groundspace decomposition failed: {0}")]
    Decomposition(String),

    #[error("empty set")]
    EmptySet,

    #[error("string {0} has zero degree in the configuration graph")]
    ZeroDegree(String),

    #[error("string {0} is bad")]
    BadStringInSet(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("calibration failed: no T <= {t_max} reached rejection {target} (best {best:.4} at T={best_t})")]
    Calibration {
        t_max: u64,
        target: f64,
        best: f64,
        best_t: u64,
    },

    #[error("lemma violation: {0}")]
    LemmaViolation(String),

    #[error("generator gave up after {attempts} attempts (best ground energy {best:.4e})")]
    GeneratorBudget { attempts: usize, best: f64 },

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
