use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("operator is not isotropic on the code space (residual {residual:.3e})")]
    NonIsotropic { residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step size {dt} exceeds evolution time {t}")]
    Step { dt: f64, t: f64 },

    #[error("integration unstable: trace drifted by {drift:.3e}")]
    Instability { drift: f64 },

    #[error("recovery leaked {loss:.3e} of the trace out of the corrected subspace")]
    Leakage { loss: f64 },

    #[error("QEC condition violated for {term} (residual {residual:.3e})")]
    CodeCondition { term: String, residual: f64 },

    #[error("error operator {k} is degenerate (d_kk = {d:.3e}) but couples with strength {coupling:.3e}")]
    DegenerateError { k: usize, d: f64, coupling: f64 },

    #[error("error operators {k} and {j} are not orthogonal (overlap {overlap:.3e})")]
    Orthogonality { k: usize, j: usize, overlap: f64 },

    #[error("finite-difference derivative is inconsistent between step sizes (relative change {relative:.3e})")]
    FiniteDifference { relative: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
