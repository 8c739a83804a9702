use thiserror::Error;

/// Crate-wide error type. Numerical verdicts ("not pure", "condition (K3)
/// violated", ...) are reported through report structs, not through errors;
/// errors signal that a requested computation could not be carried out.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient a_{index} = {value} is not positive")]
    NonpositiveCoefficient { index: usize, value: f64 },

    #[error("kernel coefficients must start with a_0 = 1, got {0}")]
    BadNormalization(f64),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("kernel horizon too short: need max_degree >= {needed}, have {have}")]
    HorizonTooShort { needed: usize, have: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tuple is not commuting: ||[T_{i}, T_{j}]|| = {norm:.3e} exceeds tolerance {tol:.3e}")]
    NotCommuting { i: usize, j: usize, norm: f64, tol: f64 },

    #[error("operator series did not meet the stop criterion within {terms} terms (last term {last_term:.3e}, tol {tol:.3e}); horizon-limited, not a proof of divergence")]
    SeriesNotConverged { terms: usize, last_term: f64, tol: f64 },

    #[error("defect operator is not positive semidefinite: min eigenvalue {min_eig:.3e} < -{tol:.3e}")]
    NotPositive { min_eig: f64, tol: f64 },

    #[error("spectral safety check failed: max sampled spectral radius {max_rho:.4} >= {limit:.4} (r estimate {r_estimate:.4})")]
    SpectralUnsafe { max_rho: f64, r_estimate: f64, limit: f64 },

    #[error("tuple is not a pure K-contraction at the working horizon: final reconstruction residual {residual:.3e} > {tol:.3e}")]
    NotPure { residual: f64, tol: f64 },

    #[error("dilation isometry degraded: residual {residual:.3e} exceeds {tol:.3e}; truncation order is too small for this tuple")]
    IsometryDegraded { residual: f64, tol: f64 },

    #[error("membership test for Im M_z* is ambiguous: projection residual {residual:.3e} lies in the gray zone [{lo:.3e}, {hi:.3e}]")]
    MembershipAmbiguous { residual: f64, lo: f64, hi: f64 },

    #[error("dilation is not minimal: support dimension {support} < coefficient dimension {full}")]
    NotMinimal { support: usize, full: usize },

    #[error("dilations cannot be reconciled by a unitary: residual {residual:.3e} > {tol:.3e}")]
    IrreconcilableDilations { residual: f64, tol: f64 },

    #[error("kernel singularity: |<z_i, z_j>| = {value:.4} >= 1 for a sample pair")]
    KernelSingularity { value: f64 },

    #[error("polynomial degree {degree} exceeds truncation order {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("invalid job file: {0}")]
    BadJob(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command-line front end.
    /// 2 = verdict failure, 3 = input error, 4 = numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SeriesNotConverged { .. }
            | Error::IsometryDegraded { .. }
            | Error::MembershipAmbiguous { .. }
            | Error::SpectralUnsafe { .. } => 4,
            Error::NotPositive { .. }
            | Error::NotPure { .. }
            | Error::NotCommuting { .. }
            | Error::NotMinimal { .. }
            | Error::IrreconcilableDilations { .. } => 2,
            _ => 3,
        }
    }
}
