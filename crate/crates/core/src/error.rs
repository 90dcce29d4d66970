use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix is not Hermitian (‖A − A†‖_F = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not positive definite (eigenvalues in [{min:e}, {max:e}])")]
    NotPositiveDefinite { min: f64, max: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("vector norm {norm:e} is too small to normalize")]
    ZeroVector { norm: f64 },
    #[error("override phase violates the reality condition (imaginary part {imag:e})")]
    OverrideViolatesReality { imag: f64 },
    #[error("conj(η)⟨b_i|b_j⟩ is not real (imaginary part {imag:e})")]
    RealityViolated { imag: f64 },
    #[error("reflector override is not orthogonal to b_j (|⟨ũ|b_j⟩| = {overlap:e})")]
    OverrideNotOrthogonal { overlap: f64 },
    #[error("certification failed for index {index}: residual {residual:e}")]
    CertificationFailed { index: usize, residual: f64 },
    #[error("time instant {t} is negative")]
    NegativeTime { t: f64 },
    #[error("design matrix is numerically singular (det = {det:e}, 1/cond = {rcond:e})")]
    SingularDesign { det: f64, rcond: f64 },
    #[error("operator is not a valid effect 0 ≤ Q ≤ I (eigenvalues in [{min:e}, {max:e}])")]
    InvalidEffect { min: f64, max: f64 },
    #[error("measurement is not informationally complete (rank {rank} < {required})")]
    NotInformationallyComplete { rank: usize, required: usize },
    #[error("dimension {d} is too small (need d ≥ 2)")]
    DimensionTooSmall { d: usize },
    #[error("decay value {value} is outside [0, 1]")]
    LambdaOutOfRange { value: f64 },
    #[error("state is not a SIC fiducial (max deviation {deviation:e})")]
    NotAFiducial { deviation: f64 },
    #[error("expected {expected} items, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures that come from the numerics rather than the input
    /// shape: singular designs, missing informational completeness and the like.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Singular
                | Error::SingularDesign { .. }
                | Error::NotInformationallyComplete { .. }
                | Error::CertificationFailed { .. }
                | Error::NotAFiducial { .. }
                | Error::ZeroVector { .. }
        )
    }
}
