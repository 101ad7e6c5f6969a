use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("atomic level equations have no solution (residual {residual:.3e})")]
    InconsistentSystem { residual: f64 },
    #[error("atomic level equations leave {free} eta coefficient(s) undetermined")]
    UnderdeterminedSystem { free: usize },

    #[error("continuum density is not positive at delta = {at}")]
    NonpositiveDensity { at: f64 },
    #[error("discrete coupling matrix is not Hermitian (max |v_ij - conj(v_ji)| = {residual:.3e})")]
    NonHermitianCoupling { residual: f64 },
    #[error("tabulated coupling profiles must share one grid for this operation")]
    IncompatibleProfiles,

    #[error("principal-value quadrature did not converge at omega = {omega} (last change {change:.3e})")]
    QuadratureFailure { omega: f64, change: f64 },
    #[error("singular matrix at omega = {omega}")]
    SingularMatrix { omega: f64 },
    #[error("all discrete-continuum couplings vanish at omega = {omega}")]
    ZeroCouplingRow { omega: f64 },
    #[error("normalisation residual {residual:.3e} exceeds tolerance at omega = {omega}")]
    NormalizationFailure { omega: f64, residual: f64 },

    #[error("operation requires constant continuum couplings and density")]
    NotFlat,
    #[error("transition strength vanishes")]
    ZeroStrength,
    #[error("expected {expected} discrete quasimodes, found {found}")]
    WrongArity { expected: usize, found: usize },
    #[error("two-mode analysis is not in the regime required here ({0})")]
    WrongRegime(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("structure function integral diverges")]
    DivergentIntegral,
    #[error("repeated pole near {at}")]
    RepeatedPole { at: num_complex::Complex64 },
    #[error("pole {at} lies in the upper half plane")]
    UpperHalfPlanePole { at: num_complex::Complex64 },
    #[error("uncancelled pole {at} lies on the real axis")]
    RealAxisPole { at: num_complex::Complex64 },
    #[error("sampled structure functions carry no rational model; supply poles explicitly")]
    NoRationalModel,
    #[error("kernel evaluated at negative time {0}")]
    NegativeTime(f64),

    #[error("step h = {h} too large: h * max frequency = {product:.4} > {limit}")]
    StepTooLarge { h: f64, product: f64, limit: f64 },
    #[error("t_max = {t_max} reaches the recurrence time {recurrence:.4} of the discretised continuum")]
    RecurrenceHorizonExceeded { t_max: f64, recurrence: f64 },
    #[error("band of width {bandwidth} does not cover the required {required:.4}")]
    BandTooNarrow { bandwidth: f64, required: f64 },
    #[error("top Fock layer population {population:.3e} exceeds 1e-6")]
    TruncationTooSmall { population: f64 },
    #[error("time grids differ")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;
