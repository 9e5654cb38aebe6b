//! Error taxonomy shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Amplitude vector with (numerically) zero norm, or a bra that is not
    /// normalized.
    #[error("normalization error: vector norm {norm:.3e} unusable")]
    Normalization { norm: f64 },

    /// Amplitude/operator length does not match the joint basis dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Joint dimension above the dense-algebra cap.
    #[error("joint dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// Unknown register, colliding register identity, or missing bin/level
    /// label.
    #[error("register error: {0}")]
    Register(String),

    /// Mixture weights are not positive or do not sum to one.
    #[error("mixture weights must be positive and sum to 1 (sum was {sum})")]
    Weight { sum: f64 },

    /// Projection probability below the herald threshold; no post-state.
    #[error("herald failure: projection probability {probability:.3e} below threshold")]
    HeraldFailure { probability: f64 },

    /// Atomic response diverges: zero detuning and zero linewidth with
    /// nonzero coupling.
    #[error("singular atomic response: zero detuning and zero linewidth with coupling on")]
    Singularity,

    /// Out-of-range scalar parameter (probabilities, times, rates).
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// A measurement grid that cannot resolve the requested frequencies.
    #[error("grid error: {0}")]
    Grid(String),

    /// Malformed state or config file.
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
}
