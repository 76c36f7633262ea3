use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Variants carry enough context to
/// reproduce the refusal; [`Error::kind`] gives a stable machine-readable tag.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interval boundary {boundary} lies within tolerance of eigenvalue {eigenvalue}")]
    BoundaryHitsSpectrum { boundary: f64, eigenvalue: f64 },

    #[error("sampling too coarse: phase step {phase_step:.4} at step {step} is not below pi/2")]
    SamplingTooCoarse { step: usize, phase_step: f64 },

    #[error("sample {index} is singular (min singular value {min_singular:.3e})")]
    SingularSample { index: usize, min_singular: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid algebra shape: {0}")]
    InvalidShape(String),

    #[error("unsupported homomorphism: {0}")]
    UnsupportedHomomorphism(String),

    #[error("K1 class has nonzero component {value} on scalar block {block}")]
    NonzeroScalarK1 { block: usize, value: i64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("function is not a normalizing function: {0}")]
    NotNormalizing(String),

    #[error("gap level {level} hits eigenvalue {eigenvalue}")]
    GapHitsSpectrum { level: f64, eigenvalue: f64 },

    #[error("no spectral gap level found starting at sample {sample} (t = {t}); refine the grid")]
    NoGapFound { sample: usize, t: f64 },

    #[error("rank of projection varies over theta on block {block}: {ranks:?}")]
    NonConstantRank { block: usize, ranks: Vec<usize> },

    #[error("not a projection: eigenvalue {eigenvalue} is neither near 0 nor near 1")]
    NotProjection { eigenvalue: f64 },

    #[error("value on loop block {block} depends on theta: {values:?}")]
    ThetaInconsistent { block: usize, values: Vec<i64> },

    #[error("eigenvalue sits at zero near t = {t} and refinement was exhausted")]
    UnresolvedCrossing { t: f64 },

    #[error("concatenation endpoints differ by {defect:.3e}")]
    EndpointMismatch { defect: f64 },

    #[error("matrix is not unitary: defect {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("Lagrangians are not transverse: min singular value of u0 - u1 is {min_singular:.3e}")]
    NotTransverse { min_singular: f64 },

    #[error("hermitian form is degenerate ({zero_count} zero eigenvalues)")]
    DegenerateForm { zero_count: usize },

    #[error("internal cross-check failed: {0}")]
    CrossCheckFailed(String),

    #[error("operator is not odd with respect to the grading: defect {defect:.3e}")]
    NotOdd { defect: f64 },

    #[error("not a Lagrangian projection: {0}")]
    NotLagrangian(String),

    #[error("endpoint {which} is singular (min singular value {min_singular:.3e})")]
    SingularEndpoint { which: usize, min_singular: f64 },

    #[error("suspended operator is not invertible at theta index {theta}, x = {x}")]
    GaplessSuspension { theta: usize, x: f64 },

    #[error("projection family changes rank: expected {expected}, found {found}")]
    RankJump { expected: usize, found: usize },

    #[error("operator is not an almost-involution: |F^2 - 1| = {defect:.3e}")]
    NotAlmostInvolution { defect: f64 },

    #[error("kernel rank varies: expected {expected}, found {found} at theta index {theta}")]
    KernelRankJump { expected: usize, found: usize, theta: usize },

    #[error("shooting scan too coarse: {0}")]
    ScanTooCoarse(String),

    #[error("sign conventions are inconsistent: {0}")]
    InconsistentConventions(String),
}

impl Error {
    /// Stable identifier used in machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NonFinite => "NonFinite",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::BoundaryHitsSpectrum { .. } => "BoundaryHitsSpectrum",
            Error::SamplingTooCoarse { .. } => "SamplingTooCoarse",
            Error::SingularSample { .. } => "SingularSample",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidShape(_) => "InvalidShape",
            Error::UnsupportedHomomorphism(_) => "UnsupportedHomomorphism",
            Error::NonzeroScalarK1 { .. } => "NonzeroScalarK1",
            Error::InvalidPath(_) => "InvalidPath",
            Error::NotNormalizing(_) => "NotNormalizing",
            Error::GapHitsSpectrum { .. } => "GapHitsSpectrum",
            Error::NoGapFound { .. } => "NoGapFound",
            Error::NonConstantRank { .. } => "NonConstantRank",
            Error::NotProjection { .. } => "NotProjection",
            Error::ThetaInconsistent { .. } => "ThetaInconsistent",
            Error::UnresolvedCrossing { .. } => "UnresolvedCrossing",
            Error::EndpointMismatch { .. } => "EndpointMismatch",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NotTransverse { .. } => "NotTransverse",
            Error::DegenerateForm { .. } => "DegenerateForm",
            Error::CrossCheckFailed(_) => "CrossCheckFailed",
            Error::NotOdd { .. } => "NotOdd",
            Error::NotLagrangian(_) => "NotLagrangian",
            Error::SingularEndpoint { .. } => "SingularEndpoint",
            Error::GaplessSuspension { .. } => "GaplessSuspension",
            Error::RankJump { .. } => "RankJump",
            Error::NotAlmostInvolution { .. } => "NotAlmostInvolution",
            Error::KernelRankJump { .. } => "KernelRankJump",
            Error::ScanTooCoarse(_) => "ScanTooCoarse",
            Error::InconsistentConventions(_) => "InconsistentConventions",
        }
    }

    /// Internal consistency failures indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::CrossCheckFailed(_) | Error::InconsistentConventions(_)
        )
    }
}
