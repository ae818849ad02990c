use thiserror::Error;

/// Failure modes shared by every module. Each variant carries a short
/// human-readable context string.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("degenerate ambient metric: {0}")]
    DegenerateMetric(String),
    #[error("point outside chart domain: {0}")]
    OutOfDomain(String),
    #[error("insufficient smoothness: {0}")]
    InsufficientSmoothness(String),
    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),
    #[error("geodesic left the chart domain: {0}")]
    LeftDomain(String),
    #[error("integration step failure: {0}")]
    StepFailure(String),
    #[error("degenerate immersion (rank loss): {0}")]
    DegenerateImmersion(String),
    #[error("normal direction is null: {0}")]
    NullNormal(String),
    #[error("degenerate induced metric: {0}")]
    DegenerateInducedMetric(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("singular shape operator: {0}")]
    SingularShapeOperator(String),
    #[error("degenerate second fundamental form: {0}")]
    DegenerateII(String),
    #[error("shape operator not diagonalizable: {0}")]
    NonDiagonalizableA(String),
    #[error("deformation left the nondegenerate class: {0}")]
    LeftEpsilonClass(String),
    #[error("curve is not Frenet: {0}")]
    NotFrenet(String),
    #[error("curve is not unit speed: {0}")]
    NotUnitSpeed(String),
    #[error("curvature blow-up: {0}")]
    BlowUp(String),
    #[error("conjugate point reached: {0}")]
    ConjugatePoint(String),
    #[error("bad direction: {0}")]
    BadDirection(String),
    #[error("jet too shallow: {0}")]
    JetTooShallow(String),
    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),
}

impl GeomError {
    /// Stable identifier used in reports and row status codes.
    pub fn code(&self) -> &'static str {
        use GeomError::*;
        match self {
            DegenerateMetric(_) => "DegenerateMetric",
            OutOfDomain(_) => "OutOfDomain",
            InsufficientSmoothness(_) => "InsufficientSmoothness",
            UnsupportedSignature(_) => "UnsupportedSignature",
            LeftDomain(_) => "LeftDomain",
            StepFailure(_) => "StepFailure",
            DegenerateImmersion(_) => "DegenerateImmersion",
            NullNormal(_) => "NullNormal",
            DegenerateInducedMetric(_) => "DegenerateInducedMetric",
            BadParameters(_) => "BadParameters",
            SingularShapeOperator(_) => "SingularShapeOperator",
            DegenerateII(_) => "DegenerateII",
            NonDiagonalizableA(_) => "NonDiagonalizableA",
            LeftEpsilonClass(_) => "LeftEpsilonClass",
            NotFrenet(_) => "NotFrenet",
            NotUnitSpeed(_) => "NotUnitSpeed",
            BlowUp(_) => "BlowUp",
            ConjugatePoint(_) => "ConjugatePoint",
            BadDirection(_) => "BadDirection",
            JetTooShallow(_) => "JetTooShallow",
            DimensionTooSmall(_) => "DimensionTooSmall",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
