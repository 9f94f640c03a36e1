use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {0:?} lies outside the chart domain")]
    OutsideChart(Vec<f64>),
    #[error("metric evaluated at the zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fundamental tensor is not positive definite (pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("fundamental tensor is numerically singular")]
    SingularTensor,
    #[error("reference vector is zero")]
    ZeroReference,
    #[error("flag direction is parallel to the flagpole")]
    DegenerateFlag,
    #[error("indicatrix quadrature did not converge (relative change {0:e})")]
    QuadratureFailure(f64),
    #[error("Newton iteration for the inverse Legendre map did not converge (residual {0:e})")]
    NewtonDivergence(f64),
    #[error("differential of the function vanishes")]
    VanishingGradient,
    #[error("geodesic leaves the chart at parameter {at:.6}")]
    PathExitsChart { at: f64 },
    #[error("integrator step size underflow at parameter {at:.6}")]
    StepFailure { at: f64 },
    #[error("vector is not a unit normal (residual {0:e})")]
    NotANormal(f64),
    #[error("backward geodesics are not supported for this metric")]
    BackwardUnsupported,
    #[error("model is not a verified space form")]
    NotASpaceForm,
    #[error("irregular point: {0}")]
    IrregularPoint(String),
    #[error("eigenvalue computation failed")]
    EigenFailure,
    #[error("vector is not tangent to the surface (residual {0:e})")]
    NotTangent(f64),
    #[error("vector is not g-orthogonal to the reference field (residual {0:e})")]
    NotOrthogonal(f64),
    #[error("parameter lies on a focal singularity (|s_c' - lambda s_c| = {0:e})")]
    FocalSingularity(f64),
    #[error("principal curvatures are not pairwise distinct (gap {0:e})")]
    DuplicateCurvature(f64),
    #[error("spacing law requires positive curvature, got c = {0}")]
    NotPositiveCurvature(f64),
    #[error("rank estimation failed: {0}")]
    RankEstimationFailure(String),
    #[error("navigation field violates |W|_h < 1 (|W|_h = {0})")]
    NavigationDomainViolation(f64),
    #[error("navigation field is not Killing (defect {0:e})")]
    NotKilling(f64),
}
