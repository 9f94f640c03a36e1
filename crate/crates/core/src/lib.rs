//! Numerical Finsler geometry on a single coordinate chart.
//!
//! The metric is the root object ([`MetricModel`]); pointwise tensors come
//! from truncated Taylor jets of F² ([`jet`]), and the submanifold, focal and
//! isoparametric layers are built on top of geodesic integration.

pub mod error;
pub mod field;
pub mod finite_diff;
pub mod focal;
pub mod geodesic;
pub mod hypersurface;
pub mod isoparametric;
pub mod jet;
pub mod legendre;
pub mod metric;
pub mod ode;
pub mod randers;
pub mod tensors;
pub mod volume;

pub use error::{GeometryError, Result};
pub use metric::{ChartDomain, MetricKind, MetricModel, MinkowskiNorm, RiemannianMetric};
pub use randers::{NavigationData, WindField};
pub use tensors::{SprayData, Tensor3};
pub use volume::VolumeForm;

/// Flag-curvature and S-curvature constants of a model, declared or measured.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceFormProfile {
    pub c: f64,
    pub c_prime: f64,
    pub measured: bool,
    /// Largest deviation seen when measuring; zero for declared profiles.
    pub residual: f64,
}

impl SpaceFormProfile {
    pub fn declared(c: f64, c_prime: f64) -> Self {
        SpaceFormProfile {
            c,
            c_prime,
            measured: false,
            residual: 0.0,
        }
    }
}
