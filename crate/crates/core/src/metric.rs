//! Finsler metric models on a single coordinate chart.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{GeometryError, Result};
use crate::jet::{dot, Jet, JetSpace, Scalar};
use crate::randers::NavigationData;

/// Open subset of coordinate space on which a model may be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartDomain {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
}

impl ChartDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        if !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self {
            ChartDomain::Whole => true,
            ChartDomain::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                r2 < radius * radius
            }
        }
    }

    /// Uniform sample from the domain shrunk by `fraction` (whole space uses
    /// the box of half-width `fraction`).
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, fraction: f64, rng: &mut R) -> Vec<f64> {
        match self {
            ChartDomain::Whole => (0..dim).map(|_| rng.gen_range(-fraction..fraction)).collect(),
            ChartDomain::Ball { center, radius } => loop {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r2: f64 = p.iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    break p
                        .iter()
                        .zip(center)
                        .map(|(v, c)| c + v * radius * fraction)
                        .collect();
                }
            },
        }
    }
}

/// Riemannian metric fields with analytic coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum RiemannianMetric {
    Euclidean,
    /// Round unit-sphere metric in stereographic coordinates, 4|dx|²/(1+|x|²)².
    StereographicSphere,
    /// Constant symmetric positive-definite coefficients.
    Constant(DMatrix<f64>),
    /// δ_ij + a·x_i x_j, a non-conformal test metric.
    Warped { a: f64 },
}

impl RiemannianMetric {
    /// Coefficient matrix h_ij(x).
    pub fn matrix<T: Scalar>(&self, x: &[T]) -> Vec<Vec<T>> {
        let n = x.len();
        let zero = x[0].lift(0.0);
        let mut h = vec![vec![zero.clone(); n]; n];
        match self {
            RiemannianMetric::Euclidean => {
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = zero.lift(1.0);
                }
            }
            RiemannianMetric::StereographicSphere => {
                let r2 = dot(x, x);
                let conf = ((r2 + 1.0).square()).recip() * 4.0;
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = conf.clone();
                }
            }
            RiemannianMetric::Constant(m) => {
                for (i, row) in h.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = zero.lift(m[(i, j)]);
                    }
                }
            }
            RiemannianMetric::Warped { a } => {
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = x[i].clone() * x[j].clone() * *a + delta;
                    }
                }
            }
        }
        h
    }

    /// h_x(u, v).
    pub fn inner<T: Scalar>(&self, x: &[T], u: &[T], v: &[T]) -> T {
        match self {
            RiemannianMetric::Euclidean => dot(u, v),
            RiemannianMetric::StereographicSphere => {
                let r2 = dot(x, x);
                dot(u, v) * ((r2 + 1.0).square()).recip() * 4.0
            }
            _ => {
                let h = self.matrix(x);
                let hv: Vec<T> = h.iter().map(|row| dot(row, v)).collect();
                dot(u, &hv)
            }
        }
    }

    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let h = self.matrix(x);
        DMatrix::from_fn(n, n, |i, j| h[i][j])
    }

    /// Levi-Civita symbols Γ^k_ij, indexed `[k][i][j]`, from exact first
    /// derivatives of h_ij.
    pub fn christoffel(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let n = x.len();
        let space = JetSpace::total(n, 1);
        let xs: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, x[i])).collect();
        let h = self.matrix(&xs);
        let dh = |i: usize, j: usize, k: usize| h[i][j].derivative_wrt(&[k]);
        let hmat = DMatrix::from_fn(n, n, |i, j| h[i][j].value());
        let hinv = hmat.try_inverse().expect("Riemannian metric must be invertible");
        let mut gamma = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += hinv[(k, l)] * (dh(j, l, i) + dh(i, l, j) - dh(i, j, l));
                    }
                    gamma[k][i][j] = 0.5 * acc;
                }
            }
        }
        gamma
    }

    pub fn sqrt_det(&self, x: &[f64]) -> f64 {
        self.matrix_at(x).determinant().sqrt()
    }
}

/// Minkowski norms (metrics independent of position).
#[derive(Clone, Debug, PartialEq)]
pub enum MinkowskiNorm {
    /// (Σ y_i⁴ + ε(Σ y_i²)²)^{1/4}; strongly convex for ε > 0.
    Quartic { eps: f64 },
}

impl MinkowskiNorm {
    pub fn eval<T: Scalar>(&self, y: &[T]) -> T {
        match self {
            MinkowskiNorm::Quartic { eps } => {
                let sq = dot(y, y);
                let mut quart = y[0].clone().square().square();
                for v in &y[1..] {
                    quart = quart + v.clone().square().square();
                }
                (quart + sq.square() * *eps).powf(0.25)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    Riemannian(RiemannianMetric),
    Minkowski(MinkowskiNorm),
    Randers(NavigationData),
    /// Funk metric of the open unit ball.
    FunkBall,
    Reverse(Box<MetricModel>),
}

/// A Finsler metric on one chart: the object every computation consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricModel {
    dim: usize,
    kind: MetricKind,
    domain: ChartDomain,
}

impl MetricModel {
    pub fn new(dim: usize, kind: MetricKind, domain: ChartDomain) -> Self {
        assert!(dim >= 2, "chart dimension must be at least 2");
        MetricModel { dim, kind, domain }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::riemannian(dim, RiemannianMetric::Euclidean)
    }

    pub fn riemannian(dim: usize, h: RiemannianMetric) -> Self {
        Self::new(dim, MetricKind::Riemannian(h), ChartDomain::Whole)
    }

    pub fn quartic(dim: usize, eps: f64) -> Self {
        Self::new(
            dim,
            MetricKind::Minkowski(MinkowskiNorm::Quartic { eps }),
            ChartDomain::Whole,
        )
    }

    pub fn funk_ball(dim: usize) -> Self {
        Self::new(
            dim,
            MetricKind::FunkBall,
            ChartDomain::Ball {
                center: vec![0.0; dim],
                radius: 1.0,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    /// F(x, -y) = F(x, y) for every admissible pair.
    pub fn is_reversible(&self) -> bool {
        match &self.kind {
            MetricKind::Riemannian(_) | MetricKind::Minkowski(_) => true,
            MetricKind::Randers(nav) => nav.wind.is_zero(),
            MetricKind::FunkBall => false,
            MetricKind::Reverse(inner) => inner.is_reversible(),
        }
    }

    pub fn is_riemannian(&self) -> bool {
        match &self.kind {
            MetricKind::Riemannian(_) => true,
            MetricKind::Randers(nav) => nav.wind.is_zero(),
            MetricKind::Reverse(inner) => inner.is_riemannian(),
            _ => false,
        }
    }

    /// Geodesics may be followed to negative parameters on this chart.
    pub fn supports_backward(&self) -> bool {
        match &self.kind {
            MetricKind::Riemannian(_) | MetricKind::Minkowski(_) => true,
            MetricKind::Reverse(inner) => inner.supports_backward(),
            _ => false,
        }
    }

    /// The underlying Riemannian metric, when the model has one.
    pub fn underlying_riemannian(&self) -> Option<&RiemannianMetric> {
        match &self.kind {
            MetricKind::Riemannian(h) => Some(h),
            MetricKind::Randers(nav) => Some(&nav.h),
            MetricKind::Reverse(inner) => inner.underlying_riemannian(),
            _ => None,
        }
    }

    /// Metric value without domain checks; generic over the scalar type.
    pub fn eval_generic<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        match &self.kind {
            MetricKind::Riemannian(h) => h.inner(x, y, y).sqrt(),
            MetricKind::Minkowski(norm) => norm.eval(y),
            MetricKind::Randers(nav) => nav.eval(x, y),
            MetricKind::FunkBall => {
                let lam = -dot(x, x) + 1.0;
                let xy = dot(x, y);
                let yy = dot(y, y);
                ((lam.clone() * yy + xy.clone().square()).sqrt() + xy) / lam
            }
            MetricKind::Reverse(inner) => {
                let neg: Vec<T> = y.iter().map(|v| -v.clone()).collect();
                inner.eval_generic(x, &neg)
            }
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.domain.contains(x) || !self.pointwise_admissible(x) {
            return Err(GeometryError::OutsideChart(x.to_vec()));
        }
        Ok(())
    }

    fn pointwise_admissible(&self, x: &[f64]) -> bool {
        match &self.kind {
            MetricKind::Randers(nav) => nav.wind_norm(x) < 1.0,
            MetricKind::FunkBall => x.iter().map(|v| v * v).sum::<f64>() < 1.0,
            MetricKind::Reverse(inner) => inner.pointwise_admissible(x),
            _ => true,
        }
    }

    pub fn check_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        self.check_point(x)?;
        if y.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if y.iter().all(|v| *v == 0.0) || !y.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::ZeroVector);
        }
        Ok(())
    }

    /// F(x, y).
    pub fn eval_f(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_pair(x, y)?;
        Ok(self.eval_generic(x, y))
    }

    /// F² as a jet in the direction variables only (variables `0..n`).
    pub(crate) fn f2_direction_jet(&self, x: &[f64], y: &[f64], degree: usize) -> Jet {
        let n = self.dim;
        let space = JetSpace::split(0, n, degree, 0);
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&space, v)).collect();
        let ys: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, y[i])).collect();
        self.eval_generic(&xs, &ys).square()
    }

    /// F² as a jet in position (variables `0..n`) and direction (`n..2n`).
    pub(crate) fn f2_full_jet(&self, x: &[f64], y: &[f64], degree: usize, x_cap: usize) -> Jet {
        let n = self.dim;
        let space = JetSpace::split(n, n, degree, x_cap);
        let xs: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, x[i])).collect();
        let ys: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, n + i, y[i])).collect();
        self.eval_generic(&xs, &ys).square()
    }

    /// Random admissible point drawn from the shrunk chart domain.
    pub fn random_point<R: Rng + ?Sized>(&self, fraction: f64, rng: &mut R) -> Vec<f64> {
        loop {
            let x = self.domain.sample(self.dim, fraction, rng);
            if self.check_point(&x).is_ok() {
                return x;
            }
        }
    }

    /// Random direction rescaled to F(x, y) = 1.
    pub fn random_unit<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        loop {
            let y: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 0.1 {
                continue;
            }
            let f = self.eval_generic(x, &y);
            return y.iter().map(|v| v / f).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randers::WindField;

    #[test]
    fn euclidean_norm() {
        let m = MetricModel::euclidean(2);
        assert!((m.eval_f(&[0.3, -1.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_norm_value() {
        let m = MetricModel::quartic(2, 0.0);
        let f = m.eval_f(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((f - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_and_outside_chart_are_errors() {
        let m = MetricModel::funk_ball(2);
        assert_eq!(
            m.eval_f(&[0.1, 0.1], &[0.0, 0.0]),
            Err(GeometryError::ZeroVector)
        );
        assert!(matches!(
            m.eval_f(&[1.2, 0.0], &[1.0, 0.0]),
            Err(GeometryError::OutsideChart(_))
        ));
    }

    #[test]
    fn shifted_ball_values() {
        let nav = NavigationData::new(
            RiemannianMetric::Euclidean,
            WindField::Constant(vec![-0.5, 0.0]),
            ChartDomain::Whole,
        );
        let m = nav.build().unwrap();
        assert!((m.eval_f(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((m.eval_f(&[0.0, 0.0], &[-1.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn stereographic_christoffel_matches_conformal_formula() {
        // h = e^{2φ} δ with φ = ln 2 - ln(1 + |x|²):
        // Γ^k_ij = δ_ik ∂_jφ + δ_jk ∂_iφ - δ_ij ∂_kφ
        let x = [0.3, -0.7, 0.2];
        let gamma = RiemannianMetric::StereographicSphere.christoffel(&x);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let dphi: Vec<f64> = x.iter().map(|v| -2.0 * v / (1.0 + r2)).collect();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expect = d(i, k) * dphi[j] + d(j, k) * dphi[i] - d(i, j) * dphi[k];
                    assert!((gamma[k][i][j] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn reverse_flips_direction() {
        let m = MetricModel::funk_ball(2);
        let r = MetricModel::new(
            2,
            MetricKind::Reverse(Box::new(m.clone())),
            m.domain().clone(),
        );
        let x = [0.2, 0.1];
        let y = [0.4, -0.3];
        let neg = [-0.4, 0.3];
        assert_eq!(r.eval_f(&x, &y).unwrap(), m.eval_f(&x, &neg).unwrap());
    }
}
