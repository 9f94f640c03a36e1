//! Legendre duality, reverse metrics, and the gradient / Hessian / Laplacian
//! of scalar fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::field::{GradientField, ScalarField, VectorField};
use crate::metric::{MetricKind, MetricModel};
use crate::volume::VolumeForm;

const NEWTON_CAP: usize = 50;

impl MetricModel {
    /// ←F(x, y) = F(x, −y). Reversing twice returns the original model.
    pub fn reversed(&self) -> MetricModel {
        match self.kind() {
            MetricKind::Reverse(inner) => (**inner).clone(),
            _ => MetricModel::new(
                self.dim(),
                MetricKind::Reverse(Box::new(self.clone())),
                self.domain().clone(),
            ),
        }
    }

    fn newton_start(&self, x: &[f64], xi: &DVector<f64>) -> DVector<f64> {
        let raised = match self.underlying_riemannian() {
            Some(h) => h
                .matrix_at(x)
                .try_inverse()
                .map(|hinv| hinv * xi)
                .unwrap_or_else(|| xi.clone()),
            None => xi.clone(),
        };
        let f = self.eval_generic(x, raised.as_slice());
        let pairing = xi.dot(&raised);
        if pairing > 0.0 && f > 0.0 {
            // ξ(ty) = F(ty)² fixes the scale
            raised * (pairing / (f * f))
        } else {
            raised
        }
    }

    /// y with ℒ(y) = ξ, by damped Newton iteration with Jacobian g(y).
    pub fn legendre_inverse(&self, x: &[f64], xi: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let target = DVector::from_column_slice(xi);
        let scale = target.norm();
        if scale == 0.0 {
            return Ok(DVector::zeros(self.dim()));
        }
        let mut y = self.newton_start(x, &target);
        let mut r = self.legendre(x, y.as_slice())? - &target;
        let mut rnorm = r.norm();
        for _ in 0..NEWTON_CAP {
            if rnorm <= 1e-15 * scale {
                return Ok(y);
            }
            let g = self.fundamental_tensor_unchecked(x, y.as_slice());
            let step = g
                .lu()
                .solve(&r)
                .ok_or(GeometryError::NewtonDivergence(rnorm / scale))?;
            let mut t = 1.0;
            let mut improved = false;
            while t > 1e-6 {
                let trial = &y - &step * t;
                if trial.iter().any(|v| *v != 0.0) {
                    let tr = self.legendre(x, trial.as_slice())? - &target;
                    if tr.norm() < rnorm {
                        y = trial;
                        r = tr;
                        rnorm = r.norm();
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if rnorm <= 1e-12 * scale {
            Ok(y)
        } else {
            Err(GeometryError::NewtonDivergence(rnorm / scale))
        }
    }

    /// F*(ξ) = F(ℒ⁻¹ξ).
    pub fn dual_norm(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let y = self.legendre_inverse(x, xi)?;
        if y.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        self.eval_f(x, y.as_slice())
    }

    /// The unit vector η₋ with ℒ(η₋) a positive multiple of −ℒ(η).
    pub fn eta_minus(&self, x: &[f64], eta: &[f64]) -> Result<DVector<f64>> {
        let xi = self.legendre(x, eta)?;
        let z = self.legendre_inverse(x, (-xi).as_slice())?;
        let f = self.eval_f(x, z.as_slice())?;
        Ok(z / f)
    }

    /// ∇f = ℒ⁻¹(df).
    pub fn gradient(&self, f: &ScalarField, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let df = f.differential(x);
        if df.amax() <= 1e-14 {
            return Err(GeometryError::VanishingGradient);
        }
        self.legendre_inverse(x, df.as_slice())
    }

    /// ∇²f as the endomorphism v ↦ D^{∇f}_v ∇f:
    /// M^i_j = ∂_j(∇f)^i + N^i_j(x, ∇f).
    pub fn hessian(&self, f: &ScalarField, x: &[f64]) -> Result<DMatrix<f64>> {
        let field = GradientField::new(self.clone(), f.clone());
        let grad = field.value(x)?;
        let jac = field.jacobian(x)?;
        let (_, nn) = self.spray_connection(x, grad.as_slice())?;
        Ok(jac + nn)
    }

    /// Δf = tr ∇²f − S(∇f).
    pub fn laplacian(&self, vol: &VolumeForm, f: &ScalarField, x: &[f64]) -> Result<f64> {
        let grad = self.gradient(f, x)?;
        let m = self.hessian(f, x)?;
        Ok(m.trace() - self.s_curvature(vol, x, grad.as_slice())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{ChartDomain, RiemannianMetric};
    use crate::randers::{NavigationData, WindField};

    fn shifted() -> MetricModel {
        NavigationData::new(
            RiemannianMetric::Euclidean,
            WindField::Constant(vec![-0.5, 0.0]),
            ChartDomain::Whole,
        )
        .build()
        .unwrap()
    }

    #[test]
    fn euclidean_is_self_dual() {
        let m = MetricModel::euclidean(2);
        let xi = m.legendre(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((xi - DVector::from_vec(vec![3.0, 4.0])).amax() < 1e-15);
        assert!((m.dual_norm(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_ball_inverse() {
        let m = shifted();
        let y = m.legendre_inverse(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((y[0] - 0.25).abs() < 1e-14 && y[1].abs() < 1e-14);
        let d = m.dual_norm(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-14);
    }

    #[test]
    fn double_reversal() {
        let m = shifted();
        assert_eq!(m.reversed().reversed(), m);
    }

    #[test]
    fn euclidean_laplacians() {
        let m = MetricModel::euclidean(3);
        let vol = VolumeForm::bh();
        let l = m
            .laplacian(&vol, &ScalarField::HalfSquaredNorm, &[0.3, 0.1, -0.2])
            .unwrap();
        assert!((l - 3.0).abs() < 1e-10);
        let x = [0.0, 1.2, 1.6];
        let l = m.laplacian(&vol, &ScalarField::EuclideanNorm, &x).unwrap();
        assert!((l - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vanishing_gradient() {
        let m = MetricModel::euclidean(2);
        assert_eq!(
            m.gradient(&ScalarField::HalfSquaredNorm, &[0.0, 0.0]),
            Err(GeometryError::VanishingGradient)
        );
    }
}
