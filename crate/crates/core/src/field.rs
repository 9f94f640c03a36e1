//! Scalar and vector fields on a chart.
//!
//! Scalar fields are closed-form and generic over [`Scalar`], so their
//! differentials and Hessians are exact. Vector fields report a value and a
//! Jacobian ∂_j X^i; fields derived through the Legendre map compute their
//! Jacobians by implicit differentiation of ℒ(x, y(x)) = ξ(x).

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::jet::{dot, Jet, JetSpace, Scalar};
use crate::metric::{MetricModel, MinkowskiNorm};

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField {
    /// f = x^i.
    Coordinate(usize),
    /// f = ½|x|².
    HalfSquaredNorm,
    /// f = |x|.
    EuclideanNorm,
    /// f = |x − c|.
    DistanceFrom(Vec<f64>),
    /// f = √((x¹)² + (x²)²), whose level sets are round cylinders.
    Cylinder,
    /// f = x¹ + (x²)², neither transnormal nor isoparametric.
    Nonexample,
    /// f = N(x − c) for a Minkowski norm N: its level sets are N-spheres.
    NormDistance { norm: MinkowskiNorm, center: Vec<f64> },
    /// f = Σ a_i x^i.
    Linear(Vec<f64>),
    Negated(Box<ScalarField>),
}

impl ScalarField {
    pub fn negated(&self) -> ScalarField {
        match self {
            ScalarField::Negated(inner) => (**inner).clone(),
            other => ScalarField::Negated(Box::new(other.clone())),
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            ScalarField::Coordinate(i) => x[*i].clone(),
            ScalarField::HalfSquaredNorm => dot(x, x) * 0.5,
            ScalarField::EuclideanNorm => dot(x, x).sqrt(),
            ScalarField::DistanceFrom(c) => {
                let d: Vec<T> = x.iter().zip(c).map(|(a, b)| a.clone() - *b).collect();
                dot(&d, &d).sqrt()
            }
            ScalarField::Cylinder => (x[0].clone().square() + x[1].clone().square()).sqrt(),
            ScalarField::Nonexample => x[0].clone() + x[1].clone().square(),
            ScalarField::NormDistance { norm, center } => {
                let d: Vec<T> = x.iter().zip(center).map(|(a, b)| a.clone() - *b).collect();
                norm.eval(&d)
            }
            ScalarField::Linear(a) => {
                let mut acc = x[0].clone() * a[0];
                for (xi, ai) in x.iter().zip(a).skip(1) {
                    acc = acc + xi.clone() * *ai;
                }
                acc
            }
            ScalarField::Negated(inner) => -inner.eval(x),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn jet(&self, x: &[f64], degree: usize) -> Jet {
        let space = JetSpace::total(x.len(), degree);
        let xs: Vec<Jet> = (0..x.len()).map(|i| Jet::variable(&space, i, x[i])).collect();
        self.eval(&xs)
    }

    /// df(x) as a covector.
    pub fn differential(&self, x: &[f64]) -> DVector<f64> {
        let j = self.jet(x, 1);
        DVector::from_fn(x.len(), |i, _| j.derivative_wrt(&[i]))
    }

    /// Coordinate Hessian ∂_i∂_j f.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let j = self.jet(x, 2);
        DMatrix::from_fn(x.len(), x.len(), |a, b| j.derivative_wrt(&[a, b]))
    }
}

/// A differentiable vector field X^i(x).
pub trait VectorField: Send + Sync {
    fn value(&self, x: &[f64]) -> Result<DVector<f64>>;

    /// ∂_j X^i. The default is a central difference with step 1e-5.
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len();
        let h = 1e-5;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let d = (self.value(&xp)? - self.value(&xm)?) / (2.0 * h);
            jac.set_column(j, &d);
        }
        Ok(jac)
    }
}

/// X(x) = c.
pub struct ConstantField(pub DVector<f64>);

impl VectorField for ConstantField {
    fn value(&self, _x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.0.clone())
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(x.len(), x.len()))
    }
}

/// X(x) = A x + b.
pub struct AffineField {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl VectorField for AffineField {
    fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(&self.a * DVector::from_column_slice(x) + &self.b)
    }

    fn jacobian(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
}

/// First derivatives of the Legendre map and of F at (x, y):
/// g_ij = ∂ℒ_i/∂y^j, lx_ik = ∂ℒ_i/∂x^k, fx_k = ∂F/∂x^k.
pub(crate) struct LegendreDerivatives {
    pub g: DMatrix<f64>,
    pub lx: DMatrix<f64>,
    pub fx: DVector<f64>,
    pub f: f64,
}

pub(crate) fn legendre_derivatives(model: &MetricModel, x: &[f64], y: &[f64]) -> LegendreDerivatives {
    let n = model.dim();
    let e = model.f2_full_jet(x, y, 2, 1);
    let f = e.value().sqrt();
    LegendreDerivatives {
        g: DMatrix::from_fn(n, n, |i, j| 0.5 * e.derivative_wrt(&[n + i, n + j])),
        lx: DMatrix::from_fn(n, n, |i, k| 0.5 * e.derivative_wrt(&[n + i, k])),
        fx: DVector::from_fn(n, |k, _| e.derivative_wrt(&[k]) / (2.0 * f)),
        f,
    }
}

/// Jacobian of y(x)/F(x, y(x)) given y and dy = ∂y/∂x.
pub(crate) fn normalized_jacobian(
    d: &LegendreDerivatives,
    y: &DVector<f64>,
    dy: &DMatrix<f64>,
) -> DMatrix<f64> {
    // dF = F_x + F_y dy with F_y = ℒ(y)/F = g y / F
    let fy = &d.g * y / d.f;
    let df = d.fx.transpose() + fy.transpose() * dy;
    dy / d.f - y * df / (d.f * d.f)
}

fn solve(g: &DMatrix<f64>, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .lu()
        .solve(&rhs)
        .ok_or(GeometryError::SingularTensor)
}

/// ∇f = ℒ⁻¹(df).
pub struct GradientField {
    pub model: MetricModel,
    pub f: ScalarField,
}

impl GradientField {
    pub fn new(model: MetricModel, f: ScalarField) -> Self {
        GradientField { model, f }
    }

    fn value_and_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let y = self.model.gradient(&self.f, x)?;
        let d = legendre_derivatives(&self.model, x, y.as_slice());
        // ℒ(x, y(x)) = df(x)  ⇒  lx + g dy = Hess f
        let dy = solve(&d.g, self.f.hessian(x) - &d.lx)?;
        Ok((y, dy))
    }
}

impl VectorField for GradientField {
    fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.model.gradient(&self.f, x)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.value_and_jacobian(x)?.1)
    }
}

/// n = s∇(sf)/F(∇(sf)) for s = ±1: the unit normal to the level sets of f
/// pointing towards increasing (s = 1) or decreasing (s = −1) f.
pub struct UnitNormalField {
    grad: GradientField,
}

impl UnitNormalField {
    pub fn new(model: MetricModel, f: ScalarField, sign: f64) -> Self {
        let f = if sign < 0.0 { f.negated() } else { f };
        UnitNormalField {
            grad: GradientField::new(model, f),
        }
    }

    pub fn model(&self) -> &MetricModel {
        &self.grad.model
    }

    /// The function whose gradient direction this field follows.
    pub fn potential(&self) -> &ScalarField {
        &self.grad.f
    }
}

impl VectorField for UnitNormalField {
    fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        let y = self.grad.value(x)?;
        let f = self.grad.model.eval_f(x, y.as_slice())?;
        Ok(y / f)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (y, dy) = self.grad.value_and_jacobian(x)?;
        let d = legendre_derivatives(&self.grad.model, x, y.as_slice());
        Ok(normalized_jacobian(&d, &y, &dy))
    }
}

/// η₋ = z/F(z) with ℒ(z) = −ℒ(η), evaluated pointwise from a unit field η.
pub struct EtaMinusField<'a> {
    pub model: &'a MetricModel,
    pub eta: &'a dyn VectorField,
}

impl VectorField for EtaMinusField<'_> {
    fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        let eta = self.eta.value(x)?;
        self.model.eta_minus(x, eta.as_slice())
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let eta = self.eta.value(x)?;
        let deta = self.eta.jacobian(x)?;
        let de = legendre_derivatives(self.model, x, eta.as_slice());
        let dxi = &de.lx + &de.g * deta;
        let xi = self.model.legendre(x, eta.as_slice())?;
        let z = self.model.legendre_inverse(x, (-xi).as_slice())?;
        let dz_ = legendre_derivatives(self.model, x, z.as_slice());
        // ℒ(x, z(x)) = −ξ(x)  ⇒  lx(z) + g(z) dz = −dξ
        let dz = solve(&dz_.g, -dxi - &dz_.lx)?;
        Ok(normalized_jacobian(&dz_, &z, &dz))
    }
}
