//! Randers metrics given by navigation data (h, W).
//!
//! The metric is F = (√(λh(y,y) + W₀²) − W₀)/λ with W₀ = h(W, y) and
//! λ = 1 − ‖W‖²_h. Its unit ball at x is the h-unit ball translated by W(x).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};
use crate::field::{ScalarField, UnitNormalField, VectorField};
use crate::hypersurface::reversible_torsion;
use crate::jet::Scalar;
use crate::metric::{ChartDomain, MetricKind, MetricModel, RiemannianMetric};
use crate::volume::VolumeForm;

/// Wind fields with closed-form first derivatives.
#[derive(Clone, Debug, PartialEq)]
pub enum WindField {
    Zero,
    Constant(Vec<f64>),
    /// ε(−x², x¹, 0, …): rotation in the first coordinate plane.
    Rotation { eps: f64 },
    /// κx.
    Dilation { kappa: f64 },
    /// (a·x¹x², 0, …).
    Shear { a: f64 },
}

impl WindField {
    pub fn is_zero(&self) -> bool {
        match self {
            WindField::Zero => true,
            WindField::Constant(w) => w.iter().all(|v| *v == 0.0),
            WindField::Rotation { eps } => *eps == 0.0,
            WindField::Dilation { kappa } => *kappa == 0.0,
            WindField::Shear { a } => *a == 0.0,
        }
    }

    pub fn value<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let zero = x[0].lift(0.0);
        let mut w = vec![zero.clone(); x.len()];
        match self {
            WindField::Zero => {}
            WindField::Constant(c) => {
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi = zero.lift(*ci);
                }
            }
            WindField::Rotation { eps } => {
                w[0] = -x[1].clone() * *eps;
                w[1] = x[0].clone() * *eps;
            }
            WindField::Dilation { kappa } => {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi = xi.clone() * *kappa;
                }
            }
            WindField::Shear { a } => {
                w[0] = x[0].clone() * x[1].clone() * *a;
            }
        }
        w
    }

    /// ∂_j W^i.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut d = DMatrix::zeros(n, n);
        match self {
            WindField::Zero | WindField::Constant(_) => {}
            WindField::Rotation { eps } => {
                d[(0, 1)] = -eps;
                d[(1, 0)] = *eps;
            }
            WindField::Dilation { kappa } => {
                d.fill_diagonal(*kappa);
            }
            WindField::Shear { a } => {
                d[(0, 0)] = a * x[1];
                d[(0, 1)] = a * x[0];
            }
        }
        d
    }
}

/// Navigation data (h, W) on a chart domain where ‖W‖_h < 1.
#[derive(Clone, Debug, PartialEq)]
pub struct NavigationData {
    pub h: RiemannianMetric,
    pub wind: WindField,
    pub domain: ChartDomain,
}

/// Outcome of the symmetrized-derivative test on W.
#[derive(Clone, Debug, PartialEq)]
pub enum KillingVerdict {
    Killing,
    Homothetic(f64),
    Generic,
}

#[derive(Clone, Debug)]
pub struct KillingClassification {
    pub verdict: KillingVerdict,
    /// sup |½(W_i|j + W_j|i)| over the samples.
    pub killing_defect: f64,
    /// sup |½(W_i|j + W_j|i) − κ h_ij| with the best-fitting κ per sample.
    pub homothety_defect: f64,
}

/// The antisymmetric part of ∇W and its contractions at (x, y).
#[derive(Clone, Debug)]
pub struct STensors {
    /// s_ij
    pub s_lower: DMatrix<f64>,
    /// s_j = W^i s_ij
    pub s_j: DVector<f64>,
    /// s^i = h^ij s_j
    pub s_up: DVector<f64>,
    /// s^i_j = h^ik s_kj
    pub s_mixed: DMatrix<f64>,
    /// s^i_0 = s^i_j y^j
    pub s_0: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct TorsionAudit {
    pub classification: KillingClassification,
    /// sup ‖T_η(X)‖ over the samples.
    pub torsion_sup: f64,
    /// sup ‖T_η(X) − 2c′X‖ with the measured c′.
    pub homothetic_residual: f64,
    /// sup ‖T_η(X) + 2c′X‖, the same relation with the opposite sign.
    pub opposite_sign_residual: f64,
    /// S-curvature constant c′ with S = (n+1)c′F, measured.
    pub c_prime: f64,
    /// Spread of S/((n+1)F) over the samples.
    pub c_prime_spread: f64,
    pub samples: Vec<TorsionSample>,
}

#[derive(Clone, Debug)]
pub struct TorsionSample {
    pub x: Vec<f64>,
    pub torsion_norm: f64,
    pub homothetic_residual: f64,
    pub opposite_sign_residual: f64,
}

impl NavigationData {
    pub fn new(h: RiemannianMetric, wind: WindField, domain: ChartDomain) -> Self {
        NavigationData { h, wind, domain }
    }

    pub fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        let w = self.wind.value(x);
        let hyy = self.h.inner(x, y, y);
        let w0 = self.h.inner(x, &w, y);
        let ww = self.h.inner(x, &w, &w);
        let lam = -ww + 1.0;
        ((lam.clone() * hyy + w0.clone().square()).sqrt() - w0) / lam
    }

    pub fn wind_norm(&self, x: &[f64]) -> f64 {
        let w = self.wind.value(x);
        self.h.inner(x, &w, &w).sqrt()
    }

    /// Builds the Randers model after probing ‖W‖_h < 1 over the domain.
    pub fn build(&self) -> Result<MetricModel> {
        let dim = match &self.domain {
            ChartDomain::Ball { center, .. } => center.len(),
            ChartDomain::Whole => match &self.wind {
                WindField::Constant(c) => c.len(),
                _ => match &self.h {
                    RiemannianMetric::Constant(m) => m.nrows(),
                    _ => 0,
                },
            },
        };
        if dim < 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        self.build_dim(dim)
    }

    pub fn build_dim(&self, dim: usize) -> Result<MetricModel> {
        let worst = self
            .probe_points(dim)
            .iter()
            .map(|p| self.wind_norm(p))
            .fold(0.0, f64::max);
        if worst >= 1.0 {
            return Err(GeometryError::NavigationDomainViolation(worst));
        }
        Ok(MetricModel::new(
            dim,
            MetricKind::Randers(self.clone()),
            self.domain.clone(),
        ))
    }

    fn probe_points(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut probes = Vec::new();
        let (center, radius) = match &self.domain {
            ChartDomain::Ball { center, radius } => (center.clone(), *radius * 0.999),
            ChartDomain::Whole => (vec![0.0; dim], 1e3),
        };
        probes.push(center.clone());
        for i in 0..dim {
            for sign in [-1.0, 1.0] {
                for frac in [0.25, 0.5, 1.0] {
                    let mut p = center.clone();
                    p[i] += sign * radius * frac;
                    probes.push(p);
                }
            }
        }
        for _ in 0..256 {
            probes.push(self.domain.sample(dim, 0.999, &mut rng));
        }
        if let ChartDomain::Whole = self.domain {
            for _ in 0..64 {
                probes.push(ChartDomain::Whole.sample(dim, 3.0, &mut rng));
            }
        }
        probes
    }

    /// F*(ξ) = √(h^ij ξ_i ξ_j) + W^i ξ_i.
    pub fn dual(&self, x: &[f64], xi: &[f64]) -> f64 {
        let hinv = self
            .h
            .matrix_at(x)
            .try_inverse()
            .expect("h is positive definite");
        let xi = DVector::from_column_slice(xi);
        let w = DVector::from_vec(self.wind.value(x));
        (xi.dot(&(&hinv * &xi))).sqrt() + w.dot(&xi)
    }

    /// y = F*(ξ)·∂F*/∂ξ, the closed-form inverse Legendre map.
    pub fn legendre_inverse(&self, x: &[f64], xi: &[f64]) -> DVector<f64> {
        let hinv = self
            .h
            .matrix_at(x)
            .try_inverse()
            .expect("h is positive definite");
        let xi_v = DVector::from_column_slice(xi);
        let raised = &hinv * &xi_v;
        let hstar = xi_v.dot(&raised).sqrt();
        let w = DVector::from_vec(self.wind.value(x));
        let fstar = hstar + w.dot(&xi_v);
        (raised / hstar + w) * fstar
    }

    /// W^i_{|j} = ∂_j W^i + Γ̄^i_jk W^k.
    pub fn covariant_derivative(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let gamma = self.h.christoffel(x);
        let w: Vec<f64> = self.wind.value(x);
        let mut d = self.wind.jacobian(x);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += gamma[i][j][k] * w[k];
                }
                d[(i, j)] += acc;
            }
        }
        d
    }

    /// W_{i|j} = h_ik W^k_{|j}.
    fn lowered_derivative(&self, x: &[f64]) -> DMatrix<f64> {
        self.h.matrix_at(x) * self.covariant_derivative(x)
    }

    pub fn killing_classify(&self, samples: &[Vec<f64>], tol: f64) -> KillingClassification {
        let mut killing_defect: f64 = 0.0;
        let mut homothety_defect: f64 = 0.0;
        let mut kappas = Vec::new();
        for x in samples {
            let d = self.lowered_derivative(x);
            let sym = (&d + d.transpose()) * 0.5;
            killing_defect = killing_defect.max(sym.amax());
            let h = self.h.matrix_at(x);
            let hinv = h.clone().try_inverse().expect("h is positive definite");
            let kappa = (&hinv * &sym).trace() / x.len() as f64;
            homothety_defect = homothety_defect.max((sym - h * kappa).amax());
            kappas.push(kappa);
        }
        let verdict = if killing_defect <= tol {
            KillingVerdict::Killing
        } else {
            let lo = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = kappas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if homothety_defect <= tol && hi - lo <= tol {
                KillingVerdict::Homothetic(kappas.iter().sum::<f64>() / kappas.len() as f64)
            } else {
                KillingVerdict::Generic
            }
        };
        KillingClassification {
            verdict,
            killing_defect,
            homothety_defect,
        }
    }

    pub fn s_tensors(&self, x: &[f64], y: &[f64]) -> STensors {
        let d = self.lowered_derivative(x);
        let s_lower = (&d - d.transpose()) * 0.5;
        let w = DVector::from_vec(self.wind.value(x));
        let s_j = s_lower.transpose() * &w;
        let hinv = self
            .h
            .matrix_at(x)
            .try_inverse()
            .expect("h is positive definite");
        let s_up = &hinv * &s_j;
        let s_mixed = &hinv * &s_lower;
        let s_0 = &s_mixed * DVector::from_column_slice(y);
        STensors {
            s_lower,
            s_j,
            s_up,
            s_mixed,
            s_0,
        }
    }

    /// Geodesic coefficients G^i = Ḡ^i − F s^i_0 − ½F² s^i, valid for Killing W.
    pub fn spray_closed(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        let d = self.lowered_derivative(x);
        let sym = (&d + d.transpose()) * 0.5;
        let scale = 1.0 + d.amax();
        if sym.amax() > 1e-9 * scale {
            return Err(GeometryError::NotKilling(sym.amax()));
        }
        let n = x.len();
        let gamma = self.h.christoffel(x);
        let s = self.s_tensors(x, y);
        let f = self.eval(x, y);
        let mut g = DVector::zeros(n);
        for i in 0..n {
            let mut bar = 0.0;
            for j in 0..n {
                for k in 0..n {
                    bar += gamma[i][j][k] * y[j] * y[k];
                }
            }
            g[i] = 0.5 * bar - f * s.s_0[i] - 0.5 * f * f * s.s_up[i];
        }
        Ok(g)
    }

    /// Busemann–Hausdorff density. The indicatrix is a translate of the h-unit
    /// sphere, so its volume is that of the h-ball and σ = √det h.
    pub fn bh_density(&self, x: &[f64]) -> Result<f64> {
        let norm = self.wind_norm(x);
        if norm >= 1.0 {
            return Err(GeometryError::NavigationDomainViolation(norm));
        }
        Ok(self.h.sqrt_det(x))
    }

    /// Audits the reversible torsion of coordinate-sphere normal fields
    /// `|x| = const` at random sample points.
    pub fn torsion_audit(
        &self,
        model: &MetricModel,
        count: usize,
        seed: u64,
        vol: &VolumeForm,
    ) -> Result<TorsionAudit> {
        let n = model.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        while points.len() < count {
            let x = model.random_point(0.7, &mut rng);
            let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0.05 {
                points.push(x);
            }
        }
        let classification = self.killing_classify(&points, 1e-9);

        let mut ratios = Vec::with_capacity(count);
        for x in &points {
            let y = model.random_unit(x, &mut rng);
            let s = model.s_curvature(vol, x, &y)?;
            ratios.push(s / ((n as f64 + 1.0) * model.eval_f(x, &y)?));
        }
        let c_prime = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let field = UnitNormalField::new(model.clone(), ScalarField::EuclideanNorm, 1.0);
        let mut samples = Vec::with_capacity(count);
        let mut torsion_sup: f64 = 0.0;
        let mut homothetic_sup: f64 = 0.0;
        let mut opposite_sup: f64 = 0.0;
        for x in points {
            let eta = field.value(&x)?;
            let xi = model.legendre(&x, eta.as_slice())?;
            let raw = DVector::from_fn(n, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
            let mut tangent = &raw - &eta * xi.dot(&raw);
            tangent /= tangent.norm();
            let t = reversible_torsion(model, &field, &x, tangent.as_slice())?;
            let torsion_norm = t.norm();
            let homothetic_residual = (&t - &tangent * (2.0 * c_prime)).norm();
            let opposite_sign_residual = (&t + &tangent * (2.0 * c_prime)).norm();
            torsion_sup = torsion_sup.max(torsion_norm);
            homothetic_sup = homothetic_sup.max(homothetic_residual);
            opposite_sup = opposite_sup.max(opposite_sign_residual);
            samples.push(TorsionSample {
                x,
                torsion_norm,
                homothetic_residual,
                opposite_sign_residual,
            });
        }
        Ok(TorsionAudit {
            classification,
            torsion_sup,
            homothetic_residual: homothetic_sup,
            opposite_sign_residual: opposite_sup,
            c_prime,
            c_prime_spread: hi - lo,
            samples,
        })
    }
}
