//! Submanifolds, unit normals, shape operators and reversible torsion.
//!
//! A shape operator is assembled from tangent vectors e_a and covariant
//! normal derivatives D^n_{e_a} n as B_ab = −g_n(D_a n, e_b), then whitened
//! by the Gram matrix G_ab = g_n(e_a, e_b). The same routine serves level
//! sets (exact ambient normal fields), parametrized families (finite
//! differences in the parameters), tubes and focal submanifolds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GeometryError, Result};
use crate::field::{EtaMinusField, ScalarField, UnitNormalField, VectorField};
use crate::metric::MetricModel;

/// The two unit normals of an oriented hypersurface point.
#[derive(Clone, Debug)]
pub struct NormalPair {
    pub at: DVector<f64>,
    pub n_plus: DVector<f64>,
    pub n_minus: DVector<f64>,
}

/// Principal curvatures clustered into distinct values, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSpectrum {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub cluster_tol: f64,
}

impl CurvatureSpectrum {
    /// Clusters eigenvalues: consecutive sorted values closer than `tol` merge,
    /// and the cluster reports its mean.
    pub fn from_eigenvalues(eigs: &[f64], tol: f64) -> Self {
        let mut sorted = eigs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut multiplicities = Vec::new();
        let mut group: Vec<f64> = Vec::new();
        for v in sorted {
            if let Some(last) = group.last() {
                if v - last > tol {
                    values.push(group.iter().sum::<f64>() / group.len() as f64);
                    multiplicities.push(group.len());
                    group.clear();
                }
            }
            group.push(v);
        }
        if !group.is_empty() {
            values.push(group.iter().sum::<f64>() / group.len() as f64);
            multiplicities.push(group.len());
        }
        CurvatureSpectrum {
            values,
            multiplicities,
            cluster_tol: tol,
        }
    }

    pub fn new(values: Vec<f64>, multiplicities: Vec<usize>) -> Self {
        CurvatureSpectrum {
            values,
            multiplicities,
            cluster_tol: 0.0,
        }
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    pub fn dimension(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn mean_curvature(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .map(|(v, m)| v * *m as f64)
            .sum()
    }

    /// Eigenvalues with repetition, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(v, m)| std::iter::repeat(*v).take(*m))
            .collect()
    }
}

/// A shape operator in a g_n-orthonormal tangent basis.
#[derive(Clone, Debug)]
pub struct ShapeOperator {
    pub normal: DVector<f64>,
    /// g_n-orthonormal tangent basis (ambient components).
    pub basis: Vec<DVector<f64>>,
    /// Symmetric part of the matrix in `basis`.
    pub matrix: DMatrix<f64>,
    /// max |B̃ − B̃ᵀ| before symmetrization.
    pub asymmetry: f64,
}

impl ShapeOperator {
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.matrix.nrows() == 0 {
            return Vec::new();
        }
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn spectrum(&self, tol: f64) -> Result<CurvatureSpectrum> {
        let eigs = self.eigenvalues();
        if eigs.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::EigenFailure);
        }
        Ok(CurvatureSpectrum::from_eigenvalues(&eigs, tol))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Components of a tangent vector in the orthonormal basis, given the
    /// metric g_n.
    fn coordinates(&self, g: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|e| (g * e).dot(v)))
    }

    /// A_n X as an ambient vector.
    pub fn apply(&self, g: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        let c = &self.matrix * self.coordinates(g, v);
        self.basis
            .iter()
            .zip(c.iter())
            .fold(DVector::zeros(v.len()), |acc, (e, ci)| acc + e * *ci)
    }
}

/// B_ab = −g_n(D_a n, e_b), whitened by G_ab = g_n(e_a, e_b).
pub fn shape_operator_from_derivatives(
    model: &MetricModel,
    x: &[f64],
    n: &DVector<f64>,
    tangents: &[DVector<f64>],
    normal_derivatives: &[DVector<f64>],
) -> Result<ShapeOperator> {
    let g = model.fundamental_tensor(x, n.as_slice())?;
    let m = tangents.len();
    if m == 0 {
        return Ok(ShapeOperator {
            normal: n.clone(),
            basis: Vec::new(),
            matrix: DMatrix::zeros(0, 0),
            asymmetry: 0.0,
        });
    }
    let gram = DMatrix::from_fn(m, m, |a, b| (&g * &tangents[a]).dot(&tangents[b]));
    let b = DMatrix::from_fn(m, m, |a, c| -(&g * &normal_derivatives[a]).dot(&tangents[c]));
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::IrregularPoint("tangent vectors are dependent".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::IrregularPoint("tangent vectors are dependent".into()))?;
    let bt = &linv * b * linv.transpose();
    let asymmetry = (&bt - bt.transpose()).amax();
    let matrix = (&bt + bt.transpose()) * 0.5;
    // ẽ_a = Σ_b (L⁻¹)_ab e_b
    let basis = (0..m)
        .map(|a| {
            (0..m).fold(DVector::zeros(x.len()), |acc, c| acc + &tangents[c] * linv[(a, c)])
        })
        .collect();
    Ok(ShapeOperator {
        normal: n.clone(),
        basis,
        matrix,
        asymmetry,
    })
}

/// Basis of the kernel of a nonzero covector ν: e_k − (ν_k/ν_p) e_p for
/// k ≠ p, with p the index of the largest |ν_p|.
pub fn covector_kernel(nu: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = nu.len();
    let p = nu.iamax();
    (0..n)
        .filter(|&k| k != p)
        .map(|k| {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            e[p] = -nu[k] / nu[p];
            e
        })
        .collect()
}

/// Regular level set f⁻¹(t).
#[derive(Clone, Debug)]
pub struct LevelSetSurface {
    pub model: MetricModel,
    pub f: ScalarField,
    pub level: f64,
}

impl LevelSetSurface {
    pub fn new(model: MetricModel, f: ScalarField, level: f64) -> Self {
        LevelSetSurface { model, f, level }
    }

    /// Moves x onto the level set by Newton steps along the Euclidean gradient.
    pub fn project(&self, x: &[f64]) -> Result<DVector<f64>> {
        let mut p = DVector::from_column_slice(x);
        for _ in 0..60 {
            let r = self.f.value(p.as_slice()) - self.level;
            if r.abs() <= 1e-14 * (1.0 + self.level.abs()) {
                return Ok(p);
            }
            let d = self.f.differential(p.as_slice());
            let dd = d.norm_squared();
            if dd == 0.0 {
                return Err(GeometryError::IrregularPoint("df = 0 during projection".into()));
            }
            p -= d * (r / dd);
        }
        let r = self.f.value(p.as_slice()) - self.level;
        if r.abs() <= 1e-10 * (1.0 + self.level.abs()) {
            Ok(p)
        } else {
            Err(GeometryError::IrregularPoint(format!(
                "projection onto level {} did not converge (residual {r:e})",
                self.level
            )))
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        self.model.check_point(x)?;
        let r = (self.f.value(x) - self.level).abs();
        if r > 1e-10 * (1.0 + self.level.abs()) {
            return Err(GeometryError::IrregularPoint(format!(
                "point is off the level set by {r:e}"
            )));
        }
        if self.f.differential(x).amax() <= 1e-14 {
            return Err(GeometryError::IrregularPoint("df = 0".into()));
        }
        Ok(())
    }

    /// Unit normal field: sign +1 follows increasing f, −1 decreasing f.
    pub fn normal_field(&self, sign: f64) -> UnitNormalField {
        UnitNormalField::new(self.model.clone(), self.f.clone(), sign)
    }

    pub fn unit_normal(&self, x: &[f64]) -> Result<NormalPair> {
        self.check_point(x)?;
        let n_plus = self.normal_field(1.0).value(x)?;
        let n_minus = self.model.eta_minus(x, n_plus.as_slice())?;
        Ok(NormalPair {
            at: DVector::from_column_slice(x),
            n_plus,
            n_minus,
        })
    }

    /// Which orientation `n` is: +1, −1, or an error when it is neither.
    pub fn orientation(&self, x: &[f64], n: &DVector<f64>) -> Result<f64> {
        let pair = self.unit_normal(x)?;
        let dp = (&pair.n_plus - n).amax();
        let dm = (&pair.n_minus - n).amax();
        let tol = 1e-8 * (1.0 + n.amax());
        if dp <= tol {
            Ok(1.0)
        } else if dm <= tol {
            Ok(-1.0)
        } else {
            Err(GeometryError::NotANormal(dp.min(dm)))
        }
    }

    pub fn tangent_basis(&self, x: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.check_point(x)?;
        Ok(covector_kernel(&self.f.differential(x)))
    }

    /// A_n X = −(D^n_X n)^⊤ with the exact derivative of the normal field.
    pub fn shape_operator(&self, x: &[f64], n: &DVector<f64>) -> Result<ShapeOperator> {
        let sign = self.orientation(x, n)?;
        let field = self.normal_field(sign);
        let tangents = self.tangent_basis(x)?;
        let derivs = tangents
            .iter()
            .map(|e| {
                self.model
                    .covariant_derivative(x, &field, e.as_slice(), n.as_slice())
            })
            .collect::<Result<Vec<_>>>()?;
        shape_operator_from_derivatives(&self.model, x, n, &tangents, &derivs)
    }

    pub fn principal_curvatures(
        &self,
        x: &[f64],
        n: &DVector<f64>,
        cluster_tol: f64,
    ) -> Result<CurvatureSpectrum> {
        self.shape_operator(x, n)?.spectrum(cluster_tol)
    }

    pub fn anisotropic_mean_curvature(&self, x: &[f64], n: &DVector<f64>) -> Result<f64> {
        Ok(self.shape_operator(x, n)?.trace())
    }

    /// ĥ(X, Y) = g_n(A_n X, Y).
    pub fn second_fundamental_form(
        &self,
        x: &[f64],
        n: &DVector<f64>,
        a: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<f64> {
        let nu = self.model.legendre(x, n.as_slice())?;
        for v in [a, b] {
            let r = nu.dot(v).abs();
            if r > 1e-9 * (1.0 + v.norm()) {
                return Err(GeometryError::NotTangent(r));
            }
        }
        let op = self.shape_operator(x, n)?;
        let g = self.model.fundamental_tensor(x, n.as_slice())?;
        Ok((&g * op.apply(&g, a)).dot(b))
    }
}

/// T_η(X) = D^η_X η + D^{η₋}_X η₋.
pub fn reversible_torsion(
    model: &MetricModel,
    eta: &dyn VectorField,
    x: &[f64],
    v: &[f64],
) -> Result<DVector<f64>> {
    let e = eta.value(x)?;
    let xi = model.legendre(x, e.as_slice())?;
    let pairing = xi.dot(&DVector::from_column_slice(v));
    let scale = 1.0 + v.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if pairing.abs() > 1e-9 * scale {
        return Err(GeometryError::NotOrthogonal(pairing.abs()));
    }
    let minus = EtaMinusField { model, eta };
    let em = minus.value(x)?;
    let a = model.covariant_derivative(x, eta, v, e.as_slice())?;
    let b = model.covariant_derivative(x, &minus, v, em.as_slice())?;
    Ok(a + b)
}

/// A map from a parameter box into the chart.
pub trait Patch: Send + Sync {
    fn param_dim(&self) -> usize;
    fn point(&self, p: &[f64]) -> DVector<f64>;

    /// ∂ψ/∂p_a as columns; central differences by default.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let h = 1e-5;
        let m = self.param_dim();
        let base = self.point(p);
        let mut j = DMatrix::zeros(base.len(), m);
        for a in 0..m {
            let mut pp = p.to_vec();
            let mut pm = p.to_vec();
            pp[a] += h;
            pm[a] -= h;
            j.set_column(a, &((self.point(&pp) - self.point(&pm)) / (2.0 * h)));
        }
        j
    }
}

/// ψ(p) = origin + Σ p_a d_a.
#[derive(Clone, Debug)]
pub struct AffinePatch {
    pub origin: DVector<f64>,
    pub directions: Vec<DVector<f64>>,
}

impl Patch for AffinePatch {
    fn param_dim(&self) -> usize {
        self.directions.len()
    }

    fn point(&self, p: &[f64]) -> DVector<f64> {
        self.directions
            .iter()
            .zip(p)
            .fold(self.origin.clone(), |acc, (d, t)| acc + d * *t)
    }

    fn jacobian(&self, _p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_columns(&self.directions)
    }
}

/// Circle of radius r in the (x¹, x²)-plane through `center`.
#[derive(Clone, Debug)]
pub struct CirclePatch {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl Patch for CirclePatch {
    fn param_dim(&self) -> usize {
        1
    }

    fn point(&self, p: &[f64]) -> DVector<f64> {
        let mut x = self.center.clone();
        x[0] += self.radius * p[0].cos();
        x[1] += self.radius * p[0].sin();
        x
    }
}

/// Points with unit normals depending smoothly on parameters p ∈ ℝ^k.
pub trait NormalFamily: Send + Sync {
    fn model(&self) -> &MetricModel;
    fn param_dim(&self) -> usize;
    /// (base point, unit normal) at parameter p.
    fn frame(&self, p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)>;
}

/// Finite-difference shape operator of a normal family at parameter p:
/// e_a = ∂_a x, D_a n = ∂_a n + Γ(n)(e_a, n), with Richardson-extrapolated
/// central differences of steps h and h/2.
pub fn family_shape_operator(family: &dyn NormalFamily, p: &[f64], h: f64) -> Result<ShapeOperator> {
    let model = family.model();
    let (x, n) = family.frame(p)?;
    let k = family.param_dim();
    let central = |a: usize, h: f64| -> Result<(DVector<f64>, DVector<f64>)> {
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[a] += h;
        pm[a] -= h;
        let (xp, np) = family.frame(&pp)?;
        let (xm, nm) = family.frame(&pm)?;
        Ok(((xp - xm) / (2.0 * h), (np - nm) / (2.0 * h)))
    };
    let mut tangents = Vec::with_capacity(k);
    let mut dn = Vec::with_capacity(k);
    for a in 0..k {
        let (e1, d1) = central(a, h)?;
        let (e2, d2) = central(a, 0.5 * h)?;
        tangents.push((e2 * 4.0 - e1) / 3.0);
        dn.push((d2 * 4.0 - d1) / 3.0);
    }
    let spray = model.spray(x.as_slice(), n.as_slice())?;
    let dn: Vec<DVector<f64>> = tangents
        .iter()
        .zip(dn)
        .map(|(e, d)| d + spray.gamma.contract_last(n.as_slice()) * e)
        .collect();
    shape_operator_from_derivatives(model, x.as_slice(), &n, &tangents, &dn)
}

/// A level set near x₀ parametrized by projecting x₀ + Σ p_a e_a back onto it.
pub struct LevelSetFamily {
    pub surface: LevelSetSurface,
    pub origin: DVector<f64>,
    pub directions: Vec<DVector<f64>>,
    pub sign: f64,
    field: UnitNormalField,
}

impl LevelSetFamily {
    pub fn new(surface: LevelSetSurface, origin: &[f64], sign: f64) -> Result<Self> {
        let directions = surface.tangent_basis(origin)?;
        let field = surface.normal_field(sign);
        Ok(LevelSetFamily {
            origin: DVector::from_column_slice(origin),
            directions,
            sign,
            field,
            surface,
        })
    }
}

impl NormalFamily for LevelSetFamily {
    fn model(&self) -> &MetricModel {
        &self.surface.model
    }

    fn param_dim(&self) -> usize {
        self.directions.len()
    }

    fn frame(&self, p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let guess = self
            .directions
            .iter()
            .zip(p)
            .fold(self.origin.clone(), |acc, (d, t)| acc + d * *t);
        let x = self.surface.project(guess.as_slice())?;
        let n = self.field.value(x.as_slice())?;
        Ok((x, n))
    }
}

/// Unit normals along a patch: n(p, w) = ℒ⁻¹(ν)/F*(ν) with
/// ν = ν₀(p) + Σ w_k ν_k(p), where ν_k(p) is the projection of a fixed
/// covector c_k onto the annihilator of the patch tangent space.
///
/// With `sweep_normals` the family also varies w (parameters after the
/// patch parameters), which is what a tube around a submanifold of
/// codimension > 1 needs.
pub struct PatchNormalFamily<P: Patch> {
    pub model: MetricModel,
    pub patch: P,
    pub center: Vec<f64>,
    covectors: Vec<DVector<f64>>,
    sweep_normals: bool,
}

impl<P: Patch> PatchNormalFamily<P> {
    /// `nu0` fixes the normal at the centre parameter; the other annihilator
    /// directions are completed deterministically.
    pub fn new(
        model: MetricModel,
        patch: P,
        center: &[f64],
        nu0: &DVector<f64>,
        sweep_normals: bool,
    ) -> Result<Self> {
        let n = model.dim();
        let jac = patch.jacobian(center);
        let codim = n - patch.param_dim();
        let first = annihilator_projection(&jac, nu0);
        if first.norm() < 1e-10 * (1.0 + nu0.norm()) {
            return Err(GeometryError::NotANormal(first.norm()));
        }
        let mut covectors = vec![first];
        // complete with projected coordinate covectors, Gram–Schmidt in ℝⁿ
        for k in 0..n {
            if covectors.len() == codim {
                break;
            }
            let mut c = annihilator_projection(&jac, &DVector::from_fn(n, |i, _| (i == k) as u8 as f64));
            for prev in &covectors {
                c -= prev * (prev.dot(&c) / prev.norm_squared());
            }
            if c.norm() > 1e-6 {
                covectors.push(c.normalize());
            }
        }
        if covectors.len() != codim {
            return Err(GeometryError::RankEstimationFailure(
                "could not complete the normal covectors".into(),
            ));
        }
        Ok(PatchNormalFamily {
            model,
            patch,
            center: center.to_vec(),
            covectors,
            sweep_normals,
        })
    }

    pub fn codim(&self) -> usize {
        self.covectors.len()
    }

    fn covector(&self, p: &[f64], w: &[f64]) -> DVector<f64> {
        let jac = self.patch.jacobian(p);
        let mut nu = annihilator_projection(&jac, &self.covectors[0]);
        for (k, wk) in w.iter().enumerate() {
            nu += annihilator_projection(&jac, &self.covectors[k + 1]) * *wk;
        }
        nu
    }
}

/// ν − E(EᵀE)⁻¹Eᵀν: the part of ν vanishing on the columns of E.
fn annihilator_projection(e: &DMatrix<f64>, nu: &DVector<f64>) -> DVector<f64> {
    if e.ncols() == 0 {
        return nu.clone();
    }
    let gram = e.transpose() * e;
    let coeff = gram
        .lu()
        .solve(&(e.transpose() * nu))
        .unwrap_or_else(|| DVector::zeros(e.ncols()));
    nu - e * coeff
}

impl<P: Patch> NormalFamily for PatchNormalFamily<P> {
    fn model(&self) -> &MetricModel {
        &self.model
    }

    fn param_dim(&self) -> usize {
        if self.sweep_normals {
            self.model.dim() - 1
        } else {
            self.patch.param_dim()
        }
    }

    fn frame(&self, q: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let m = self.patch.param_dim();
        let p: Vec<f64> = self.center.iter().zip(&q[..m]).map(|(c, d)| c + d).collect();
        let w = if self.sweep_normals { &q[m..] } else { &[][..] };
        let x = self.patch.point(&p);
        let nu = self.covector(&p, w);
        let y = self.model.legendre_inverse(x.as_slice(), nu.as_slice())?;
        let f = self.model.eval_f(x.as_slice(), y.as_slice())?;
        Ok((x, y / f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering() {
        let s = CurvatureSpectrum::from_eigenvalues(&[0.5, 0.1, 0.5 + 1e-9, 0.1], 1e-6);
        assert_eq!(s.multiplicities, vec![2, 2]);
        assert!((s.values[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn euclidean_sphere_shape_operator() {
        let m = MetricModel::euclidean(3);
        let s = LevelSetSurface::new(m, ScalarField::EuclideanNorm, 2.0);
        let x = [0.0, 1.2, 1.6];
        let pair = s.unit_normal(&x).unwrap();
        let spec = s.principal_curvatures(&x, &pair.n_minus, 1e-6).unwrap();
        assert_eq!(spec.multiplicities, vec![2]);
        assert!((spec.values[0] - 0.5).abs() < 1e-10);
        let outward = s.principal_curvatures(&x, &pair.n_plus, 1e-6).unwrap();
        assert!((outward.values[0] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn torsion_requires_orthogonality() {
        let m = MetricModel::euclidean(2);
        let field = UnitNormalField::new(m.clone(), ScalarField::EuclideanNorm, 1.0);
        assert!(matches!(
            reversible_torsion(&m, &field, &[1.0, 0.0], &[1.0, 0.0]),
            Err(GeometryError::NotOrthogonal(_))
        ));
    }
}
