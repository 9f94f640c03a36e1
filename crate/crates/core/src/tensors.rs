//! Pointwise tensors of a Finsler metric: fundamental tensor, Cartan and
//! Landsberg tensors, spray data, flag curvature and the reference-vector
//! covariant derivative.
//!
//! Everything is read off Taylor jets of F² in (x, y). G^i is obtained by
//! solving g_il G^l = ¼([F²]_{x^k y^l} y^k − [F²]_{x^l}) with jet-valued
//! entries, so its y- and x-derivatives come out exact as well.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::field::VectorField;
use crate::jet::{solve_jet_system, Jet, Scalar};
use crate::metric::MetricModel;

/// Dense n×n×n array, indexed `[i][j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.data[(i * n + j) * n + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    /// M_ij = T_ijk v^k.
    pub fn contract_last(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            (0..self.n).map(|k| self.get(i, j, k) * v[k]).sum()
        })
    }

    /// M_jk = T_ijk v^i.
    pub fn contract_first(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |j, k| {
            (0..self.n).map(|i| self.get(i, j, k) * v[i]).sum()
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation from total symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(j, i, k),
                        self.get(i, k, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Geodesic coefficients G^i, nonlinear connection N^i_j = ∂G^i/∂y^j and
/// Berwald coefficients Γ^i_jk = ∂²G^i/∂y^j∂y^k.
#[derive(Clone, Debug)]
pub struct SprayData {
    pub g: DVector<f64>,
    pub n: DMatrix<f64>,
    pub gamma: Tensor3,
}

/// Cholesky test with a pivot tolerance relative to the largest diagonal entry.
pub fn check_positive_definite(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return Err(GeometryError::NotPositiveDefinite { pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(())
}

/// Jets of G^i in the variables (x, y) built from an F² jet of the given
/// shape. With F² exact up to total degree `degree` and x-degree `x_cap`,
/// G^i is exact up to total degree `degree − 2` and x-degree `x_cap − 1`.
pub(crate) fn spray_jets(
    model: &MetricModel,
    x: &[f64],
    y: &[f64],
    degree: usize,
    x_cap: usize,
) -> Result<Vec<Jet>> {
    let n = model.dim();
    let e = model.f2_full_jet(x, y, degree, x_cap);
    let space = e.space().clone();
    let ey: Vec<Jet> = (0..n).map(|l| e.partial(n + l)).collect();
    let g: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|l| ey[i].partial(n + l) * 0.5).collect())
        .collect();
    let ys: Vec<Jet> = (0..n).map(|k| Jet::variable(&space, n + k, y[k])).collect();
    let rhs: Vec<Jet> = (0..n)
        .map(|l| {
            let mut acc = -e.partial(l);
            for (k, yk) in ys.iter().enumerate() {
                acc = acc + ey[l].partial(k) * yk.clone();
            }
            acc * 0.25
        })
        .collect();
    solve_jet_system(g, rhs).ok_or(GeometryError::SingularTensor)
}

fn y_index(n: usize, vars: &[usize]) -> Vec<usize> {
    vars.iter().map(|v| n + v).collect()
}

impl MetricModel {
    /// g_ij = ½ ∂²F²/∂y^i∂y^j.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.check_pair(x, y)?;
        let g = self.fundamental_tensor_unchecked(x, y);
        check_positive_definite(&g)?;
        Ok(g)
    }

    pub(crate) fn fundamental_tensor_unchecked(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let e = self.f2_direction_jet(x, y, 2);
        DMatrix::from_fn(n, n, |i, j| 0.5 * e.derivative_wrt(&[i, j]))
    }

    /// ℒ(y)_i = ½ ∂F²/∂y^i = g_ij(y) y^j.
    pub fn legendre(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        if y.iter().all(|v| *v == 0.0) {
            self.check_point(x)?;
            return Ok(DVector::zeros(self.dim()));
        }
        self.check_pair(x, y)?;
        let n = self.dim();
        let e = self.f2_direction_jet(x, y, 1);
        Ok(DVector::from_fn(n, |i, _| 0.5 * e.derivative_wrt(&[i])))
    }

    /// C_ijk = ¼ ∂³F²/∂y^i∂y^j∂y^k.
    pub fn cartan_tensor(&self, x: &[f64], y: &[f64]) -> Result<Tensor3> {
        self.fundamental_tensor(x, y)?;
        let n = self.dim();
        let e = self.f2_direction_jet(x, y, 3);
        Ok(Tensor3::from_fn(n, |i, j, k| {
            0.25 * e.derivative_wrt(&[i, j, k])
        }))
    }

    /// G^i at (x, y): the right-hand side of γ̈ + 2G(γ, γ̇) = 0.
    pub fn spray_value(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        self.check_pair(x, y)?;
        let jets = spray_jets(self, x, y, 2, 1)?;
        Ok(DVector::from_fn(self.dim(), |i, _| jets[i].value()))
    }

    /// G^i and N^i_j, enough for parallel transport.
    pub fn spray_connection(&self, x: &[f64], y: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_pair(x, y)?;
        let n = self.dim();
        let jets = spray_jets(self, x, y, 3, 1)?;
        let g = DVector::from_fn(n, |i, _| jets[i].value());
        let nn = DMatrix::from_fn(n, n, |i, j| jets[i].derivative_wrt(&[n + j]));
        Ok((g, nn))
    }

    pub fn spray(&self, x: &[f64], y: &[f64]) -> Result<SprayData> {
        self.fundamental_tensor(x, y)?;
        let n = self.dim();
        let jets = spray_jets(self, x, y, 4, 1)?;
        Ok(SprayData {
            g: DVector::from_fn(n, |i, _| jets[i].value()),
            n: DMatrix::from_fn(n, n, |i, j| jets[i].derivative_wrt(&[n + j])),
            gamma: Tensor3::from_fn(n, |i, j, k| jets[i].derivative_wrt(&y_index(n, &[j, k]))),
        })
    }

    /// L_ijk = −½ ℒ_m ∂³G^m/∂y^i∂y^j∂y^k.
    pub fn landsberg_tensor(&self, x: &[f64], y: &[f64]) -> Result<Tensor3> {
        let g = self.fundamental_tensor(x, y)?;
        let n = self.dim();
        let jets = spray_jets(self, x, y, 5, 1)?;
        let lower = &g * DVector::from_column_slice(y);
        Ok(Tensor3::from_fn(n, |i, j, k| {
            let idx = y_index(n, &[i, j, k]);
            -0.5 * (0..n)
                .map(|m| lower[m] * jets[m].derivative_wrt(&idx))
                .sum::<f64>()
        }))
    }

    /// Spray curvature R^i_k = 2∂_kG^i − y^j∂²G^i/∂x^j∂y^k + 2G^jΓ^i_jk − N^i_jN^j_k.
    pub fn riemann_curvature(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.fundamental_tensor(x, y)?;
        let n = self.dim();
        let jets = spray_jets(self, x, y, 4, 2)?;
        let g: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        let nn = DMatrix::from_fn(n, n, |i, j| jets[i].derivative_wrt(&[n + j]));
        Ok(DMatrix::from_fn(n, n, |i, k| {
            let mut r = 2.0 * jets[i].derivative_wrt(&[k]);
            for j in 0..n {
                r -= y[j] * jets[i].derivative_wrt(&[j, n + k]);
                r += 2.0 * g[j] * jets[i].derivative_wrt(&[n + j, n + k]);
                r -= nn[(i, j)] * nn[(j, k)];
            }
            r
        }))
    }

    /// K(y; V) = g_y(R(V), V) / (F² g_y(V,V) − g_y(y,V)²).
    pub fn flag_curvature(&self, x: &[f64], y: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.fundamental_tensor(x, y)?;
        let r = self.riemann_curvature(x, y)?;
        let yv = DVector::from_column_slice(y);
        let vv = DVector::from_column_slice(v);
        let f2 = yv.dot(&(&g * &yv));
        let gv = &g * &vv;
        let vv_g = vv.dot(&gv);
        let yv_g = yv.dot(&gv);
        let denom = f2 * vv_g - yv_g * yv_g;
        if denom <= 1e-12 * f2 * vv_g {
            return Err(GeometryError::DegenerateFlag);
        }
        Ok((&r * &vv).dot(&gv) / denom)
    }

    /// D^w_v X = v^j ∂_j X^i + Γ^i_jk(x, w) v^j X^k.
    pub fn covariant_derivative(
        &self,
        x: &[f64],
        field: &dyn VectorField,
        v: &[f64],
        w: &[f64],
    ) -> Result<DVector<f64>> {
        if w.iter().all(|c| *c == 0.0) {
            return Err(GeometryError::ZeroReference);
        }
        let value = field.value(x)?;
        let jac = field.jacobian(x)?;
        let spray = self.spray(x, w)?;
        let vv = DVector::from_column_slice(v);
        Ok(jac * &vv + spray.gamma.contract_last(value.as_slice()) * vv)
    }

    /// Γ^i_jk(x, w) a^j b^k.
    pub fn berwald_pairing(&self, x: &[f64], w: &[f64], a: &[f64], b: &[f64]) -> Result<DVector<f64>> {
        let spray = self.spray(x, w)?;
        Ok(spray.gamma.contract_last(b) * DVector::from_column_slice(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::RiemannianMetric;

    #[test]
    fn euclidean_tensors_are_trivial() {
        let m = MetricModel::euclidean(3);
        let x = [0.1, 0.2, -0.3];
        let y = [0.5, -1.0, 2.0];
        let g = m.fundamental_tensor(&x, &y).unwrap();
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!(m.cartan_tensor(&x, &y).unwrap().max_abs() < 1e-14);
        let s = m.spray(&x, &y).unwrap();
        assert!(s.g.amax() < 1e-14 && s.n.amax() < 1e-14 && s.gamma.max_abs() < 1e-14);
    }

    #[test]
    fn riemannian_spray_is_levi_civita() {
        let h = RiemannianMetric::StereographicSphere;
        let m = MetricModel::riemannian(3, h.clone());
        let x = [0.3, -0.2, 0.5];
        let y = [0.7, 0.1, -0.4];
        let s = m.spray(&x, &y).unwrap();
        let gamma = h.christoffel(&x);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((s.gamma.get(i, j, k) - gamma[i][j][k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sphere_flag_curvature_is_one() {
        let m = MetricModel::riemannian(3, RiemannianMetric::StereographicSphere);
        let k = m
            .flag_curvature(&[0.4, 0.1, -0.6], &[1.0, 0.3, 0.2], &[0.1, -1.0, 0.5])
            .unwrap();
        assert!((k - 1.0).abs() < 1e-10, "K = {k}");
    }

    #[test]
    fn pure_quartic_is_degenerate_on_axes() {
        let m = MetricModel::quartic(2, 0.0);
        assert!(matches!(
            m.fundamental_tensor(&[0.0, 0.0], &[1.0, 0.0]),
            Err(GeometryError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn parallel_flag_is_rejected() {
        let m = MetricModel::euclidean(2);
        assert_eq!(
            m.flag_curvature(&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]),
            Err(GeometryError::DegenerateFlag)
        );
    }
}
