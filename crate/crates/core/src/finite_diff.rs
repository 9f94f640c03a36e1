//! Finite-difference oracles for the jet-based tensors.
//!
//! Each oracle is built from plain f64 evaluations of F² or of a lower-order
//! tensor, using Richardson-extrapolated central differences.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::metric::MetricModel;
use crate::tensors::Tensor3;

/// Step used by the oracles; Richardson extrapolation uses h and h/2.
pub const ORACLE_STEP: f64 = 1e-3;

fn shifted(v: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut out = v.to_vec();
    for &(i, d) in moves {
        out[i] += d;
    }
    out
}

/// ∂φ/∂v_a by Richardson-extrapolated central differences.
pub fn first_derivative(phi: impl Fn(&[f64]) -> f64, v: &[f64], a: usize, h: f64) -> f64 {
    let d = |h: f64| (phi(&shifted(v, &[(a, h)])) - phi(&shifted(v, &[(a, -h)]))) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// ∂²φ/∂v_a∂v_b by Richardson-extrapolated central differences.
pub fn second_derivative(phi: impl Fn(&[f64]) -> f64, v: &[f64], a: usize, b: usize, h: f64) -> f64 {
    let d = |h: f64| {
        (phi(&shifted(v, &[(a, h), (b, h)])) - phi(&shifted(v, &[(a, h), (b, -h)]))
            - phi(&shifted(v, &[(a, -h), (b, h)]))
            + phi(&shifted(v, &[(a, -h), (b, -h)])))
            / (4.0 * h * h)
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// max|a − b| / max(max|b|, 1).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(1.0, f64::max);
    diff / scale
}

fn f2(model: &MetricModel, x: &[f64], y: &[f64]) -> f64 {
    model.eval_generic(x, y).powi(2)
}

/// g_ij = ½ ∂²F²/∂y^i∂y^j.
pub fn fundamental_tensor(model: &MetricModel, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let n = model.dim();
    DMatrix::from_fn(n, n, |i, j| {
        0.5 * second_derivative(|yy| f2(model, x, yy), y, i, j, ORACLE_STEP)
    })
}

/// C_ijk = ½ ∂g_ij/∂y^k, differencing the jet-based g.
pub fn cartan_tensor(model: &MetricModel, x: &[f64], y: &[f64]) -> Tensor3 {
    let n = model.dim();
    let gs: Vec<[DMatrix<f64>; 4]> = (0..n)
        .map(|k| {
            let h = ORACLE_STEP;
            [h, -h, h / 2.0, -h / 2.0].map(|d| model.fundamental_tensor_unchecked(x, &shifted(y, &[(k, d)])))
        })
        .collect();
    let h = ORACLE_STEP;
    Tensor3::from_fn(n, |i, j, k| {
        let [p, m, p2, m2] = &gs[k];
        let d1 = (p[(i, j)] - m[(i, j)]) / (2.0 * h);
        let d2 = (p2[(i, j)] - m2[(i, j)]) / h;
        0.5 * (4.0 * d2 - d1) / 3.0
    })
}

/// G^i = ¼ g^il([F²]_{x^k y^l} y^k − [F²]_{x^l}) from differences of F² only.
pub fn spray_value(model: &MetricModel, x: &[f64], y: &[f64]) -> DVector<f64> {
    let n = model.dim();
    let mut xy = x.to_vec();
    xy.extend_from_slice(y);
    let joint = |v: &[f64]| f2(model, &v[..n], &v[n..]);
    let g = fundamental_tensor(model, x, y);
    let rhs = DVector::from_fn(n, |l, _| {
        let mut acc = -first_derivative(joint, &xy, l, ORACLE_STEP);
        for k in 0..n {
            acc += second_derivative(joint, &xy, k, n + l, ORACLE_STEP) * y[k];
        }
        0.25 * acc
    });
    g.lu().solve(&rhs).expect("oracle g invertible")
}

/// N^i_j = ∂G^i/∂y^j, differencing the jet-based G.
pub fn connection(model: &MetricModel, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = ORACLE_STEP;
        let at = |d: f64| model.spray_value(x, &shifted(y, &[(j, d)]));
        let d1 = (at(h)? - at(-h)?) / (2.0 * h);
        let d2 = (at(h / 2.0)? - at(-h / 2.0)?) / h;
        cols.push((d2 * 4.0 - d1) / 3.0);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Γ^i_jk = ∂²G^i/∂y^j∂y^k, differencing the jet-based G.
pub fn berwald(model: &MetricModel, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let n = model.dim();
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let g = |yy: &[f64]| {
                    model
                        .spray_value(x, yy)
                        .map(|v| v[i])
                        .unwrap_or(f64::NAN)
                };
                data[(i * n + j) * n + k] = second_derivative(g, y, j, k, ORACLE_STEP);
            }
        }
    }
    Ok(Tensor3::from_fn(n, |i, j, k| data[(i * n + j) * n + k]))
}

/// L_ijk = −½ ℒ_m ∂Γ^m_ij/∂y^k, differencing the jet-based Γ.
pub fn landsberg(model: &MetricModel, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let n = model.dim();
    let lower = model.legendre(x, y)?;
    let h = ORACLE_STEP;
    let mut dgamma = Vec::with_capacity(n);
    for k in 0..n {
        let at = |d: f64| model.spray(x, &shifted(y, &[(k, d)])).map(|s| s.gamma);
        let (p, m, p2, m2) = (at(h)?, at(-h)?, at(h / 2.0)?, at(-h / 2.0)?);
        dgamma.push(Tensor3::from_fn(n, |mm, i, j| {
            let d1 = (p.get(mm, i, j) - m.get(mm, i, j)) / (2.0 * h);
            let d2 = (p2.get(mm, i, j) - m2.get(mm, i, j)) / h;
            (4.0 * d2 - d1) / 3.0
        }));
    }
    Ok(Tensor3::from_fn(n, |i, j, k| {
        -0.5 * (0..n).map(|m| lower[m] * dgamma[k].get(m, i, j)).sum::<f64>()
    }))
}
