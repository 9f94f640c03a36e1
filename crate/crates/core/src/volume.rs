//! Volume forms and S-curvature.
//!
//! The Busemann–Hausdorff density is σ(x) = ω_n / vol(indicatrix), with
//! vol(indicatrix) = (1/n)∫_{S^{n−1}} F(x,u)^{−n} du evaluated on a product
//! Gauss–Legendre grid in hyperspherical angles. Position enters the
//! integrand as a first-order jet, so ∇ln σ comes out of the same sweep.

use std::f64::consts::PI;

use crate::error::{GeometryError, Result};
use crate::jet::{Jet, JetSpace, Scalar};
use crate::metric::MetricModel;

#[derive(Clone, Debug, PartialEq)]
pub enum VolumeForm {
    /// Busemann–Hausdorff; `order` is the number of nodes per angle,
    /// `None` picks 48 for n ≤ 3 and 24 otherwise.
    BusemannHausdorff { order: Option<usize> },
    /// σ ≡ 1 in coordinates.
    Lebesgue,
}

impl VolumeForm {
    pub fn bh() -> Self {
        VolumeForm::BusemannHausdorff { order: None }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_p(order, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre_p(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Volume of the Euclidean unit ball in dimension n.
pub fn unit_ball_volume(n: usize) -> f64 {
    // ω_n = 2π/n · ω_{n−2}
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Quadrature points on S^{n−1}: unit vectors and surface weights. Polar
/// angles use Gauss–Legendre nodes.
fn sphere_grid(n: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let (z, w) = gauss_legendre(order);
    // polar angles θ_1..θ_{n−2} ∈ [0, π], azimuth φ ∈ [0, 2π]
    let polar: Vec<(f64, f64)> = z
        .iter()
        .zip(&w)
        .map(|(t, wt)| (0.5 * PI * (t + 1.0), 0.5 * PI * wt))
        .collect();
    // the azimuth is periodic, where the equispaced rule converges fastest
    let azimuth: Vec<(f64, f64)> = (0..order)
        .map(|k| (2.0 * PI * k as f64 / order as f64, 2.0 * PI / order as f64))
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut u = vec![0.0; n];
        let mut weight = 1.0;
        let mut sin_prod = 1.0;
        for a in 0..n - 2 {
            let (theta, wt) = polar[idx[a]];
            u[a] = sin_prod * theta.cos();
            weight *= wt * theta.sin().powi((n - 2 - a) as i32);
            sin_prod *= theta.sin();
        }
        let (phi, wt) = azimuth[idx[n - 2]];
        u[n - 2] = sin_prod * phi.cos();
        u[n - 1] = sin_prod * phi.sin();
        weight *= wt;
        out.push((u, weight));

        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < order {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == n - 1 {
                return out;
            }
        }
    }
}

/// (σ, ∂_k ln σ) of the Busemann–Hausdorff form at one quadrature order.
fn bh_with_gradient(model: &MetricModel, x: &[f64], order: usize) -> (f64, Vec<f64>) {
    let n = model.dim();
    let space = JetSpace::total(n, 1);
    let xs: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, x[i])).collect();
    let mut total = Jet::constant(&space, 0.0);
    for (u, w) in sphere_grid(n, order) {
        let us: Vec<Jet> = u.iter().map(|&v| Jet::constant(&space, v)).collect();
        let f = model.eval_generic(&xs, &us);
        total = total + f.powi(-(n as i32)) * w;
    }
    let vol = total / n as f64;
    let sigma = unit_ball_volume(n) / vol.value();
    // ln σ = ln ω_n − ln vol
    let grad = (0..n)
        .map(|k| -vol.derivative_wrt(&[k]) / vol.value())
        .collect();
    (sigma, grad)
}

/// Largest relative change of σ between the requested order and three
/// quarters of it before the quadrature is declared unconverged.
pub const QUADRATURE_TOL: f64 = 1e-6;

fn default_order(n: usize) -> usize {
    if n <= 3 {
        48
    } else {
        24
    }
}

impl VolumeForm {
    /// Density σ(x) and the gradient of ln σ.
    pub fn density_and_log_gradient(&self, model: &MetricModel, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        model.check_point(x)?;
        let n = model.dim();
        match self {
            VolumeForm::Lebesgue => Ok((1.0, vec![0.0; n])),
            VolumeForm::BusemannHausdorff { order } => {
                let order = order.unwrap_or_else(|| default_order(n));
                let (sigma, grad) = bh_with_gradient(model, x, order);
                let (coarse, _) = bh_with_gradient(model, x, (order * 3).div_ceil(4));
                let change = (sigma - coarse).abs() / sigma;
                if !sigma.is_finite() || change > QUADRATURE_TOL {
                    return Err(GeometryError::QuadratureFailure(change));
                }
                Ok((sigma, grad))
            }
        }
    }

    pub fn density(&self, model: &MetricModel, x: &[f64]) -> Result<f64> {
        Ok(self.density_and_log_gradient(model, x)?.0)
    }
}

impl MetricModel {
    pub fn bh_density(&self, x: &[f64], order: Option<usize>) -> Result<f64> {
        VolumeForm::BusemannHausdorff { order }.density(self, x)
    }

    /// S(x, y) = ∂G^i/∂y^i − y^k ∂_k ln σ.
    pub fn s_curvature(&self, vol: &VolumeForm, x: &[f64], y: &[f64]) -> Result<f64> {
        let (_, nn) = self.spray_connection(x, y)?;
        let (_, grad) = vol.density_and_log_gradient(self, x)?;
        let drift: f64 = y.iter().zip(&grad).map(|(a, b)| a * b).sum();
        Ok(nn.trace() - drift)
    }
}
