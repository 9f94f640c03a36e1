//! Geodesics, exponential maps, Berwald parallel transport and Jacobi fields.

use nalgebra::DVector;

use crate::error::{GeometryError, Result};
use crate::focal::SCFunction;
use crate::field::VectorField;
use crate::metric::MetricModel;
use crate::ode::{integrate, DenseSolution, OdeFailure, OdeOptions};

/// Integration tolerances and mandatory stop points for geodesic solves.
#[derive(Clone, Debug)]
pub struct GeodesicOptions {
    pub atol: f64,
    pub rtol: f64,
    pub stops: Vec<f64>,
    pub mesh: Option<Vec<f64>>,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            atol: 1e-10,
            rtol: 1e-9,
            stops: Vec::new(),
            mesh: None,
        }
    }
}

impl GeodesicOptions {
    pub fn tight() -> Self {
        GeodesicOptions {
            atol: 1e-13,
            rtol: 1e-12,
            ..Self::default()
        }
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            atol: self.atol,
            rtol: self.rtol,
            stops: self.stops.clone(),
            mesh: self.mesh.clone(),
            ..OdeOptions::default()
        }
    }
}

fn map_failure(e: OdeFailure<GeometryError>) -> GeometryError {
    match e {
        OdeFailure::Initial(err) => err,
        OdeFailure::RhsFailure { at, error } => match error {
            GeometryError::OutsideChart(_) => GeometryError::PathExitsChart { at },
            other => other,
        },
        OdeFailure::StepUnderflow { at } | OdeFailure::TooManySteps { at } => {
            GeometryError::StepFailure { at }
        }
    }
}

/// Solution of γ̈ + 2G(γ, γ̇) = 0 with dense output.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    model: MetricModel,
    dim: usize,
    solution: DenseSolution,
}

impl GeodesicPath {
    pub fn model(&self) -> &MetricModel {
        &self.model
    }

    pub fn s_max(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn position(&self, s: f64) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.eval(s)[..self.dim])
    }

    pub fn velocity(&self, s: f64) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.eval(s)[self.dim..2 * self.dim])
    }

    pub fn end_position(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.end_state()[..self.dim])
    }

    pub fn end_velocity(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.end_state()[self.dim..2 * self.dim])
    }

    pub fn mesh(&self) -> Vec<f64> {
        self.solution.mesh()
    }

    pub fn stats(&self) -> &crate::ode::OdeStats {
        &self.solution.stats
    }

    /// max |F(γ̇(s)) − F(γ̇(0))| / F(γ̇(0)) over `samples` equally spaced points.
    pub fn speed_drift(&self, samples: usize) -> Result<f64> {
        let f0 = self
            .model
            .eval_f(self.position(0.0).as_slice(), self.velocity(0.0).as_slice())?;
        let mut worst: f64 = 0.0;
        for k in 0..=samples {
            let s = self.s_max() * k as f64 / samples as f64;
            let f = self
                .model
                .eval_f(self.position(s).as_slice(), self.velocity(s).as_slice())?;
            worst = worst.max((f - f0).abs() / f0);
        }
        Ok(worst)
    }
}

fn geodesic_rhs(model: &MetricModel, n: usize, state: &[f64]) -> Result<Vec<f64>> {
    let (x, v) = state.split_at(n);
    let g = model.spray_value(x, &v[..n])?;
    let mut out = Vec::with_capacity(2 * n);
    out.extend_from_slice(&v[..n]);
    out.extend(g.iter().map(|gi| -2.0 * gi));
    Ok(out)
}

fn check_direction(model: &MetricModel, s: f64) -> Result<()> {
    if s < 0.0 && !model.supports_backward() {
        return Err(GeometryError::BackwardUnsupported);
    }
    Ok(())
}

/// Geodesic through (x₀, y₀) on [0, s_max] (or [s_max, 0] for backward-capable models).
pub fn integrate_geodesic(
    model: &MetricModel,
    x0: &[f64],
    y0: &[f64],
    s_max: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    model.check_pair(x0, y0)?;
    check_direction(model, s_max)?;
    let n = model.dim();
    let mut state = x0.to_vec();
    state.extend_from_slice(y0);
    let solution = integrate(
        |_s, st: &[f64]| geodesic_rhs(model, n, st),
        0.0,
        &state,
        s_max,
        &opts.ode(),
    )
    .map_err(map_failure)?;
    Ok(GeodesicPath {
        model: model.clone(),
        dim: n,
        solution,
    })
}

/// Unit-speed geodesic: y₀ is rescaled to F(x₀, y₀) = 1 first.
pub fn integrate_unit_geodesic(
    model: &MetricModel,
    x0: &[f64],
    y0: &[f64],
    s_max: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    let f = model.eval_f(x0, y0)?;
    let y: Vec<f64> = y0.iter().map(|v| v / f).collect();
    integrate_geodesic(model, x0, &y, s_max, opts)
}

/// exp_x(v) = γ_v(1).
pub fn exp_map(model: &MetricModel, x: &[f64], v: &[f64], opts: &GeodesicOptions) -> Result<DVector<f64>> {
    model.check_point(x)?;
    if v.iter().all(|c| *c == 0.0) {
        return Ok(DVector::from_column_slice(x));
    }
    let f = model.eval_f(x, v)?;
    let unit: Vec<f64> = v.iter().map(|c| c / f).collect();
    Ok(integrate_geodesic(model, x, &unit, f, opts)?.end_position())
}

/// E(x, s·n) = exp_x(s n) for a unit vector n; negative s needs a
/// backward-capable model.
pub fn normal_exp(
    model: &MetricModel,
    x: &[f64],
    n: &[f64],
    s: f64,
    opts: &GeodesicOptions,
) -> Result<DVector<f64>> {
    let f = model.eval_f(x, n)?;
    if (f - 1.0).abs() > 1e-8 {
        return Err(GeometryError::NotANormal((f - 1.0).abs()));
    }
    check_direction(model, s)?;
    if s == 0.0 {
        return Ok(DVector::from_column_slice(x));
    }
    Ok(integrate_geodesic(model, x, n, s, opts)?.end_position())
}

/// Vectors transported along a geodesic by dX/ds = −N(γ̇) X.
#[derive(Clone, Debug)]
pub struct TransportedFrame {
    dim: usize,
    count: usize,
    solution: DenseSolution,
}

impl TransportedFrame {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn position(&self, s: f64) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.eval(s)[..self.dim])
    }

    pub fn velocity(&self, s: f64) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.eval(s)[self.dim..2 * self.dim])
    }

    pub fn vector(&self, s: f64, k: usize) -> DVector<f64> {
        let st = self.solution.eval(s);
        let off = (2 + k) * self.dim;
        DVector::from_column_slice(&st[off..off + self.dim])
    }

    pub fn vectors(&self, s: f64) -> Vec<DVector<f64>> {
        let st = self.solution.eval(s);
        (0..self.count)
            .map(|k| {
                let off = (2 + k) * self.dim;
                DVector::from_column_slice(&st[off..off + self.dim])
            })
            .collect()
    }
}

/// Berwald parallel transport of `vectors` along the geodesic starting like `path`.
pub fn parallel_transport(
    path: &GeodesicPath,
    vectors: &[DVector<f64>],
    opts: &GeodesicOptions,
) -> Result<TransportedFrame> {
    let model = &path.model;
    let n = path.dim;
    let mut state: Vec<f64> = path.position(0.0).iter().cloned().collect();
    state.extend(path.velocity(0.0).iter());
    for v in vectors {
        state.extend(v.iter());
    }
    let rhs = |_s: f64, st: &[f64]| -> Result<Vec<f64>> {
        let (x, rest) = st.split_at(n);
        let v = &rest[..n];
        let (g, nn) = model.spray_connection(x, v)?;
        let mut out = Vec::with_capacity(st.len());
        out.extend_from_slice(v);
        out.extend(g.iter().map(|gi| -2.0 * gi));
        for k in 0..vectors.len() {
            let off = (2 + k) * n;
            let xk = DVector::from_column_slice(&st[off..off + n]);
            out.extend((-&nn * xk).iter());
        }
        Ok(out)
    };
    let mut o = opts.ode();
    o.mesh = None;
    let solution = integrate(rhs, 0.0, &state, path.s_max(), &o).map_err(map_failure)?;
    Ok(TransportedFrame {
        dim: n,
        count: vectors.len(),
        solution,
    })
}

#[derive(Clone, Debug)]
enum JacobiData {
    ClosedForm { sc: SCFunction, frame: TransportedFrame },
    Numeric { plus: GeodesicPath, minus: GeodesicPath, step: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum JacobiMode {
    ClosedForm(f64),
    NumericVariation,
}

/// A Jacobi field along a unit-speed geodesic.
#[derive(Clone, Debug)]
pub struct JacobiSolution {
    pub path: GeodesicPath,
    data: JacobiData,
}

impl JacobiSolution {
    pub fn mode(&self) -> JacobiMode {
        match &self.data {
            JacobiData::ClosedForm { sc, .. } => JacobiMode::ClosedForm(sc.c),
            JacobiData::Numeric { .. } => JacobiMode::NumericVariation,
        }
    }

    /// J(s).
    pub fn value(&self, s: f64) -> DVector<f64> {
        match &self.data {
            JacobiData::ClosedForm { sc, frame } => {
                let (a, b, _) = sc.eval(s);
                frame.vector(s, 0) * b + frame.vector(s, 1) * a
            }
            JacobiData::Numeric { plus, minus, step } => {
                (plus.position(s) - minus.position(s)) / (2.0 * step)
            }
        }
    }

    /// D_T J(s).
    pub fn derivative(&self, s: f64) -> Result<DVector<f64>> {
        match &self.data {
            JacobiData::ClosedForm { sc, frame } => {
                let (_, b, c) = sc.eval(s);
                Ok(frame.vector(s, 0) * c + frame.vector(s, 1) * b)
            }
            JacobiData::Numeric { plus, minus, step } => {
                // D_T J = ∂_t T̃ + N(T) J
                let dt = (plus.velocity(s) - minus.velocity(s)) / (2.0 * step);
                let x = self.path.position(s);
                let t = self.path.velocity(s);
                let (_, nn) = self.path.model.spray_connection(x.as_slice(), t.as_slice())?;
                Ok(dt + nn * self.value(s))
            }
        }
    }
}

/// J(s) = E₁(s)s_c′(s) + E₂(s)s_c(s) with E₁, E₂ parallel, E₁(0) = J₀,
/// E₂(0) = J₀′. The model's flag curvature along the initial flags must be c.
pub fn jacobi_closed_form(
    c: f64,
    path: &GeodesicPath,
    j0: &DVector<f64>,
    j0_prime: &DVector<f64>,
    opts: &GeodesicOptions,
) -> Result<JacobiSolution> {
    let model = &path.model;
    let x = path.position(0.0);
    let t = path.velocity(0.0);
    let g = model.fundamental_tensor(x.as_slice(), t.as_slice())?;
    let scale = 1.0 + j0.norm() + j0_prime.norm();
    for v in [j0, j0_prime] {
        let pairing = (&g * &t).dot(v);
        if pairing.abs() > 1e-8 * scale {
            return Err(GeometryError::NotOrthogonal(pairing.abs()));
        }
        if v.norm() > 1e-12 {
            let k = model.flag_curvature(x.as_slice(), t.as_slice(), v.as_slice())?;
            if (k - c).abs() > 1e-5 {
                return Err(GeometryError::NotASpaceForm);
            }
        }
    }
    let frame = parallel_transport(path, &[j0.clone(), j0_prime.clone()], opts)?;
    Ok(JacobiSolution {
        path: path.clone(),
        data: JacobiData::ClosedForm {
            sc: SCFunction::new(c),
            frame,
        },
    })
}

/// A curve t ↦ x(t) through a surface point, used to vary normal geodesics.
pub trait SurfaceCurve: Send + Sync {
    fn point(&self, t: f64) -> DVector<f64>;
}

/// x(t) = x₀ + t·d.
pub struct LineCurve {
    pub base: DVector<f64>,
    pub direction: DVector<f64>,
}

impl SurfaceCurve for LineCurve {
    fn point(&self, t: f64) -> DVector<f64> {
        &self.base + &self.direction * t
    }
}

/// J(s) = ∂_t exp_{x(t)}(s·n(x(t)))|_{t=0} by a central difference in t,
/// with the two varied geodesics replaying the base geodesic's step mesh.
pub fn jacobi_numeric(
    model: &MetricModel,
    curve: &dyn SurfaceCurve,
    normal: &dyn VectorField,
    s_max: f64,
    step: f64,
    opts: &GeodesicOptions,
) -> Result<JacobiSolution> {
    let start = |t: f64| -> Result<(DVector<f64>, DVector<f64>)> {
        let x = curve.point(t);
        let n = normal.value(x.as_slice())?;
        Ok((x, n))
    };
    let (x0, n0) = start(0.0)?;
    let path = integrate_geodesic(model, x0.as_slice(), n0.as_slice(), s_max, opts)?;
    let replay = GeodesicOptions {
        mesh: Some(path.mesh()),
        ..opts.clone()
    };
    let (xp, np) = start(step)?;
    let (xm, nm) = start(-step)?;
    let plus = integrate_geodesic(model, xp.as_slice(), np.as_slice(), s_max, &replay)?;
    let minus = integrate_geodesic(model, xm.as_slice(), nm.as_slice(), s_max, &replay)?;
    Ok(JacobiSolution {
        path,
        data: JacobiData::Numeric { plus, minus, step },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_line() {
        let m = MetricModel::euclidean(3);
        let p = integrate_geodesic(&m, &[0.0; 3], &[1.0, 0.0, 0.0], 2.0, &GeodesicOptions::default())
            .unwrap();
        let end = p.end_position();
        assert!((end[0] - 2.0).abs() < 1e-12 && end[1].abs() < 1e-12);
    }

    #[test]
    fn exp_of_zero_is_base_point() {
        let m = MetricModel::funk_ball(2);
        let x = exp_map(&m, &[0.2, 0.3], &[0.0, 0.0], &GeodesicOptions::default()).unwrap();
        assert_eq!(x.as_slice(), &[0.2, 0.3]);
    }

    #[test]
    fn funk_geodesics_cannot_run_backward() {
        let m = MetricModel::funk_ball(2);
        assert_eq!(
            normal_exp(&m, &[0.0, 0.0], &[1.0, 0.0], -0.5, &GeodesicOptions::default()),
            Err(GeometryError::BackwardUnsupported)
        );
    }

    #[test]
    fn leaving_the_chart_is_reported() {
        let m = MetricModel::funk_ball(2);
        let nav = crate::randers::NavigationData::new(
            crate::metric::RiemannianMetric::Euclidean,
            crate::randers::WindField::Dilation { kappa: -0.5 },
            crate::metric::ChartDomain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        )
        .build_dim(2)
        .unwrap();
        // Funk geodesics approach the boundary only asymptotically; the
        // dilation model's chart boundary is reached in finite time.
        assert!(integrate_geodesic(&m, &[0.0, 0.0], &[1.0, 0.0], 5.0, &GeodesicOptions::default())
            .is_ok());
        match integrate_geodesic(&nav, &[0.0, 0.0], &[0.5, 0.0], 5.0, &GeodesicOptions::default()) {
            Err(GeometryError::PathExitsChart { at }) => assert!(at > 0.0 && at < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
