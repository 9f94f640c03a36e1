//! Named verifications. Each check draws its samples sequentially from its
//! own seeded stream, evaluates them in parallel and reduces in sample order,
//! so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use finsler_core::field::ScalarField;
use finsler_core::finite_diff as fd;
use finsler_core::focal::{detect_focal_numeric, focal_distances, tube_principal_curvatures, TubeFamily};
use finsler_core::geodesic::{integrate_geodesic, parallel_transport, GeodesicOptions};
use finsler_core::hypersurface::{
    family_shape_operator, CirclePatch, CurvatureSpectrum, LevelSetFamily, LevelSetSurface, NormalFamily,
};
use finsler_core::isoparametric::{
    cartan_residuals, check_multiplicity_pattern, check_spacing, count_bound_check, focal_minimality_audit,
    minimality_audit, sample_level_set, verify_isoparametric,
};
use finsler_core::{GeometryError, MetricKind, MetricModel, VolumeForm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::{is_randers, MetricSpec};
use crate::scenario::{BClosedForm, CheckParams, FunctionSpec, ResolvedCheck};

macro_rules! check_names {
    ($($variant:ident => $name:literal, $tol:expr, $surface:expr;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum CheckName {
            $(#[serde(rename = $name)] $variant,)*
        }

        impl CheckName {
            pub const ALL: &'static [CheckName] = &[$(CheckName::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CheckName::$variant => $name,)*
                }
            }

            pub fn default_tolerance(self) -> f64 {
                match self {
                    $(CheckName::$variant => $tol,)*
                }
            }

            pub fn needs_surface(self) -> bool {
                match self {
                    $(CheckName::$variant => $surface,)*
                }
            }
        }
    };
}

check_names! {
    TensorOracle => "tensor-oracle", 1e-6, false;
    GContraction => "g-contraction", 1e-9, false;
    ClContraction => "cl-contraction", 1e-9, false;
    SprayHomogeneity => "spray-homogeneity", 1e-8, false;
    GammaContraction => "gamma-contraction", 1e-10, false;
    LegendreRoundtrip => "legendre-roundtrip", 1e-8, false;
    RandersDual => "randers-dual", 1e-8, false;
    FlagCurvature => "flag-curvature", 1e-6, false;
    GeodesicStraight => "geodesic-straight", 1e-9, false;
    SpeedDrift => "speed-drift", 1e-8, false;
    TransportPairing => "transport-pairing", 1e-8, false;
    FocalDetect => "focal-detect", 1e-6, true;
    TubeCurvature => "tube-curvature", 1e-5, true;
    TorsionAudit => "torsion-audit", 1e-7, false;
    TorsionHomothetic => "torsion-homothetic", 1e-6, false;
    SCurvatureZero => "s-curvature-zero", 1e-6, false;
    SCurvatureConstant => "s-curvature-constant", 1e-4, false;
    Cartan => "cartan", 1e-7, true;
    CartanSynthetic => "cartan-synthetic", 1e-12, false;
    CartanDetect => "cartan-detect", 0.0, false;
    Isoparametric => "isoparametric", 1e-6, false;
    Spacing => "spacing", 1e-12, false;
    MultiplicityPattern => "multiplicity-pattern", 0.0, false;
    CountBound => "count-bound", 0.0, false;
    Minimality => "minimality", 1e-6, true;
    MinimalityControl => "minimality-control", 0.0, false;
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl CheckName {
    /// Static validation of the parameters a check reads; errors name the parameter.
    pub fn validate(self, p: &CheckParams, metric: &MetricSpec) -> Result<(), (&'static str, String)> {
        let randers = metric.navigation().is_some();
        match self {
            CheckName::RandersDual | CheckName::TorsionAudit | CheckName::TorsionHomothetic if !randers => {
                Err(("metric", format!("{self} needs a Randers metric, got {}", metric.id)))
            }
            CheckName::GeodesicStraight if metric.minkowski_norm().is_none() && !metric.is_euclidean() => {
                Err(("metric", format!("{self} needs a Minkowski metric, got {}", metric.id)))
            }
            CheckName::Isoparametric if p.function.is_none() => Err(("function", "required".into())),
            CheckName::Isoparametric if p.levels.as_ref().map_or(true, |l| l.is_empty()) => {
                Err(("levels", "at least one level is required".into()))
            }
            CheckName::Isoparametric if p.b_closed_form.is_some() && p.verdict == Some(false) => {
                Err(("b_closed_form", "a closed form makes no sense for an expected negative verdict".into()))
            }
            CheckName::TubeCurvature if p.points.map_or(false, |k| k == 0) => Err(("points", "must be positive".into())),
            _ => {
                if let (Some(lo), Some(hi)) = (p.s_min, p.s_max) {
                    if !(lo < hi) {
                        return Err(("s_max", format!("window ({lo}, {hi}) is empty")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Measured residual, per-sample values and free-form details of one check.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub residual: f64,
    pub samples: Vec<f64>,
    pub detail: BTreeMap<String, Value>,
}

impl Outcome {
    fn from_samples(samples: Vec<f64>) -> Self {
        Outcome {
            residual: max(&samples),
            samples,
            detail: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.detail.insert(key.to_string(), value);
        self
    }
}

type CheckResult = Result<Outcome, String>;

fn max(v: &[f64]) -> f64 {
    // NaN propagates so a broken sample cannot pass
    v.iter().fold(0.0, |a: f64, &b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn err(e: GeometryError) -> String {
    e.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Context {
    spec: MetricSpec,
    model: MetricModel,
}

impl Context {
    fn pairs(&self, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut r = rng(seed);
        (0..count)
            .map(|_| {
                let x = self.model.random_point(0.7, &mut r);
                let y = self.model.random_unit(&x, &mut r);
                (x, y)
            })
            .collect()
    }

    fn curvature(&self, p: &CheckParams) -> f64 {
        p.expected.unwrap_or_else(|| self.spec.flag_curvature())
    }
}

/// Evaluates `f` over the items in parallel and collects in item order.
fn par_eval<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R, GeometryError> + Sync + Send) -> Result<Vec<R>, String> {
    items.par_iter().map(f).collect::<Result<Vec<R>, _>>().map_err(err)
}

pub fn run_check(check: &ResolvedCheck) -> CheckResult {
    let model = check.metric.build().map_err(err)?;
    let cx = Context {
        spec: check.metric.clone(),
        model,
    };
    let p = &check.params;
    let (n, seed) = (check.count, check.seed);
    match check.name {
        CheckName::TensorOracle => tensor_oracle(&cx, n, seed),
        CheckName::GContraction => pointwise(&cx, n, seed, |m, x, y| {
            let g = m.fundamental_tensor(x, y)?;
            let yv = DVector::from_column_slice(y);
            let f = m.eval_f(x, y)?;
            Ok((yv.dot(&(&g * &yv)) - f * f).abs())
        }),
        CheckName::ClContraction => pointwise(&cx, n, seed, |m, x, y| {
            let c = m.cartan_tensor(x, y)?.contract_last(y).amax();
            let l = m.landsberg_tensor(x, y)?.contract_last(y).amax();
            Ok(c.max(l))
        }),
        CheckName::SprayHomogeneity => pointwise(&cx, n, seed, |m, x, y| {
            let g = m.spray_value(x, y)?;
            let scaled: Vec<f64> = y.iter().map(|v| 2.5 * v).collect();
            Ok((m.spray_value(x, &scaled)? - g * 6.25).amax())
        }),
        CheckName::GammaContraction => pointwise(&cx, n, seed, |m, x, y| {
            let s = m.spray(x, y)?;
            Ok((s.gamma.contract_last(y) - &s.n).amax())
        }),
        CheckName::LegendreRoundtrip => legendre_roundtrip(&cx, n, seed),
        CheckName::RandersDual => randers_dual(&cx, n, seed),
        CheckName::FlagCurvature => flag_curvature(&cx, n, seed, cx.curvature(p)),
        CheckName::GeodesicStraight => geodesic_straight(&cx, n, seed, p.s_max.unwrap_or(3.0)),
        CheckName::SpeedDrift => speed_drift(&cx, n, seed, p.s_max.unwrap_or(default_length(&cx.model))),
        CheckName::TransportPairing => transport_pairing(&cx, n, seed, p.s_max.unwrap_or(default_length(&cx.model))),
        CheckName::FocalDetect => focal_detect(&cx, check),
        CheckName::TubeCurvature => tube_curvature(&cx, check),
        CheckName::TorsionAudit | CheckName::TorsionHomothetic => torsion(&cx, check),
        CheckName::SCurvatureZero => pointwise(&cx, n, seed, |m, x, y| Ok(m.s_curvature(&VolumeForm::bh(), x, y)?.abs())),
        CheckName::SCurvatureConstant => s_constant(&cx, n, seed),
        CheckName::Cartan => cartan_measured(&cx, check),
        CheckName::CartanSynthetic => cartan_synthetic(p),
        CheckName::CartanDetect => cartan_detect(p),
        CheckName::Isoparametric => isoparametric(&cx, check),
        CheckName::Spacing => spacing(p),
        CheckName::MultiplicityPattern => multiplicity_table(),
        CheckName::CountBound => count_bound(),
        CheckName::Minimality => minimality(&cx, check),
        CheckName::MinimalityControl => minimality_control(&cx, check),
    }
}

fn default_length(model: &MetricModel) -> f64 {
    // Funk geodesics reach the boundary at finite forward length
    if matches!(model.kind(), MetricKind::FunkBall) {
        0.5
    } else {
        1.0
    }
}

fn pointwise(
    cx: &Context,
    count: usize,
    seed: u64,
    f: impl Fn(&MetricModel, &[f64], &[f64]) -> Result<f64, GeometryError> + Sync + Send,
) -> CheckResult {
    let pairs = cx.pairs(count, seed);
    let samples = par_eval(&pairs, |(x, y)| f(&cx.model, x, y))?;
    Ok(Outcome::from_samples(samples))
}

fn tensor_oracle(cx: &Context, count: usize, seed: u64) -> CheckResult {
    let pairs = cx.pairs(count, seed);
    let m = &cx.model;
    let rows = par_eval(&pairs, |(x, y)| {
        let s = m.spray(x, y)?;
        Ok([
            fd::relative_error(m.fundamental_tensor(x, y)?.as_slice(), fd::fundamental_tensor(m, x, y).as_slice()),
            fd::relative_error(m.cartan_tensor(x, y)?.as_slice(), fd::cartan_tensor(m, x, y).as_slice()),
            fd::relative_error(m.landsberg_tensor(x, y)?.as_slice(), fd::landsberg(m, x, y)?.as_slice()),
            fd::relative_error(s.g.as_slice(), fd::spray_value(m, x, y).as_slice()),
            fd::relative_error(s.gamma.as_slice(), fd::berwald(m, x, y)?.as_slice()),
        ])
    })?;
    let worst = |k: usize| max(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
    let detail = json!({"g": worst(0), "C": worst(1), "L": worst(2), "G": worst(3), "Gamma": worst(4)});
    Ok(Outcome::from_samples(rows.iter().map(|r| max(r)).collect()).with("worst_by_tensor", detail))
}

fn legendre_roundtrip(cx: &Context, count: usize, seed: u64) -> CheckResult {
    let mut r = rng(seed);
    let items: Vec<(Vec<f64>, Vec<f64>, f64)> = cx
        .pairs(count, seed)
        .into_iter()
        .map(|(x, y)| {
            let scale = r.gen_range(0.2..3.0);
            let y = y.iter().map(|v| v * scale).collect();
            (x, y, scale)
        })
        .collect();
    let m = &cx.model;
    let samples = par_eval(&items, |(x, y, scale)| {
        let xi = m.legendre(x, y)?;
        let back = m.legendre_inverse(x, xi.as_slice())?;
        let round = (back - DVector::from_column_slice(y)).amax();
        let dual = (m.dual_norm(x, xi.as_slice())? - m.eval_f(x, y)?).abs();
        Ok(round.max(dual) / scale)
    })?;
    Ok(Outcome::from_samples(samples))
}

fn randers_dual(cx: &Context, count: usize, seed: u64) -> CheckResult {
    let nav = is_randers(&cx.model).ok_or("not a Randers metric")?;
    let dim = cx.model.dim();
    let mut r = rng(seed);
    let items: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            let x = cx.model.random_point(0.8, &mut r);
            let xi = (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect();
            (x, xi)
        })
        .collect();
    let samples = par_eval(&items, |(x, xi)| {
        let newton = cx.model.legendre_inverse(x, xi)?;
        let a = (newton - nav.legendre_inverse(x, xi)).amax();
        let b = (cx.model.dual_norm(x, xi)? - nav.dual(x, xi)).abs();
        Ok(a.max(b))
    })?;
    Ok(Outcome::from_samples(samples))
}

fn flag_curvature(cx: &Context, count: usize, seed: u64, expected: f64) -> CheckResult {
    let dim = cx.model.dim();
    let mut r = rng(seed);
    let mut values = Vec::with_capacity(count);
    let mut skipped = 0usize;
    // degenerate flags (V parallel to y) are redrawn; batches keep the order fixed
    while values.len() < count && skipped <= count {
        let need = count - values.len();
        let batch: Vec<_> = (0..need)
            .map(|_| {
                let x = cx.model.random_point(0.7, &mut r);
                let y = cx.model.random_unit(&x, &mut r);
                let v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
                (x, y, v)
            })
            .collect();
        let ks: Vec<Result<f64, GeometryError>> =
            batch.par_iter().map(|(x, y, v)| cx.model.flag_curvature(x, y, v)).collect();
        for k in ks {
            match k {
                Ok(k) => values.push(k),
                Err(GeometryError::DegenerateFlag) => skipped += 1,
                Err(e) => return Err(err(e)),
            }
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome::from_samples(values.iter().map(|k| (k - expected).abs()).collect())
        .with("expected", json!(expected))
        .with("range", json!([lo, hi]))
        .with("flags", json!(values.len()))
        .with("degenerate_redrawn", json!(skipped)))
}

fn geodesic_straight(cx: &Context, count: usize, seed: u64, length: f64) -> CheckResult {
    let pairs = cx.pairs(count, seed);
    let dim = cx.model.dim();
    let samples = par_eval(&pairs, |(x, y)| {
        let path = integrate_geodesic(&cx.model, x, y, length, &GeodesicOptions::default())?;
        Ok((0..=30)
            .map(|k| {
                let s = length * k as f64 / 30.0;
                let line = DVector::from_fn(dim, |i, _| x[i] + s * y[i]);
                (path.position(s) - line).amax()
            })
            .fold(0.0, f64::max))
    })?;
    Ok(Outcome::from_samples(samples))
}

/// Runs `f` on each pair; geodesics leaving the chart are skipped and counted.
fn along_geodesics(
    cx: &Context,
    count: usize,
    seed: u64,
    f: impl Fn(&[f64], &[f64]) -> Result<f64, GeometryError> + Sync + Send,
) -> CheckResult {
    let pairs = cx.pairs(count, seed);
    let rows: Vec<Option<f64>> = par_eval(&pairs, |(x, y)| match f(x, y) {
        Ok(v) => Ok(Some(v)),
        Err(GeometryError::PathExitsChart { .. }) => Ok(None),
        Err(e) => Err(e),
    })?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let samples: Vec<f64> = rows.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err("every geodesic left the chart".into());
    }
    Ok(Outcome::from_samples(samples).with("left_chart", json!(skipped)))
}

fn speed_drift(cx: &Context, count: usize, seed: u64, length: f64) -> CheckResult {
    along_geodesics(cx, count, seed, |x, y| {
        integrate_geodesic(&cx.model, x, y, length, &GeodesicOptions::tight())?.speed_drift(50)
    })
}

fn g_orthonormal_frame(g: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = g.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.3 * (i + k) as f64 });
        for b in &basis {
            v -= b * b.dot(&(g * &v));
        }
        v /= v.dot(&(g * &v)).sqrt();
        basis.push(v);
    }
    basis
}

fn transport_pairing(cx: &Context, count: usize, seed: u64, length: f64) -> CheckResult {
    let m = &cx.model;
    along_geodesics(cx, count, seed, |x, y| {
        let opts = GeodesicOptions::tight();
        let path = integrate_geodesic(m, x, y, length, &opts)?;
        let g0 = m.fundamental_tensor(x, y)?;
        let mut frame = g_orthonormal_frame(&g0);
        frame.push(DVector::from_column_slice(y));
        let moved = parallel_transport(&path, &frame, &opts)?;
        let mut worst: f64 = 0.0;
        for k in 0..=20 {
            let s = length * k as f64 / 20.0;
            let g = m.fundamental_tensor(moved.position(s).as_slice(), moved.velocity(s).as_slice())?;
            let vs = moved.vectors(s);
            for a in 0..vs.len() {
                for b in 0..vs.len() {
                    let now = vs[a].dot(&(&g * &vs[b]));
                    let then = frame[a].dot(&(&g0 * &frame[b]));
                    worst = worst.max((now - then).abs());
                }
            }
        }
        Ok(worst)
    })
}

/// The level-set family of the check's surface and its base spectrum.
fn surface_family(cx: &Context, check: &ResolvedCheck) -> Result<(LevelSetSurface, LevelSetFamily, CurvatureSpectrum), String> {
    let spec = check.surface.as_ref().ok_or("no surface")?;
    let f = spec.field(&cx.spec)?;
    let surface = LevelSetSurface::new(cx.model.clone(), f, spec.level());
    let origin = surface.project(&spec.origin(cx.model.dim())).map_err(err)?;
    let family = LevelSetFamily::new(surface.clone(), origin.as_slice(), spec.sign).map_err(err)?;
    let (x, n) = family.frame(&vec![0.0; family.param_dim()]).map_err(err)?;
    let spectrum = surface
        .shape_operator(x.as_slice(), &n)
        .and_then(|op| op.spectrum(1e-7))
        .map_err(err)?;
    Ok((surface, family, spectrum))
}

fn spectrum_json(s: &CurvatureSpectrum) -> Value {
    json!({"values": s.values, "multiplicities": s.multiplicities})
}

fn focal_detect(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let p = &check.params;
    let (_, family, spectrum) = surface_family(cx, check)?;
    let window = (p.s_min.unwrap_or(0.02), p.s_max.unwrap_or(3.0));
    let c = cx.curvature(p);
    let found = detect_focal_numeric(&family, window, &GeodesicOptions::tight()).map_err(err)?;
    let mut predicted: Vec<(f64, usize)> = spectrum
        .values
        .iter()
        .zip(&spectrum.multiplicities)
        .flat_map(|(&l, &m)| focal_distances(c, l, window).into_iter().map(move |s| (s, m)))
        .collect();
    predicted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let compare = |expected: &[(f64, usize)]| -> Vec<f64> {
        if expected.len() != found.len() {
            return vec![f64::INFINITY];
        }
        expected
            .iter()
            .zip(&found)
            .map(|(&(s, m), got)| if m == got.multiplicity { (s - got.s).abs() } else { f64::INFINITY })
            .collect()
    };
    let mut samples = compare(&predicted);
    if let Some(explicit) = &p.focal {
        let explicit: Vec<(f64, usize)> = explicit.iter().map(|e| (e.s, e.multiplicity)).collect();
        let extra = compare(&explicit);
        if samples.len() == extra.len() {
            samples = samples.iter().zip(&extra).map(|(a, b)| a.max(*b)).collect();
        } else {
            samples.push(f64::INFINITY);
        }
    }
    let found_json: Vec<Value> = found.iter().map(|f| json!({"s": f.s, "multiplicity": f.multiplicity, "ratio": f.ratio})).collect();
    let predicted_json: Vec<Value> = predicted.iter().map(|(s, m)| json!({"s": s, "multiplicity": m})).collect();
    let residual = if samples.is_empty() { 0.0 } else { max(&samples) };
    Ok(Outcome {
        residual,
        samples,
        detail: BTreeMap::new(),
    }
    .with("base_spectrum", spectrum_json(&spectrum))
    .with("found", Value::Array(found_json))
    .with("predicted", Value::Array(predicted_json))
    .with("window", json!([window.0, window.1])))
}

fn tube_curvature(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let p = &check.params;
    let (_, family, spectrum) = surface_family(cx, check)?;
    let c = cx.curvature(p);
    let points = p.points.unwrap_or(20);
    let s_max = p.s_max.unwrap_or(0.3);
    let s_min = p.s_min.unwrap_or(0.0);
    let grid: Vec<f64> = (1..=points).map(|k| s_min + (s_max - s_min) * k as f64 / points as f64).collect();
    let p0 = vec![0.0; family.param_dim()];
    let opts = GeodesicOptions::tight();
    let samples = par_eval(&grid, |&s| {
        let predicted = tube_principal_curvatures(c, &spectrum, s, 1)?.expanded();
        let tube = TubeFamily::new(&family, s, &opts)?;
        let measured = family_shape_operator(&tube, &p0, 1e-4)?.eigenvalues();
        Ok(predicted.iter().zip(&measured).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    })?;
    Ok(Outcome::from_samples(samples)
        .with("base_spectrum", spectrum_json(&spectrum))
        .with("grid", json!(grid)))
}

fn torsion(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let nav = is_randers(&cx.model).ok_or("not a Randers metric")?;
    let audit = nav
        .torsion_audit(&cx.model, check.count, check.seed, &VolumeForm::bh())
        .map_err(err)?;
    let samples: Vec<f64> = if check.name == CheckName::TorsionAudit {
        audit.samples.iter().map(|s| s.torsion_norm).collect()
    } else {
        audit.samples.iter().map(|s| s.homothetic_residual).collect()
    };
    Ok(Outcome::from_samples(samples)
        .with("killing", json!(format!("{:?}", audit.classification.verdict)))
        .with("torsion_sup", json!(audit.torsion_sup))
        .with("c_prime", json!(audit.c_prime))
        .with("c_prime_spread", json!(audit.c_prime_spread))
        .with("homothetic_residual", json!(audit.homothetic_residual))
        .with("opposite_sign_residual", json!(audit.opposite_sign_residual)))
}

fn s_constant(cx: &Context, count: usize, seed: u64) -> CheckResult {
    let pairs = cx.pairs(count, seed);
    let ratios = par_eval(&pairs, |(x, y)| Ok(cx.model.s_curvature(&VolumeForm::bh(), x, y)? / cx.model.eval_f(x, y)?))?;
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let dim = cx.model.dim() as f64;
    Ok(Outcome {
        residual: hi - lo,
        samples: ratios.iter().map(|r| r - mean).collect(),
        detail: BTreeMap::new(),
    }
    .with("s_over_f", json!([lo, hi]))
    .with("c_prime", json!(mean / (dim + 1.0))))
}

fn cartan_measured(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let spec = check.surface.as_ref().ok_or("no surface")?;
    let f = spec.field(&cx.spec)?;
    let level = spec.level();
    let c = cx.curvature(&check.params);
    let surface = LevelSetSurface::new(cx.model.clone(), f.clone(), level);
    let points = sample_level_set(&cx.model, &f, level, check.count, check.seed).map_err(err)?;
    let normal = surface.normal_field(spec.sign);
    let rows = par_eval(&points, |x| {
        let n = finsler_core::field::VectorField::value(&normal, x.as_slice())?;
        let spectrum = surface.principal_curvatures(x.as_slice(), &n, 1e-7)?;
        Ok((spectrum.distinct(), cartan_residuals(c, &spectrum)?.max_abs()))
    })?;
    let samples: Vec<f64> = rows
        .iter()
        .map(|&(g, r)| match check.params.distinct {
            Some(want) if want != g => f64::INFINITY,
            _ => r,
        })
        .collect();
    let counts: Vec<usize> = rows.iter().map(|r| r.0).collect();
    Ok(Outcome::from_samples(samples)
        .with("c", json!(c))
        .with("distinct", json!(counts.iter().min().zip(counts.iter().max()).map(|(a, b)| [a, b]))))
}

/// λ_i = √c cot θ_i with θ_i = θ₀ + iπ/g.
fn synthetic(c: f64, g: usize, shift: f64) -> Vec<f64> {
    let k = c.sqrt();
    (0..g)
        .map(|i| {
            let mut t = 0.3 + i as f64 * PI / g as f64;
            if i + 1 == g {
                t += shift;
            }
            k / t.tan()
        })
        .collect()
}

/// Multiplicity patterns allowed by m_i = m_{i+2}: constant, and alternating for even g.
fn conforming_patterns(g: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![1; g], vec![3; g]];
    if g % 2 == 0 {
        out.push((0..g).map(|i| if i % 2 == 0 { 2 } else { 5 }).collect());
    }
    out
}

fn synthetic_cases(c: f64, max_g: usize, shift: f64) -> Vec<(usize, CurvatureSpectrum)> {
    (1..=max_g)
        .flat_map(|g| {
            let values = synthetic(c, g, shift);
            conforming_patterns(g)
                .into_iter()
                .map(move |m| (g, CurvatureSpectrum::new(values.clone(), m)))
        })
        .collect()
}

fn cartan_synthetic(p: &CheckParams) -> CheckResult {
    let c = p.expected.unwrap_or(1.0);
    let cases = synthetic_cases(c, p.max_g.unwrap_or(6), 0.0);
    let samples = cases
        .iter()
        .map(|(_, s)| cartan_residuals(c, s).map(|r| r.max_abs()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(Outcome::from_samples(samples).with("c", json!(c)).with("spectra", json!(cases.len())))
}

fn cartan_detect(p: &CheckParams) -> CheckResult {
    let c = p.expected.unwrap_or(1.0);
    let floor = p.floor.unwrap_or(1e-3);
    let shift = p.shift.unwrap_or(0.05);
    let cases: Vec<_> = synthetic_cases(c, p.max_g.unwrap_or(6), shift)
        .into_iter()
        .filter(|(g, _)| *g >= 2)
        .collect();
    let detected = cases
        .iter()
        .map(|(_, s)| cartan_residuals(c, s).map(|r| r.max_abs()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let weakest = detected.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        residual: (floor - weakest).max(0.0),
        samples: detected,
        detail: BTreeMap::new(),
    }
    .with("floor", json!(floor))
    .with("shift", json!(shift))
    .with("weakest_detection", json!(weakest)))
}

fn spacing(p: &CheckParams) -> CheckResult {
    let c = p.expected.unwrap_or(1.0);
    let samples = synthetic_cases(c, p.max_g.unwrap_or(6), 0.0)
        .iter()
        .map(|(_, s)| check_spacing(c, s).map(|sp| sp.deviation))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(Outcome::from_samples(samples))
}

/// Multiplicity patterns and whether m_i = m_{i+2 mod g} holds.
pub const MULTIPLICITY_TABLE: &[(&[usize], bool)] = &[
    (&[1], true),
    (&[4, 7], true),
    (&[2, 2, 2], true),
    (&[1, 2, 1], false),
    (&[1, 1, 2], false),
    (&[2, 3, 2, 3], true),
    (&[1, 1, 1, 1], true),
    (&[2, 3, 3, 2], false),
    (&[1, 2, 2, 2], false),
    (&[1, 1, 1, 1, 1], true),
    (&[1, 1, 1, 1, 2], false),
    (&[1, 2, 1, 2, 1, 2], true),
    (&[4, 5, 4, 5, 4, 5], true),
    (&[1, 2, 1, 2, 1, 1], false),
    (&[1, 1, 2, 2, 1, 1], false),
];

fn multiplicity_table() -> CheckResult {
    let samples: Vec<f64> = MULTIPLICITY_TABLE
        .iter()
        .map(|(m, want)| if check_multiplicity_pattern(m) == *want { 0.0 } else { 1.0 })
        .collect();
    Ok(Outcome::from_samples(samples).with("rows", json!(MULTIPLICITY_TABLE.len())))
}

fn count_bound() -> CheckResult {
    let mut rows: Vec<(f64, CurvatureSpectrum, bool)> = Vec::new();
    for c in [0.0, -0.25, -1.0] {
        for g in 1..=5usize {
            let values: Vec<f64> = (0..g).map(|i| 1.5 - i as f64).collect();
            rows.push((c, CurvatureSpectrum::new(values, vec![1; g]), g <= 2));
        }
    }
    for (_, s) in synthetic_cases(1.0, 4, 0.0) {
        rows.push((1.0, s, true));
    }
    let samples: Vec<f64> = rows
        .iter()
        .map(|(c, s, want)| if count_bound_check(*c, s).passed == *want { 0.0 } else { 1.0 })
        .collect();
    Ok(Outcome::from_samples(samples).with("rows", json!(rows.len())))
}

fn random_covectors(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| r.gen_range(-1.0..1.0)))
        .collect()
}

fn minimality(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let (_, family, _) = surface_family(cx, check)?;
    let s = check.params.s.unwrap_or_else(|| check.surface.as_ref().unwrap().level());
    let covectors = random_covectors(cx.model.dim(), check.count, check.seed);
    let audit = focal_minimality_audit(&family, s, &covectors, check.tolerance, &GeodesicOptions::tight()).map_err(err)?;
    Ok(Outcome::from_samples(audit.traces.clone())
        .with("s", json!(s))
        .with("normals", json!(audit.traces.len())))
}

fn minimality_control(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let dim = cx.model.dim();
    let circle = CirclePatch {
        center: DVector::zeros(dim),
        radius: check.params.radius.unwrap_or(0.5),
    };
    let floor = check.params.floor.unwrap_or(1e-2);
    let covectors = random_covectors(dim, check.count, check.seed);
    let audit = minimality_audit(&cx.model, &circle, &covectors, 0.0).map_err(err)?;
    Ok(Outcome {
        residual: (floor - audit.max_trace).max(0.0),
        samples: audit.traces.clone(),
        detail: BTreeMap::new(),
    }
    .with("floor", json!(floor))
    .with("max_trace", json!(audit.max_trace)))
}

fn isoparametric(cx: &Context, check: &ResolvedCheck) -> CheckResult {
    let p = &check.params;
    let dim = cx.model.dim();
    let f = match p.function.ok_or("no function")? {
        FunctionSpec::Coordinate => ScalarField::Coordinate(0),
        FunctionSpec::Radial => ScalarField::EuclideanNorm,
        FunctionSpec::Cylinder => ScalarField::Cylinder,
        FunctionSpec::Nonexample => ScalarField::Nonexample,
    };
    let levels = p.levels.clone().unwrap_or_default();
    let report = verify_isoparametric(&cx.model, &VolumeForm::bh(), &f, &levels, check.count, check.tolerance, check.seed)
        .map_err(err)?;
    let verdict = report.isoparametric.unwrap_or(false);
    let want = p.verdict.unwrap_or(true);
    let a_table: Vec<[f64; 2]> = report.a_table().into_iter().map(|(t, a)| [t, a]).collect();
    let b_table: Option<Vec<[f64; 2]>> = report.b_table().map(|b| b.into_iter().map(|(t, v)| [t, v]).collect());
    let mut samples = vec![if verdict == want { 0.0 } else { f64::INFINITY }];
    if let (Some(form), Some(b)) = (p.b_closed_form, report.b_table()) {
        for (t, v) in b {
            let exact = match form {
                BClosedForm::Zero => 0.0,
                BClosedForm::Radial => (dim as f64 - 1.0) / t,
            };
            samples.push((v - exact).abs());
        }
    }
    Ok(Outcome::from_samples(samples)
        .with("transnormal", json!(report.transnormal))
        .with("isoparametric", json!(report.isoparametric))
        .with("expected_verdict", json!(want))
        .with("a", json!(a_table))
        .with("b", json!(b_table)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_through_serde() {
        for name in CheckName::ALL {
            let s = serde_json::to_string(name).unwrap();
            assert_eq!(s, format!("\"{}\"", name.as_str()));
            assert_eq!(&serde_json::from_str::<CheckName>(&s).unwrap(), name);
        }
    }

    #[test]
    fn synthetic_spectra_are_evenly_spaced() {
        for (g, s) in synthetic_cases(1.0, 6, 0.0) {
            assert_eq!(s.distinct(), g);
            assert!(check_spacing(1.0, &s).unwrap().deviation <= 1e-12);
        }
    }

    #[test]
    fn nan_samples_do_not_pass() {
        assert!(max(&[0.0, f64::NAN, 1.0]).is_nan());
    }
}
