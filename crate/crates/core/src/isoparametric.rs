//! Transnormal / isoparametric verification, Cartan-type residuals,
//! spacing and multiplicity validators, and the focal minimality audit.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};
use crate::field::ScalarField;
use crate::focal::{check_distinct, TubeFamily};
use crate::geodesic::GeodesicOptions;
use crate::hypersurface::{
    family_shape_operator, CurvatureSpectrum, LevelSetSurface, NormalFamily, Patch,
    PatchNormalFamily,
};
use crate::metric::MetricModel;
use crate::volume::VolumeForm;

#[derive(Clone, Debug, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Spread {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min,
            max,
        }
    }

    /// (max − min) / max(|mean|, 1).
    pub fn relative(&self) -> f64 {
        (self.max - self.min) / self.mean.abs().max(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct LevelStats {
    pub level: f64,
    pub samples: usize,
    /// F(∇f) over the samples; its mean is ã(t).
    pub gradient_norm: Spread,
    /// Δf over the samples; its mean is b̃(t).
    pub laplacian: Option<Spread>,
}

#[derive(Clone, Debug)]
pub struct IsoparametricReport {
    pub levels: Vec<LevelStats>,
    pub transnormal: bool,
    pub isoparametric: Option<bool>,
    pub tol: f64,
}

impl IsoparametricReport {
    /// (t, ã(t)).
    pub fn a_table(&self) -> Vec<(f64, f64)> {
        self.levels.iter().map(|l| (l.level, l.gradient_norm.mean)).collect()
    }

    /// (t, b̃(t)), present once the Laplacian was evaluated.
    pub fn b_table(&self) -> Option<Vec<(f64, f64)>> {
        self.levels
            .iter()
            .map(|l| l.laplacian.as_ref().map(|s| (l.level, s.mean)))
            .collect()
    }
}

/// Random chart points projected onto f = level, each regular.
pub fn sample_level_set(
    model: &MetricModel,
    f: &ScalarField,
    level: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let surface = LevelSetSurface::new(model.clone(), f.clone(), level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count + 100 {
            return Err(GeometryError::IrregularPoint(format!(
                "could not sample the level set f = {level}"
            )));
        }
        let guess = model.random_point(0.8, &mut rng);
        let Ok(x) = surface.project(&guess) else {
            continue;
        };
        if surface.check_point(x.as_slice()).is_ok() {
            out.push(x);
        }
    }
    Ok(out)
}

fn level_samples(
    model: &MetricModel,
    f: &ScalarField,
    levels: &[f64],
    samples_per_level: usize,
    seed: u64,
) -> Result<Vec<Vec<DVector<f64>>>> {
    levels
        .iter()
        .enumerate()
        .map(|(i, &t)| sample_level_set(model, f, t, samples_per_level, seed.wrapping_add(i as u64)))
        .collect()
}

pub fn verify_transnormal(
    model: &MetricModel,
    f: &ScalarField,
    levels: &[f64],
    samples_per_level: usize,
    tol: f64,
    seed: u64,
) -> Result<IsoparametricReport> {
    let samples = level_samples(model, f, levels, samples_per_level, seed)?;
    let mut stats = Vec::with_capacity(levels.len());
    for (&t, pts) in levels.iter().zip(&samples) {
        let norms = pts
            .iter()
            .map(|x| model.dual_norm(x.as_slice(), f.differential(x.as_slice()).as_slice()))
            .collect::<Result<Vec<_>>>()?;
        stats.push(LevelStats {
            level: t,
            samples: pts.len(),
            gradient_norm: Spread::of(&norms),
            laplacian: None,
        });
    }
    let transnormal = stats.iter().all(|s| s.gradient_norm.relative() <= tol);
    Ok(IsoparametricReport {
        levels: stats,
        transnormal,
        isoparametric: None,
        tol,
    })
}

pub fn verify_isoparametric(
    model: &MetricModel,
    vol: &VolumeForm,
    f: &ScalarField,
    levels: &[f64],
    samples_per_level: usize,
    tol: f64,
    seed: u64,
) -> Result<IsoparametricReport> {
    let mut report = verify_transnormal(model, f, levels, samples_per_level, tol, seed)?;
    let samples = level_samples(model, f, levels, samples_per_level, seed)?;
    for (stats, pts) in report.levels.iter_mut().zip(&samples) {
        let laps = pts
            .iter()
            .map(|x| model.laplacian(vol, f, x.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        stats.laplacian = Some(Spread::of(&laps));
    }
    let laplacian_ok = report
        .levels
        .iter()
        .all(|s| s.laplacian.as_ref().is_some_and(|l| l.relative() <= tol));
    report.isoparametric = Some(report.transnormal && laplacian_ok);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartanResidual {
    pub c: f64,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl CartanResidual {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// r_i = Σ_{j≠i} m_j (c + λ_iλ_j)/(λ_i − λ_j).
pub fn cartan_residuals(c: f64, spectrum: &CurvatureSpectrum) -> Result<CartanResidual> {
    check_distinct(&spectrum.values)?;
    let lam = &spectrum.values;
    let residuals = (0..lam.len())
        .map(|i| {
            (0..lam.len())
                .filter(|&j| j != i)
                .map(|j| {
                    spectrum.multiplicities[j] as f64 * (c + lam[i] * lam[j]) / (lam[i] - lam[j])
                })
                .sum()
        })
        .collect();
    Ok(CartanResidual {
        c,
        values: lam.clone(),
        multiplicities: spectrum.multiplicities.clone(),
        residuals,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingCheck {
    /// θ_i = arccot(λ_i/√c), ascending.
    pub thetas: Vec<f64>,
    /// Multiplicities in θ order.
    pub multiplicities: Vec<usize>,
    /// max_i |θ_i − θ_1 − (i−1)π/g|.
    pub deviation: f64,
}

pub fn check_spacing(c: f64, spectrum: &CurvatureSpectrum) -> Result<SpacingCheck> {
    if !(c > 0.0) {
        return Err(GeometryError::NotPositiveCurvature(c));
    }
    let k = c.sqrt();
    let mut pairs: Vec<(f64, usize)> = spectrum
        .values
        .iter()
        .cloned()
        .zip(spectrum.multiplicities.iter().cloned())
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let thetas: Vec<f64> = pairs.iter().map(|(l, _)| PI / 2.0 - (l / k).atan()).collect();
    let g = thetas.len() as f64;
    let deviation = thetas
        .iter()
        .enumerate()
        .map(|(i, t)| (t - thetas[0] - i as f64 * PI / g).abs())
        .fold(0.0, f64::max);
    Ok(SpacingCheck {
        thetas,
        multiplicities: pairs.iter().map(|(_, m)| *m).collect(),
        deviation,
    })
}

/// m_i = m_{i+2 mod g} for every i.
pub fn check_multiplicity_pattern(m: &[usize]) -> bool {
    let g = m.len();
    (0..g).all(|i| m[i] == m[(i + 2) % g])
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundVerdict {
    pub passed: bool,
    pub reason: String,
}

/// c ≤ 0: at most two distinct curvatures; c > 0: spacing and multiplicities.
pub fn count_bound_check(c: f64, spectrum: &CurvatureSpectrum) -> BoundVerdict {
    let g = spectrum.distinct();
    if c <= 0.0 {
        return BoundVerdict {
            passed: g <= 2,
            reason: format!("c = {c}, g = {g}, bound g <= 2"),
        };
    }
    match check_spacing(c, spectrum) {
        Ok(sp) => {
            let pattern = check_multiplicity_pattern(&sp.multiplicities);
            BoundVerdict {
                passed: sp.deviation <= 1e-9 && pattern,
                reason: format!(
                    "spacing deviation {:e}, multiplicity pattern {}",
                    sp.deviation,
                    if pattern { "ok" } else { "violated" }
                ),
            }
        }
        Err(e) => BoundVerdict {
            passed: false,
            reason: e.to_string(),
        },
    }
}

/// The focal submanifold swept by φ_s near the family centre, parametrized
/// along the right singular vectors of dφ_s with nonzero singular value.
pub struct FocalPatch<'a> {
    tube: TubeFamily<'a>,
    directions: Vec<DVector<f64>>,
}

impl<'a> FocalPatch<'a> {
    pub fn new(family: &'a dyn NormalFamily, s: f64, opts: &GeodesicOptions) -> Result<Self> {
        let tube = TubeFamily::new(family, s, opts)?;
        let k = family.param_dim();
        let h = 1e-4;
        let mut cols = Vec::with_capacity(k);
        for a in 0..k {
            let mut pp = vec![0.0; k];
            let mut pm = vec![0.0; k];
            pp[a] = h;
            pm[a] = -h;
            cols.push((tube.frame(&pp)?.0 - tube.frame(&pm)?.0) / (2.0 * h));
        }
        let svd = SVD::new(DMatrix::from_columns(&cols), false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| GeometryError::RankEstimationFailure("SVD failed".into()))?;
        let lead = svd.singular_values.max();
        let mut directions = Vec::new();
        for (i, sv) in svd.singular_values.iter().enumerate() {
            if *sv > 1e-6 * lead && lead > 1e-12 {
                if *sv < 1e-3 * lead {
                    return Err(GeometryError::RankEstimationFailure(format!(
                        "ambiguous singular value {sv:e} against {lead:e}"
                    )));
                }
                directions.push(v_t.row(i).transpose());
            }
        }
        Ok(FocalPatch { tube, directions })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    pub fn model(&self) -> &MetricModel {
        self.tube.model()
    }
}

impl Patch for FocalPatch<'_> {
    fn param_dim(&self) -> usize {
        self.directions.len()
    }

    fn point(&self, u: &[f64]) -> DVector<f64> {
        let k = self.tube.param_dim();
        let p = self
            .directions
            .iter()
            .zip(u)
            .fold(DVector::zeros(k), |acc, (d, t)| acc + d * *t);
        self.tube
            .frame(p.as_slice())
            .expect("focal patch evaluated near its centre")
            .0
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let h = 1e-4;
        let m = self.param_dim();
        let cols: Vec<DVector<f64>> = (0..m)
            .map(|a| {
                let mut up = u.to_vec();
                let mut um = u.to_vec();
                up[a] += h;
                um[a] -= h;
                (self.point(&up) - self.point(&um)) / (2.0 * h)
            })
            .collect();
        DMatrix::from_columns(&cols)
    }
}

#[derive(Clone, Debug)]
pub struct MinimalityAudit {
    /// |tr A_η| per sampled normal.
    pub traces: Vec<f64>,
    pub max_trace: f64,
    pub passed: bool,
}

/// tr A_η of a submanifold patch for each covector ν, with η = ℒ⁻¹(ν)/F*(ν)
/// after projecting ν onto the annihilator of the tangent space.
pub fn minimality_audit<P: Patch + Clone>(
    model: &MetricModel,
    patch: &P,
    covectors: &[DVector<f64>],
    tol: f64,
) -> Result<MinimalityAudit> {
    let m = patch.param_dim();
    let mut traces = Vec::with_capacity(covectors.len());
    if m > 0 {
        for nu in covectors {
            let family = PatchNormalFamily::new(model.clone(), patch.clone(), &vec![0.0; m], nu, false)?;
            let op = family_shape_operator(&family, &vec![0.0; m], 1e-3)?;
            traces.push(op.trace().abs());
        }
    }
    let max_trace = traces.iter().cloned().fold(0.0, f64::max);
    Ok(MinimalityAudit {
        passed: max_trace <= tol,
        traces,
        max_trace,
    })
}

/// Audit of the focal submanifold at distance s over a family.
pub fn focal_minimality_audit(
    family: &dyn NormalFamily,
    s: f64,
    covectors: &[DVector<f64>],
    tol: f64,
    opts: &GeodesicOptions,
) -> Result<MinimalityAudit> {
    let patch = FocalPatch::new(family, s, opts)?;
    let model = family.model().clone();
    let m = patch.param_dim();
    let mut traces = Vec::with_capacity(covectors.len());
    if m > 0 {
        let patch_ref = &patch;
        for nu in covectors {
            let fam = PatchNormalFamily::new(model.clone(), PatchRef(patch_ref), &vec![0.0; m], nu, false)?;
            let op = family_shape_operator(&fam, &vec![0.0; m], 1e-3)?;
            traces.push(op.trace().abs());
        }
    }
    let max_trace = traces.iter().cloned().fold(0.0, f64::max);
    Ok(MinimalityAudit {
        passed: max_trace <= tol,
        traces,
        max_trace,
    })
}

struct PatchRef<'a, P: Patch>(&'a P);

impl<P: Patch> Patch for PatchRef<'_, P> {
    fn param_dim(&self) -> usize {
        self.0.param_dim()
    }

    fn point(&self, p: &[f64]) -> DVector<f64> {
        self.0.point(p)
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        self.0.jacobian(p)
    }
}
