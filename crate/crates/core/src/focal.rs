//! Space-form kinematics of normal geodesics: s_c functions, focal
//! distances, tubes, tube curvatures and focal-submanifold curvatures.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{GeometryError, Result};
use crate::geodesic::{integrate_geodesic, GeodesicOptions, GeodesicPath};
use crate::hypersurface::{CurvatureSpectrum, NormalFamily};
use crate::metric::MetricModel;

/// s_c solves s″ + c s = 0 with s(0) = 0, s′(0) = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SCFunction {
    pub c: f64,
}

impl SCFunction {
    pub fn new(c: f64) -> Self {
        SCFunction { c }
    }

    /// (s_c, s_c′, s_c″) at s.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let c = self.c;
        if c > 0.0 {
            let k = c.sqrt();
            let (sn, cs) = (k * s).sin_cos();
            (sn / k, cs, -k * sn)
        } else if c < 0.0 {
            let k = (-c).sqrt();
            let (sh, ch) = ((k * s).sinh(), (k * s).cosh());
            (sh / k, ch, k * sh)
        } else {
            (s, 1.0, 0.0)
        }
    }
}

pub fn sc_eval(c: f64, s: f64) -> (f64, f64, f64) {
    SCFunction::new(c).eval(s)
}

/// All s in the open window with s_c′(s)/s_c(s) = λ.
pub fn focal_distances(c: f64, lambda: f64, window: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = window;
    let inside = |s: f64| s > lo && s < hi;
    let mut out = Vec::new();
    if c > 0.0 {
        let k = c.sqrt();
        // arccot on (0, π)
        let theta = PI / 2.0 - (lambda / k).atan();
        let period = PI / k;
        let first = ((lo - theta / k) / period).floor() as i64;
        let last = ((hi - theta / k) / period).ceil() as i64;
        for j in first..=last {
            let s = theta / k + j as f64 * period;
            if inside(s) {
                out.push(s);
            }
        }
    } else if c == 0.0 {
        if lambda != 0.0 && inside(1.0 / lambda) {
            out.push(1.0 / lambda);
        }
    } else {
        let k = (-c).sqrt();
        let z = lambda / k;
        if z.abs() > 1.0 {
            // arccoth z = ½ ln((z+1)/(z−1))
            let s = 0.5 * ((z + 1.0) / (z - 1.0)).ln() / k;
            if inside(s) {
                out.push(s);
            }
        }
    }
    out
}

/// Principal curvatures of the tube at distance s from those of the base.
pub fn tube_principal_curvatures(
    c: f64,
    spectrum: &CurvatureSpectrum,
    s: f64,
    codim: usize,
) -> Result<CurvatureSpectrum> {
    let (sc, scp, scpp) = sc_eval(c, s);
    let mut eigs = Vec::new();
    for (&lam, &m) in spectrum.values.iter().zip(&spectrum.multiplicities) {
        let denom = scp - lam * sc;
        if denom.abs() <= 1e-8 {
            return Err(GeometryError::FocalSingularity(denom.abs()));
        }
        let v = (-scpp + lam * scp) / denom;
        eigs.extend(std::iter::repeat(v).take(m));
    }
    if codim > 1 {
        if sc.abs() <= 1e-8 {
            return Err(GeometryError::FocalSingularity(sc.abs()));
        }
        eigs.extend(std::iter::repeat(-scp / sc).take(codim - 1));
    }
    Ok(CurvatureSpectrum::from_eigenvalues(
        &eigs,
        spectrum.cluster_tol.max(1e-12),
    ))
}

/// (c + λ_iλ_j)/(λ_i − λ_j) with multiplicity m_j for every j ≠ i.
pub fn focal_submanifold_curvatures(
    c: f64,
    i: usize,
    spectrum: &CurvatureSpectrum,
) -> Result<Vec<(f64, usize)>> {
    check_distinct(&spectrum.values)?;
    let li = spectrum.values[i];
    Ok(spectrum
        .values
        .iter()
        .zip(&spectrum.multiplicities)
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, (&lj, &mj))| ((c + li * lj) / (li - lj), mj))
        .collect())
}

pub(crate) fn check_distinct(values: &[f64]) -> Result<()> {
    for (a, x) in values.iter().enumerate() {
        for y in &values[a + 1..] {
            if (x - y).abs() <= 1e-9 {
                return Err(GeometryError::DuplicateCurvature((x - y).abs()));
            }
        }
    }
    Ok(())
}

/// The tube (parallel hypersurface) at distance s over a normal family.
pub struct TubeFamily<'a> {
    pub inner: &'a dyn NormalFamily,
    pub s: f64,
    opts: GeodesicOptions,
}

impl<'a> TubeFamily<'a> {
    /// Geodesics of the family replay the step mesh of the centre geodesic.
    pub fn new(inner: &'a dyn NormalFamily, s: f64, opts: &GeodesicOptions) -> Result<Self> {
        let model = inner.model();
        let (x, n) = inner.frame(&vec![0.0; inner.param_dim()])?;
        let mut replay = opts.clone();
        if s != 0.0 {
            let path = integrate_geodesic(model, x.as_slice(), n.as_slice(), s, opts)?;
            replay.mesh = Some(path.mesh());
        }
        Ok(TubeFamily {
            inner,
            s,
            opts: replay,
        })
    }
}

impl NormalFamily for TubeFamily<'_> {
    fn model(&self) -> &MetricModel {
        self.inner.model()
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn frame(&self, p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let (x, n) = self.inner.frame(p)?;
        if self.s == 0.0 {
            return Ok((x, n));
        }
        let path = integrate_geodesic(self.model(), x.as_slice(), n.as_slice(), self.s, &self.opts)?;
        Ok((path.end_position(), path.end_velocity()))
    }
}

/// φ_s at the given family parameters. A differential whose smallest
/// singular value falls below 1e-6 of the base surface's largest one is
/// reported as a focal singularity.
pub fn tube_map(
    family: &dyn NormalFamily,
    s: f64,
    params: &[Vec<f64>],
    opts: &GeodesicOptions,
) -> Result<Vec<DVector<f64>>> {
    let tube = TubeFamily::new(family, s, opts)?;
    let h = 1e-4;
    let differential = |fam: &dyn NormalFamily, p: &[f64]| -> Result<Vec<f64>> {
        let cols = (0..fam.param_dim())
            .map(|a| {
                let mut pp = p.to_vec();
                let mut pm = p.to_vec();
                pp[a] += h;
                pm[a] -= h;
                Ok((fam.frame(&pp)?.0 - fam.frame(&pm)?.0) / (2.0 * h))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SVD::new(DMatrix::from_columns(&cols), false, false)
            .singular_values
            .iter()
            .cloned()
            .collect())
    };
    params
        .iter()
        .map(|p| {
            let (x, _) = tube.frame(p)?;
            let reference = differential(family, p)?.into_iter().fold(0.0, f64::max);
            let least = differential(&tube, p)?.into_iter().fold(f64::INFINITY, f64::min);
            if least <= 1e-6 * reference {
                return Err(GeometryError::FocalSingularity(least / reference));
            }
            Ok(x)
        })
        .collect()
}

/// Normal geodesics of a family at p = 0 and at ±h along each parameter,
/// integrated once on a shared mesh; dφ_s is read off the dense output.
pub struct FamilyGeodesics {
    pub center: GeodesicPath,
    plus: Vec<GeodesicPath>,
    minus: Vec<GeodesicPath>,
    step: f64,
}

impl FamilyGeodesics {
    pub fn new(family: &dyn NormalFamily, s_max: f64, step: f64, opts: &GeodesicOptions) -> Result<Self> {
        let model = family.model();
        let k = family.param_dim();
        let zero = vec![0.0; k];
        let (x, n) = family.frame(&zero)?;
        let center = integrate_geodesic(model, x.as_slice(), n.as_slice(), s_max, opts)?;
        let replay = GeodesicOptions {
            mesh: Some(center.mesh()),
            ..opts.clone()
        };
        let mut plus = Vec::with_capacity(k);
        let mut minus = Vec::with_capacity(k);
        for a in 0..k {
            for (sign, out) in [(1.0, &mut plus), (-1.0, &mut minus)] {
                let mut p = zero.clone();
                p[a] = sign * step;
                let (x, n) = family.frame(&p)?;
                out.push(integrate_geodesic(model, x.as_slice(), n.as_slice(), s_max, &replay)?);
            }
        }
        Ok(FamilyGeodesics {
            center,
            plus,
            minus,
            step,
        })
    }

    /// Columns ∂φ_s/∂p_a.
    pub fn differential(&self, s: f64) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| (p.position(s) - m.position(s)) / (2.0 * self.step))
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// Singular values of dφ_s, descending.
    pub fn singular_values(&self, s: f64) -> Vec<f64> {
        let mut sv: Vec<f64> = SVD::new(self.differential(s), false, false)
            .singular_values
            .iter()
            .cloned()
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Largest singular value of dφ_0, the scale for rank decisions.
    fn reference(&self) -> f64 {
        self.singular_values(0.0)[0]
    }

    fn ratio(&self, s: f64, reference: f64) -> f64 {
        self.singular_values(s).last().copied().unwrap_or(0.0) / reference
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FocalPoint {
    pub s: f64,
    pub multiplicity: usize,
    /// σ_min of dφ_s at the refined parameter over σ_max of dφ_0.
    pub ratio: f64,
}

const ZERO_RATIO: f64 = 1e-6;

/// Parameters in the window where dφ_s at the family centre degenerates.
pub fn detect_focal_numeric(
    family: &dyn NormalFamily,
    window: (f64, f64),
    opts: &GeodesicOptions,
) -> Result<Vec<FocalPoint>> {
    let geos = FamilyGeodesics::new(family, window.1, 1e-4, opts)?;
    detect_focal_in(&geos, window)
}

pub fn detect_focal_in(geos: &FamilyGeodesics, window: (f64, f64)) -> Result<Vec<FocalPoint>> {
    let (lo, hi) = window;
    let reference = geos.reference();
    let grid = 400;
    let ss: Vec<f64> = (0..=grid)
        .map(|i| lo + (hi - lo) * i as f64 / grid as f64)
        .collect();
    let rs: Vec<f64> = ss.iter().map(|&s| geos.ratio(s, reference)).collect();
    let mut found = Vec::new();
    for i in 1..grid {
        if !(rs[i] < rs[i - 1] && rs[i] <= rs[i + 1]) {
            continue;
        }
        let s = golden_section(|s| geos.ratio(s, reference), ss[i - 1], ss[i + 1], 1e-10);
        let sv = geos.singular_values(s);
        let ratio = sv.last().copied().unwrap_or(0.0) / reference;
        if ratio <= ZERO_RATIO {
            let multiplicity = sv.iter().filter(|v| **v <= ZERO_RATIO * reference).count();
            found.push(FocalPoint {
                s,
                multiplicity,
                ratio,
            });
        }
    }
    Ok(found)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sc_branches() {
        assert_eq!(sc_eval(0.0, 2.0), (2.0, 1.0, 0.0));
        let (a, b, c) = sc_eval(1.0, PI / 2.0);
        assert!((a - 1.0).abs() < 1e-15 && b.abs() < 1e-15 && (c + 1.0).abs() < 1e-15);
        let (a, b, c) = sc_eval(-1.0, 1.0);
        assert_eq!((a, b, c), (1f64.sinh(), 1f64.cosh(), 1f64.sinh()));
    }

    #[test]
    fn focal_distance_examples() {
        assert_eq!(focal_distances(0.0, 2.0, (0.0, 10.0)), vec![0.5]);
        let s = focal_distances(1.0, 1.0, (0.0, 2.0 * PI));
        assert_eq!(s.len(), 2);
        assert!((s[0] - PI / 4.0).abs() < 1e-15 && (s[1] - 5.0 * PI / 4.0).abs() < 1e-14);
        assert!(focal_distances(-1.0, 0.5, (0.0, 100.0)).is_empty());
    }

    #[test]
    fn tube_curvature_examples() {
        let base = CurvatureSpectrum::new(vec![1.0], vec![2]);
        let t = tube_principal_curvatures(0.0, &base, 0.5, 1).unwrap();
        assert!((t.values[0] - 2.0).abs() < 1e-15);
        let base = CurvatureSpectrum::new(vec![1.0 / (PI / 6.0).tan()], vec![1]);
        let t = tube_principal_curvatures(1.0, &base, PI / 12.0, 1).unwrap();
        assert!((t.values[0] - (2.0 + 3f64.sqrt())).abs() < 1e-12);
        let base = CurvatureSpectrum::new(vec![0.0], vec![1]);
        let t = tube_principal_curvatures(0.0, &base, 0.5, 2).unwrap();
        assert_eq!(t.values, vec![-2.0, 0.0]);
    }

    #[test]
    fn focal_singularity_is_an_error() {
        let base = CurvatureSpectrum::new(vec![2.0], vec![1]);
        assert!(matches!(
            tube_principal_curvatures(0.0, &base, 0.5, 1),
            Err(GeometryError::FocalSingularity(_))
        ));
    }

    #[test]
    fn focal_submanifold_examples() {
        let s = CurvatureSpectrum::new(vec![1.0, -1.0], vec![1, 1]);
        let v = focal_submanifold_curvatures(1.0, 0, &s).unwrap();
        assert_eq!(v, vec![(0.0, 1)]);
        let single = CurvatureSpectrum::new(vec![0.3], vec![2]);
        assert!(focal_submanifold_curvatures(1.0, 0, &single).unwrap().is_empty());
        let dup = CurvatureSpectrum::new(vec![0.3, 0.3], vec![1, 1]);
        assert!(focal_submanifold_curvatures(1.0, 0, &dup).is_err());
    }
}
