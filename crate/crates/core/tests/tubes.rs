mod common;

use common::{randers_dilation, randers_rotation, randers_sphere_rotation, sphere};
use finsler_core::field::ScalarField;
use finsler_core::focal::{tube_map, tube_principal_curvatures, TubeFamily};
use finsler_core::geodesic::GeodesicOptions;
use finsler_core::hypersurface::{
    family_shape_operator, AffinePatch, LevelSetFamily, LevelSetSurface, NormalFamily, PatchNormalFamily,
};
use finsler_core::{MetricModel, MinkowskiNorm};
use nalgebra::DVector;

/// Largest gap between the predicted and the measured tube spectrum over the grid.
fn tube_gap(model: &MetricModel, c: f64, f: ScalarField, level: f64, origin: &[f64], sign: f64, grid: &[f64]) -> f64 {
    let surface = LevelSetSurface::new(model.clone(), f, level);
    let origin = surface.project(origin).unwrap();
    let family = LevelSetFamily::new(surface.clone(), origin.as_slice(), sign).unwrap();
    let p0 = vec![0.0; family.param_dim()];
    let (x, n) = family.frame(&p0).unwrap();
    let base = surface.shape_operator(x.as_slice(), &n).unwrap().spectrum(1e-7).unwrap();
    let opts = GeodesicOptions::tight();
    grid.iter()
        .map(|&s| {
            let predicted = tube_principal_curvatures(c, &base, s, 1).unwrap().expanded();
            let tube = TubeFamily::new(&family, s, &opts).unwrap();
            let measured = family_shape_operator(&tube, &p0, 1e-4).unwrap().eigenvalues();
            predicted.iter().zip(&measured).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn grid(s_max: f64) -> Vec<f64> {
    (1..=20).map(|k| s_max * k as f64 / 20.0).collect()
}

#[test]
fn tube_spectra_on_space_forms() {
    let cases: Vec<(MetricModel, f64)> = vec![
        (MetricModel::euclidean(3), 0.0),
        (MetricModel::quartic(3, 0.5), 0.0),
        (sphere(3), 1.0),
        (MetricModel::funk_ball(3), -0.25),
        (randers_rotation(3, 0.3), 0.0),
        (randers_dilation(3, -0.3), -0.0225),
        (randers_sphere_rotation(3, 0.4), 1.0),
    ];
    for (model, c) in &cases {
        for sign in [1.0, -1.0] {
            let surfaces = [
                (ScalarField::EuclideanNorm, 0.5, [0.3, 0.4, 0.0]),
                (ScalarField::Coordinate(0), 0.1, [0.1, 0.2, -0.1]),
                (ScalarField::Cylinder, 0.4, [0.3, 0.2, 0.1]),
            ];
            for (f, level, origin) in surfaces {
                let gap = tube_gap(model, *c, f.clone(), level, &origin, sign, &grid(0.3));
                assert!(gap <= 1e-5, "{:?} {f:?} sign {sign}: {gap:e}", model.kind());
            }
        }
    }
}

#[test]
fn quartic_norm_spheres() {
    let norm = MinkowskiNorm::Quartic { eps: 0.5 };
    let model = MetricModel::quartic(3, 0.5);
    let f = ScalarField::NormDistance { norm, center: vec![0.0; 3] };
    for sign in [1.0, -1.0] {
        let gap = tube_gap(&model, 0.0, f.clone(), 1.0, &[0.5, 0.6, 0.2], sign, &grid(0.5));
        assert!(gap <= 1e-5, "sign {sign}: {gap:e}");
    }
}

#[test]
fn tube_around_a_line_has_the_extra_curvature() {
    // codimension 2: the tube of radius s around a line is a cylinder whose
    // outward curvature is −s_c′/s_c
    let model = MetricModel::euclidean(3);
    let patch = AffinePatch {
        origin: DVector::zeros(3),
        directions: vec![DVector::from_vec(vec![0.0, 0.0, 1.0])],
    };
    let family = PatchNormalFamily::new(model, patch, &[0.0], &DVector::from_vec(vec![1.0, 0.0, 0.0]), true).unwrap();
    let base = finsler_core::hypersurface::CurvatureSpectrum::new(vec![0.0], vec![1]);
    for s in [0.25, 0.5, 1.0] {
        let predicted = tube_principal_curvatures(0.0, &base, s, 2).unwrap().expanded();
        let tube = TubeFamily::new(&family, s, &GeodesicOptions::tight()).unwrap();
        let measured = family_shape_operator(&tube, &[0.0, 0.0], 1e-4).unwrap().eigenvalues();
        for (a, b) in predicted.iter().zip(&measured) {
            assert!((a - b).abs() <= 1e-7, "{predicted:?} vs {measured:?}");
        }
    }
}

#[test]
fn tube_map_examples() {
    let model = MetricModel::euclidean(3);
    let surface = LevelSetSurface::new(model.clone(), ScalarField::EuclideanNorm, 1.0);
    let family = LevelSetFamily::new(surface, &[0.0, 0.6, 0.8], -1.0).unwrap();
    let params = vec![vec![0.0, 0.0], vec![0.1, -0.2], vec![0.3, 0.2]];
    for p in tube_map(&family, 0.5, &params, &GeodesicOptions::tight()).unwrap() {
        assert!((p.norm() - 0.5).abs() <= 1e-9);
    }
    let same = tube_map(&family, 0.0, &params, &GeodesicOptions::tight()).unwrap();
    for (p, q) in same.iter().zip(&params) {
        assert_eq!(p, &family.frame(q).unwrap().0);
    }
    // the centre of the sphere is a focal singularity of φ_1
    assert!(tube_map(&family, 1.0, &params[..1], &GeodesicOptions::tight()).is_err());

    let quartic = MetricModel::quartic(3, 0.5);
    let plane = LevelSetSurface::new(quartic, ScalarField::Coordinate(0), 0.0);
    let family = LevelSetFamily::new(plane, &[0.0, 0.1, 0.2], 1.0).unwrap();
    let (x, n) = family.frame(&[0.2, 0.1]).unwrap();
    let moved = tube_map(&family, 1.0, &[vec![0.2, 0.1]], &GeodesicOptions::tight()).unwrap();
    assert!((&moved[0] - (x + n)).amax() <= 1e-12);
}
