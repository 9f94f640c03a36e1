mod common;

use common::{randers_rotation, randers_sphere_rotation, sphere};
use finsler_core::field::ScalarField;
use finsler_core::focal::{detect_focal_numeric, focal_distances, sc_eval};
use finsler_core::geodesic::GeodesicOptions;
use finsler_core::hypersurface::{LevelSetFamily, LevelSetSurface, NormalFamily};
use finsler_core::MetricModel;

fn family(model: &MetricModel, f: ScalarField, level: f64, origin: &[f64], sign: f64) -> (LevelSetFamily, Vec<(f64, usize)>) {
    let surface = LevelSetSurface::new(model.clone(), f, level);
    let origin = surface.project(origin).unwrap();
    let fam = LevelSetFamily::new(surface.clone(), origin.as_slice(), sign).unwrap();
    let (x, n) = fam.frame(&vec![0.0; fam.param_dim()]).unwrap();
    let spec = surface.shape_operator(x.as_slice(), &n).unwrap().spectrum(1e-7).unwrap();
    let pairs = spec.values.iter().cloned().zip(spec.multiplicities.iter().cloned()).collect();
    (fam, pairs)
}

#[test]
fn unit_sphere_focuses_at_its_centre() {
    let model = MetricModel::euclidean(3);
    let (fam, spec) = family(&model, ScalarField::EuclideanNorm, 1.0, &[0.0, 0.6, 0.8], -1.0);
    assert_eq!(spec.len(), 1);
    assert!((spec[0].0 - 1.0).abs() <= 1e-12);
    let found = detect_focal_numeric(&fam, (0.05, 1.8), &GeodesicOptions::tight()).unwrap();
    assert_eq!(found.len(), 1, "{found:?}");
    assert!((found[0].s - 1.0).abs() <= 1e-6, "{found:?}");
    assert_eq!(found[0].multiplicity, 2);
    assert_eq!(focal_distances(0.0, spec[0].0, (0.0, 10.0)), vec![1.0]);
}

#[test]
fn cylinder_focuses_only_on_its_axis() {
    let model = MetricModel::euclidean(3);
    let r = 0.7;
    let (fam, _) = family(&model, ScalarField::Cylinder, r, &[0.7, 0.0, 0.3], -1.0);
    let found = detect_focal_numeric(&fam, (0.05, 3.0), &GeodesicOptions::tight()).unwrap();
    assert_eq!(found.len(), 1, "{found:?}");
    assert!((found[0].s - r).abs() <= 1e-6);
    assert_eq!(found[0].multiplicity, 1);
}

#[test]
fn hyperplanes_have_no_focal_points() {
    let model = MetricModel::quartic(3, 0.5);
    let (fam, _) = family(&model, ScalarField::Coordinate(0), 0.0, &[0.0, 0.1, 0.2], 1.0);
    assert!(detect_focal_numeric(&fam, (0.05, 5.0), &GeodesicOptions::tight()).unwrap().is_empty());
}

#[test]
fn numeric_focal_points_match_the_space_form_law() {
    let cases: Vec<(MetricModel, f64, f64)> = vec![
        (MetricModel::euclidean(3), 0.0, 3.0),
        (MetricModel::quartic(3, 0.5), 0.0, 3.0),
        (sphere(3), 1.0, 3.0),
        (MetricModel::funk_ball(3), -0.25, 2.0),
        (randers_rotation(3, 0.3), 0.0, 1.0),
        (randers_sphere_rotation(3, 0.4), 1.0, 3.0),
    ];
    for (model, c, s_max) in cases {
        for (f, level, origin) in [
            (ScalarField::EuclideanNorm, 0.5, [0.3, 0.4, 0.0]),
            (ScalarField::Cylinder, 0.4, [0.3, 0.2, 0.1]),
        ] {
            let (fam, spec) = family(&model, f.clone(), level, &origin, -1.0);
            let window = (0.02, s_max);
            let found = match detect_focal_numeric(&fam, window, &GeodesicOptions::tight()) {
                Ok(v) => v,
                Err(e) => panic!("{:?} {f:?}: {e:?}", model.kind()),
            };
            let mut expected: Vec<(f64, usize)> = spec
                .iter()
                .flat_map(|&(l, m)| focal_distances(c, l, window).into_iter().map(move |s| (s, m)))
                .collect();
            expected.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(found.len(), expected.len(), "{:?} {f:?}: {found:?} vs {expected:?}", model.kind());
            for (got, (s, m)) in found.iter().zip(&expected) {
                assert!((got.s - s).abs() <= 1e-6, "{got:?} vs {s}");
                assert_eq!(got.multiplicity, *m);
            }
        }
    }
}

#[test]
fn sc_identities() {
    for c in [-2.0, -0.25, 0.0, 0.5, 1.0] {
        for k in 0..50 {
            let s = 0.07 * k as f64;
            let (a, b, cc) = sc_eval(c, s);
            assert!((cc + c * a).abs() <= 1e-12);
            assert!((b * b + c * a * a - 1.0).abs() <= 1e-12 * (1.0 + b * b));
        }
    }
}
