mod common;

use std::f64::consts::PI;

use finsler_core::field::ScalarField;
use finsler_core::geodesic::GeodesicOptions;
use finsler_core::hypersurface::{CirclePatch, CurvatureSpectrum, LevelSetFamily, LevelSetSurface};
use finsler_core::isoparametric::{
    cartan_residuals, check_spacing, count_bound_check, focal_minimality_audit, minimality_audit,
    sample_level_set, verify_isoparametric, verify_transnormal,
};
use finsler_core::{MetricModel, MinkowskiNorm, VolumeForm};
use nalgebra::DVector;

#[test]
fn eq_verifier_on_catalog_functions() {
    let vol = VolumeForm::bh();
    let quartic = MetricModel::quartic(3, 0.5);
    let f = ScalarField::Coordinate(0);
    let report = verify_isoparametric(&quartic, &vol, &f, &[-0.5, 0.0, 0.5], 32, 1e-6, 1).unwrap();
    assert!(report.transnormal && report.isoparametric == Some(true));
    let a = quartic.dual_norm(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
    for (_, v) in report.a_table() {
        assert!((v - a).abs() <= 1e-6);
    }
    for (_, v) in report.b_table().unwrap() {
        assert!(v.abs() <= 1e-6);
    }

    let euclid = MetricModel::euclidean(3);
    let report = verify_isoparametric(&euclid, &vol, &ScalarField::EuclideanNorm, &[1.0, 2.0], 32, 1e-6, 2).unwrap();
    assert_eq!(report.isoparametric, Some(true));
    for (t, v) in report.b_table().unwrap() {
        assert!((v - 2.0 / t).abs() <= 1e-6, "{t}: {v}");
    }

    let bad = verify_isoparametric(&euclid, &vol, &ScalarField::Nonexample, &[0.0, 0.3], 32, 1e-6, 3).unwrap();
    assert!(!bad.transnormal);
    assert_eq!(bad.isoparametric, Some(false));
}

#[test]
fn transnormal_examples() {
    let euclid = MetricModel::euclidean(3);
    let r = verify_transnormal(&euclid, &ScalarField::Coordinate(0), &[0.0], 32, 1e-6, 0).unwrap();
    assert!(r.transnormal && r.levels[0].gradient_norm.relative() == 0.0);
    let r = verify_transnormal(&euclid, &ScalarField::EuclideanNorm, &[0.5, 1.0], 32, 1e-6, 0).unwrap();
    assert!(r.levels.iter().all(|l| l.gradient_norm.relative() <= 1e-10));
}

#[test]
fn reverse_metric_agrees_on_the_negated_function() {
    let vol = VolumeForm::bh();
    let model = common::randers_rotation(2, 0.3);
    let f = ScalarField::EuclideanNorm;
    let forward = verify_isoparametric(&model, &vol, &f, &[0.5, 1.0], 32, 1e-6, 4).unwrap();
    let backward = verify_isoparametric(&model.reversed(), &vol, &f.negated(), &[-0.5, -1.0], 32, 1e-6, 4).unwrap();
    assert_eq!(forward.isoparametric, backward.isoparametric);
    assert_eq!(forward.transnormal, backward.transnormal);
}

fn measured_spectrum(model: &MetricModel, f: ScalarField, level: f64, sign: f64, seed: u64) -> Vec<CurvatureSpectrum> {
    let surface = LevelSetSurface::new(model.clone(), f.clone(), level);
    sample_level_set(model, &f, level, 8, seed)
        .unwrap()
        .into_iter()
        .map(|x| {
            let n = surface.normal_field(sign);
            let n = finsler_core::field::VectorField::value(&n, x.as_slice()).unwrap();
            surface.principal_curvatures(x.as_slice(), &n, 1e-7).unwrap()
        })
        .collect()
}

#[test]
fn cartan_residual_vanishes_on_flat_isoparametric_families() {
    let euclid = MetricModel::euclidean(3);
    let quartic = MetricModel::quartic(3, 0.5);
    let norm_sphere = ScalarField::NormDistance {
        norm: MinkowskiNorm::Quartic { eps: 0.5 },
        center: vec![0.0; 3],
    };
    let cases = [
        (&euclid, ScalarField::Coordinate(0), 0.2, 1usize),
        (&quartic, ScalarField::Coordinate(1), 0.2, 1),
        (&euclid, ScalarField::EuclideanNorm, 0.8, 1),
        (&quartic, norm_sphere, 0.8, 1),
        (&euclid, ScalarField::Cylinder, 0.6, 2),
    ];
    for (model, f, level, g) in cases {
        for sign in [1.0, -1.0] {
            for spec in measured_spectrum(model, f.clone(), level, sign, 9) {
                assert_eq!(spec.distinct(), g, "{f:?}: {spec:?}");
                let r = cartan_residuals(0.0, &spec).unwrap();
                assert!(r.max_abs() <= 1e-7, "{f:?}: {r:?}");
            }
        }
    }
}

#[test]
fn cartan_residual_detects_perturbed_spacing() {
    for g in 1..=6usize {
        let theta0 = 0.3;
        let thetas: Vec<f64> = (0..g).map(|i| theta0 + i as f64 * PI / g as f64).collect();
        let values: Vec<f64> = thetas.iter().map(|t| 1.0 / t.tan()).collect();
        for m in [vec![1; g], (0..g).map(|i| if i % 2 == 0 { 2 } else { 3 }).collect::<Vec<_>>()] {
            if g % 2 == 1 && m.iter().any(|v| *v != m[0]) {
                continue;
            }
            let spec = CurvatureSpectrum::new(values.clone(), m.clone());
            assert!(cartan_residuals(1.0, &spec).unwrap().max_abs() <= 1e-12, "g = {g}");
            assert!(check_spacing(1.0, &spec).unwrap().deviation <= 1e-12);
            assert!(count_bound_check(1.0, &spec).passed);
            if g >= 2 {
                let mut shifted = thetas.clone();
                shifted[g - 1] += 0.05;
                let vals: Vec<f64> = shifted.iter().map(|t| 1.0 / t.tan()).collect();
                let bad = CurvatureSpectrum::new(vals, m.clone());
                assert!(cartan_residuals(1.0, &bad).unwrap().max_abs() > 1e-3, "g = {g}");
            }
        }
    }
}

#[test]
fn cartan_residual_identities() {
    let spec = CurvatureSpectrum::new(vec![1.7, 0.2, -0.4, -2.5], vec![1, 3, 2, 2]);
    for c in [-1.0, 0.0, 0.6] {
        let r = cartan_residuals(c, &spec).unwrap();
        let weighted: f64 = r.residuals.iter().zip(&spec.multiplicities).map(|(a, m)| a * *m as f64).sum();
        // Σ m_i r_i = Σ_{i≠j} m_i m_j (c + λ_iλ_j)/(λ_i − λ_j) = 0 by antisymmetry
        assert!(weighted.abs() <= 1e-12);
        for t in [2.0, 10.0] {
            let scaled = CurvatureSpectrum::new(spec.values.iter().map(|v| v * t).collect(), spec.multiplicities.clone());
            let rs = cartan_residuals(c * t * t, &scaled).unwrap();
            for (a, b) in rs.residuals.iter().zip(&r.residuals) {
                assert!((a - t * b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}

#[test]
fn c_nonpositive_bound_flags_three_curvatures() {
    let three = CurvatureSpectrum::new(vec![1.0, 0.0, -1.0], vec![1, 1, 1]);
    assert!(!count_bound_check(0.0, &three).passed);
    assert!(!count_bound_check(-1.0, &three).passed);
    assert!(count_bound_check(-1.0, &CurvatureSpectrum::new(vec![1.0, 0.0], vec![1, 1])).passed);
}

#[test]
fn cylinder_focal_axis_is_minimal() {
    let model = MetricModel::euclidean(3);
    let surface = LevelSetSurface::new(model.clone(), ScalarField::Cylinder, 0.7);
    let family = LevelSetFamily::new(surface, &[0.7, 0.0, 0.2], -1.0).unwrap();
    let covectors: Vec<DVector<f64>> = (0..8)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 8.0;
            DVector::from_vec(vec![a.cos(), a.sin(), 0.3])
        })
        .collect();
    let audit = focal_minimality_audit(&family, 0.7, &covectors, 1e-6, &GeodesicOptions::tight()).unwrap();
    assert_eq!(audit.traces.len(), 8);
    assert!(audit.passed, "{audit:?}");

    // the centre of a sphere is a point: the audit is vacuous
    let sphere = LevelSetSurface::new(model.clone(), ScalarField::EuclideanNorm, 1.0);
    let family = LevelSetFamily::new(sphere, &[0.0, 0.6, 0.8], -1.0).unwrap();
    let audit = focal_minimality_audit(&family, 1.0, &covectors, 1e-6, &GeodesicOptions::tight()).unwrap();
    assert!(audit.passed && audit.traces.is_empty());
}

#[test]
fn circle_control_is_not_minimal() {
    let model = MetricModel::euclidean(3);
    let circle = CirclePatch {
        center: DVector::zeros(3),
        radius: 0.5,
    };
    let nu = [DVector::from_vec(vec![-1.0, 0.0, 0.2])];
    let audit = minimality_audit(&model, &circle, &nu, 1e-6).unwrap();
    assert!(!audit.passed && audit.max_trace > 1e-2, "{audit:?}");
}
