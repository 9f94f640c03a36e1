mod common;

use common::{randers_dilation, randers_rotation, randers_sphere_rotation, rng, sample_pair};
use finsler_core::randers::KillingVerdict;
use finsler_core::{ChartDomain, MetricKind, MetricModel, NavigationData, RiemannianMetric, VolumeForm, WindField};

fn nav(model: &MetricModel) -> &NavigationData {
    match model.kind() {
        MetricKind::Randers(nav) => nav,
        _ => unreachable!(),
    }
}

#[test]
fn closed_form_bh_density_matches_quadrature() {
    for n in [2, 3] {
        for model in [randers_rotation(n, 0.3), randers_dilation(n, -0.3), randers_sphere_rotation(n, 0.4)] {
            let mut r = rng(21);
            for _ in 0..20 {
                let x = model.random_point(0.8, &mut r);
                let quad = model.bh_density(&x, None).unwrap();
                let closed = nav(&model).bh_density(&x).unwrap();
                assert!((quad - closed).abs() <= 1e-5 * closed, "{quad} vs {closed}");
            }
        }
    }
}

#[test]
fn half_wind_density_is_that_of_the_shifted_ball() {
    // a constant wind translates the unit ball, which keeps its volume
    for n in [2, 3] {
        let mut w = vec![0.0; n];
        w[0] = 0.5;
        let model = NavigationData::new(RiemannianMetric::Euclidean, WindField::Constant(w), ChartDomain::Whole)
            .build()
            .unwrap();
        let x = vec![0.1; n];
        assert!((model.bh_density(&x, None).unwrap() - 1.0).abs() <= 1e-9);
        assert!((nav(&model).bh_density(&x).unwrap() - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn killing_classification_of_catalog_winds() {
    let samples: Vec<Vec<f64>> = {
        let mut r = rng(2);
        (0..20).map(|_| ChartDomain::Whole.sample(3, 1.0, &mut r)).collect()
    };
    let make = |wind| NavigationData::new(RiemannianMetric::Euclidean, wind, ChartDomain::Whole);
    let rot = make(WindField::Rotation { eps: 0.3 }).killing_classify(&samples, 1e-9);
    assert_eq!(rot.verdict, KillingVerdict::Killing);
    assert!(rot.killing_defect <= 1e-12);
    let dil = make(WindField::Dilation { kappa: -0.3 }).killing_classify(&samples, 1e-9);
    match dil.verdict {
        KillingVerdict::Homothetic(k) => assert!((k + 0.3).abs() <= 1e-12),
        other => panic!("{other:?}"),
    }
    let shear = make(WindField::Shear { a: 0.2 }).killing_classify(&samples, 1e-9);
    assert_eq!(shear.verdict, KillingVerdict::Generic);
    let sphere = NavigationData::new(RiemannianMetric::StereographicSphere, WindField::Rotation { eps: 0.4 }, ChartDomain::Whole)
        .killing_classify(&samples, 1e-9);
    assert_eq!(sphere.verdict, KillingVerdict::Killing);
}

#[test]
fn rotation_s_tensors() {
    let model = randers_rotation(2, 0.3);
    let s = nav(&model).s_tensors(&[0.2, -0.1], &[1.0, 0.0]);
    assert!((s.s_lower[(0, 1)] + 0.3).abs() <= 1e-15);
    assert!((s.s_lower[(1, 0)] - 0.3).abs() <= 1e-15);
    let dil = randers_dilation(2, -0.3);
    assert!(nav(&dil).s_tensors(&[0.2, -0.1], &[1.0, 0.0]).s_lower.amax() == 0.0);
}

#[test]
fn closed_form_spray_matches_jets() {
    for model in [randers_rotation(3, 0.3), randers_sphere_rotation(3, 0.4)] {
        let mut r = rng(4);
        for _ in 0..50 {
            let (x, y) = sample_pair(&model, &mut r);
            let closed = nav(&model).spray_closed(&x, &y).unwrap();
            let jets = model.spray_value(&x, &y).unwrap();
            assert!((closed - jets).amax() <= 1e-7);
        }
    }
    // direction along the wind, where the ½F²s^i term is largest
    let model = randers_rotation(2, 0.3);
    let x = [0.8, 0.4];
    let y = [-0.4, 0.8];
    let closed = nav(&model).spray_closed(&x, &y).unwrap();
    assert!((closed - model.spray_value(&x, &y).unwrap()).amax() <= 1e-7);
    assert!(nav(&randers_dilation(2, -0.3)).spray_closed(&x, &y).is_err());
}

#[test]
fn torsion_vanishes_for_killing_winds() {
    for n in [2, 3] {
        let model = randers_rotation(n, 0.3);
        let audit = nav(&model).torsion_audit(&model, 50, 1, &VolumeForm::bh()).unwrap();
        println!("rotation n={n}: {:e}", audit.torsion_sup);
        assert!(audit.torsion_sup <= 1e-7);
    }
    let model = MetricModel::euclidean(3);
    let flat = NavigationData::new(RiemannianMetric::Euclidean, WindField::Zero, ChartDomain::Whole);
    let audit = flat.torsion_audit(&model, 20, 1, &VolumeForm::bh()).unwrap();
    assert!(audit.torsion_sup <= 1e-10);
}

#[test]
fn dilation_torsion_is_minus_two_c_prime() {
    // with S = (n+1)c'F the dilation W = κx gives c' = −κ/2 and T = κX
    for (n, kappa) in [(2, -0.3), (3, -0.3), (3, 0.2)] {
        let model = randers_dilation(n, kappa);
        let audit = nav(&model).torsion_audit(&model, 50, 1, &VolumeForm::bh()).unwrap();
        assert!((audit.c_prime + kappa / 2.0).abs() <= 1e-9);
        assert!(audit.c_prime_spread <= 1e-4);
        assert!(audit.opposite_sign_residual <= 1e-9);
        assert!((audit.homothetic_residual - 2.0 * kappa.abs()).abs() <= 1e-9);
    }
}

#[test]
fn unit_ball_is_the_translated_h_ball() {
    let model = randers_sphere_rotation(3, 0.4);
    let nav = nav(&model);
    let mut r = rng(8);
    for _ in 0..50 {
        let x = model.random_point(1.0, &mut r);
        let h = RiemannianMetric::StereographicSphere;
        let raw: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
        let len = h.inner(&x, &raw, &raw).sqrt();
        let w = nav.wind.value(&x);
        let y: Vec<f64> = raw.iter().zip(&w).map(|(u, wi)| u / len + wi).collect();
        assert!((model.eval_f(&x, &y).unwrap() - 1.0).abs() <= 1e-10);
    }
}
