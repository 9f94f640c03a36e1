mod common;

use common::{catalog, randers_dilation, randers_rotation, randers_sphere_rotation, rng, sample_pair, sphere};
use finsler_core::{MetricKind, MetricModel, VolumeForm};
use nalgebra::DVector;
use rand::Rng;

fn flag_range(model: &MetricModel, count: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut taken = 0;
    while taken < count {
        let (x, y) = sample_pair(model, &mut r);
        let v: Vec<f64> = (0..model.dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
        match model.flag_curvature(&x, &y, &v) {
            Ok(k) => {
                lo = lo.min(k);
                hi = hi.max(k);
                taken += 1;
            }
            Err(finsler_core::GeometryError::DegenerateFlag) => continue,
            Err(e) => panic!("{e:?}"),
        }
    }
    (lo, hi)
}

#[test]
fn flag_curvature_constants() {
    for n in [2, 3] {
        let cases = [
            (MetricModel::euclidean(n), 0.0, 1e-8),
            (sphere(n), 1.0, 1e-6),
            (MetricModel::funk_ball(n), -0.25, 1e-5),
            (randers_sphere_rotation(n, 0.4), 1.0, 1e-5),
        ];
        for (model, k, tol) in cases {
            let (lo, hi) = flag_range(&model, 200, 3);
            println!("n={n} expected {k}: [{lo}, {hi}]");
            assert!((lo - k).abs() <= tol && (hi - k).abs() <= tol);
        }
    }
}

#[test]
fn legendre_round_trip_and_dual_norm() {
    for n in [2, 3] {
        for (name, model) in catalog(n) {
            let mut r = rng(5);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let (x, y) = sample_pair(&model, &mut r);
                let scale = r.gen_range(0.2..3.0);
                let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
                let xi = model.legendre(&x, &y).unwrap();
                let back = model.legendre_inverse(&x, xi.as_slice()).unwrap();
                let f = model.eval_f(&x, &y).unwrap();
                let fs = model.dual_norm(&x, xi.as_slice()).unwrap();
                worst = worst
                    .max((back - DVector::from_column_slice(&y)).amax() / scale)
                    .max((fs - f).abs() / scale);
            }
            println!("{name} n={n}: {worst:e}");
            assert!(worst <= 1e-8, "{name}");
        }
    }
}

#[test]
fn randers_closed_form_dual_matches_newton() {
    for model in [randers_rotation(3, 0.3), randers_dilation(3, -0.3), randers_sphere_rotation(3, 0.4)] {
        let MetricKind::Randers(nav) = model.kind() else { unreachable!() };
        let mut r = rng(9);
        for _ in 0..50 {
            let x = model.random_point(0.8, &mut r);
            let xi: Vec<f64> = (0..3).map(|_| r.gen_range(-2.0..2.0)).collect();
            let newton = model.legendre_inverse(&x, &xi).unwrap();
            let closed = nav.legendre_inverse(&x, &xi);
            assert!((newton - closed).amax() <= 1e-8);
            let fs = model.dual_norm(&x, &xi).unwrap();
            assert!((fs - nav.dual(&x, &xi)).abs() <= 1e-8);
        }
    }
}

#[test]
fn s_curvature_of_catalog_models() {
    let vol = VolumeForm::bh();
    let report = |name: &str, model: &MetricModel| {
        let mut r = rng(13);
        let mut ratios = Vec::new();
        for _ in 0..30 {
            let (x, y) = sample_pair(model, &mut r);
            let s = model.s_curvature(&vol, &x, &y).unwrap();
            ratios.push(s / model.eval_f(&x, &y).unwrap());
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{name}: S/F in [{lo}, {hi}]");
        (lo, hi)
    };
    for n in [2, 3, 4] {
        let (lo, hi) = report("quartic", &MetricModel::quartic(n, 0.5));
        assert!(lo.abs() <= 1e-6 && hi.abs() <= 1e-6);
        let (lo, hi) = report("rotation", &randers_rotation(n, 0.3));
        assert!(lo.abs() <= 1e-5 && hi.abs() <= 1e-5);
        let (lo, hi) = report("dilation", &randers_dilation(n, -0.3));
        assert!(hi - lo <= 1e-4);
    }
}
