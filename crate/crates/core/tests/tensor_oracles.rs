mod common;

use common::{catalog, rng, sample_pair};
use finsler_core::finite_diff as fd;

#[test]
fn jet_tensors_match_finite_differences() {
    for n in [2, 3] {
        for (name, model) in catalog(n) {
            let mut r = rng(7);
            let mut worst = [0.0f64; 5];
            for _ in 0..40 {
                let (x, y) = sample_pair(&model, &mut r);
                let g = model.fundamental_tensor(&x, &y).unwrap();
                let c = model.cartan_tensor(&x, &y).unwrap();
                let l = model.landsberg_tensor(&x, &y).unwrap();
                let s = model.spray(&x, &y).unwrap();
                let errs = [
                    fd::relative_error(g.as_slice(), fd::fundamental_tensor(&model, &x, &y).as_slice()),
                    fd::relative_error(c.as_slice(), fd::cartan_tensor(&model, &x, &y).as_slice()),
                    fd::relative_error(l.as_slice(), fd::landsberg(&model, &x, &y).unwrap().as_slice()),
                    fd::relative_error(s.g.as_slice(), fd::spray_value(&model, &x, &y).as_slice()),
                    fd::relative_error(s.gamma.as_slice(), fd::berwald(&model, &x, &y).unwrap().as_slice()),
                ];
                for (w, e) in worst.iter_mut().zip(errs) {
                    *w = w.max(e);
                }
            }
            println!("{name} n={n}: {worst:?}");
            assert!(worst.iter().all(|e| *e <= 1e-6), "{name} n={n}: {worst:?}");
        }
    }
}

#[test]
fn contractions_with_the_direction_vanish() {
    for (name, model) in catalog(3) {
        let mut r = rng(11);
        for _ in 0..30 {
            let (x, y) = sample_pair(&model, &mut r);
            let g = model.fundamental_tensor(&x, &y).unwrap();
            let yv = nalgebra::DVector::from_column_slice(&y);
            let f = model.eval_f(&x, &y).unwrap();
            assert!((yv.dot(&(&g * &yv)) - f * f).abs() <= 1e-9, "{name}");
            let c = model.cartan_tensor(&x, &y).unwrap();
            let l = model.landsberg_tensor(&x, &y).unwrap();
            assert!(c.contract_last(&y).amax() <= 1e-9, "{name}: C(y)");
            assert!(l.contract_last(&y).amax() <= 1e-9, "{name}: L(y)");
            let s = model.spray(&x, &y).unwrap();
            let gy = s.gamma.contract_last(&y);
            assert!((gy - &s.n).amax() <= 1e-10, "{name}: Γy = N");
            let scaled: Vec<f64> = y.iter().map(|v| 2.5 * v).collect();
            let g2 = model.spray_value(&x, &scaled).unwrap();
            assert!((g2 - s.g * 6.25).amax() <= 1e-8, "{name}: homogeneity");
        }
    }
}
