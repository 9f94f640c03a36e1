#![allow(dead_code)]

use finsler_core::{ChartDomain, MetricModel, NavigationData, RiemannianMetric, WindField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sphere(n: usize) -> MetricModel {
    MetricModel::riemannian(n, RiemannianMetric::StereographicSphere)
}

pub fn randers_rotation(n: usize, eps: f64) -> MetricModel {
    NavigationData::new(
        RiemannianMetric::Euclidean,
        WindField::Rotation { eps },
        ChartDomain::Ball {
            center: vec![0.0; n],
            radius: 0.9 / eps,
        },
    )
    .build()
    .unwrap()
}

pub fn randers_dilation(n: usize, kappa: f64) -> MetricModel {
    NavigationData::new(
        RiemannianMetric::Euclidean,
        WindField::Dilation { kappa },
        ChartDomain::Ball {
            center: vec![0.0; n],
            radius: 0.9 / kappa.abs(),
        },
    )
    .build()
    .unwrap()
}

pub fn randers_sphere_rotation(n: usize, eps: f64) -> MetricModel {
    NavigationData::new(
        RiemannianMetric::StereographicSphere,
        WindField::Rotation { eps },
        ChartDomain::Whole,
    )
    .build_dim(n)
    .unwrap()
}

/// Models whose tensors are compared with the oracles.
pub fn catalog(n: usize) -> Vec<(&'static str, MetricModel)> {
    vec![
        ("euclidean", MetricModel::euclidean(n)),
        ("minkowski-quartic", MetricModel::quartic(n, 0.5)),
        ("sphere", sphere(n)),
        ("randers-rotation", randers_rotation(n, 0.3)),
        ("randers-dilation", randers_dilation(n, -0.3)),
        ("randers-sphere-rotation", randers_sphere_rotation(n, 0.4)),
        ("funk-ball", MetricModel::funk_ball(n)),
    ]
}

/// Point inside the inner part of the chart and a unit direction there.
pub fn sample_pair(model: &MetricModel, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x = model.random_point(0.7, rng);
    let y = model.random_unit(&x, rng);
    (x, y)
}
