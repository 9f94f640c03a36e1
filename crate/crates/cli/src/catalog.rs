//! Checked-in metrics and surfaces, addressed by string ids such as
//! `randers-rotation:n=3,eps=0.3`.

use std::collections::BTreeMap;
use std::fmt;

use finsler_core::field::ScalarField;
use finsler_core::{ChartDomain, MetricKind, MetricModel, MinkowskiNorm, NavigationData, RiemannianMetric, WindField};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogId {
    Euclidean,
    MinkowskiQuartic,
    SphereStereographic,
    RandersRotation,
    RandersDilation,
    RandersSphereRotation,
    FunkBall,
}

impl CatalogId {
    pub const ALL: [CatalogId; 7] = [
        CatalogId::Euclidean,
        CatalogId::MinkowskiQuartic,
        CatalogId::SphereStereographic,
        CatalogId::RandersRotation,
        CatalogId::RandersDilation,
        CatalogId::RandersSphereRotation,
        CatalogId::FunkBall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatalogId::Euclidean => "euclidean",
            CatalogId::MinkowskiQuartic => "minkowski-quartic",
            CatalogId::SphereStereographic => "riemannian-sphere-stereographic",
            CatalogId::RandersRotation => "randers-rotation",
            CatalogId::RandersDilation => "randers-dilation",
            CatalogId::RandersSphereRotation => "randers-sphere-rotation",
            CatalogId::FunkBall => "funk-ball",
        }
    }

    /// Accepted parameter names with defaults, besides `n`.
    fn parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            CatalogId::MinkowskiQuartic => &[("eps", 0.5)],
            CatalogId::RandersRotation => &[("eps", 0.3)],
            CatalogId::RandersDilation => &[("kappa", -0.3)],
            CatalogId::RandersSphereRotation => &[("eps", 0.4)],
            _ => &[],
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parsed metric id with every parameter resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub id: CatalogId,
    pub n: usize,
    pub params: BTreeMap<String, f64>,
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={}", self.id, self.n)?;
        for (k, v) in &self.params {
            write!(f, ",{k}={v}")?;
        }
        Ok(())
    }
}

/// Splits `id:k=v,k=v` into the id and its key/value pairs.
fn split_spec(spec: &str) -> (&str, Vec<(&str, &str)>) {
    let (id, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let pairs = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| kv.split_once('=').map(|(k, v)| (k.trim(), v.trim())).unwrap_or((kv.trim(), "")))
        .collect();
    (id.trim(), pairs)
}

impl MetricSpec {
    pub fn parse(spec: &str, field: &str) -> Result<Self, ConfigError> {
        let (name, pairs) = split_spec(spec);
        let id = CatalogId::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| ConfigError::UnknownCatalogId(name.to_string()))?;
        let mut n = 3usize;
        let mut params: BTreeMap<String, f64> = id.parameters().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in pairs {
            let bad = |msg: String| ConfigError::Schema { field: field.to_string(), message: msg };
            if k == "n" {
                n = v.parse().map_err(|_| bad(format!("n must be an integer, got {v:?}")))?;
                if !(2..=4).contains(&n) {
                    return Err(bad(format!("n must be 2, 3 or 4, got {n}")));
                }
            } else if params.contains_key(k) {
                let x: f64 = v.parse().map_err(|_| bad(format!("{k} must be a number, got {v:?}")))?;
                params.insert(k.to_string(), x);
            } else {
                return Err(bad(format!("unknown parameter {k:?} for {id}")));
            }
        }
        let spec = MetricSpec { id, n, params };
        spec.validate().map_err(|message| ConfigError::Schema { field: field.to_string(), message })?;
        Ok(spec)
    }

    fn param(&self, k: &str) -> f64 {
        self.params[k]
    }

    fn validate(&self) -> Result<(), String> {
        match self.id {
            CatalogId::MinkowskiQuartic if self.param("eps") <= 0.0 => Err("eps must be positive".into()),
            CatalogId::RandersRotation | CatalogId::RandersSphereRotation if self.param("eps") == 0.0 => {
                Err("eps must be nonzero".into())
            }
            CatalogId::RandersDilation if self.param("kappa") == 0.0 => Err("kappa must be nonzero".into()),
            _ => Ok(()),
        }
    }

    /// Navigation data of the Randers entries.
    pub fn navigation(&self) -> Option<NavigationData> {
        let n = self.n;
        // the flat winds have h-length |κ||x| or |ε|·|x| at most; the chart stops at 0.9 of the limit
        let ball = |rate: f64| ChartDomain::Ball {
            center: vec![0.0; n],
            radius: 0.9 / rate.abs(),
        };
        match self.id {
            CatalogId::RandersRotation => Some(NavigationData::new(
                RiemannianMetric::Euclidean,
                WindField::Rotation { eps: self.param("eps") },
                ball(self.param("eps")),
            )),
            CatalogId::RandersDilation => Some(NavigationData::new(
                RiemannianMetric::Euclidean,
                WindField::Dilation { kappa: self.param("kappa") },
                ball(self.param("kappa")),
            )),
            CatalogId::RandersSphereRotation => Some(NavigationData::new(
                RiemannianMetric::StereographicSphere,
                WindField::Rotation { eps: self.param("eps") },
                ChartDomain::Whole,
            )),
            _ => None,
        }
    }

    pub fn build(&self) -> finsler_core::Result<MetricModel> {
        let n = self.n;
        Ok(match self.id {
            CatalogId::Euclidean => MetricModel::euclidean(n),
            CatalogId::MinkowskiQuartic => MetricModel::quartic(n, self.param("eps")),
            CatalogId::SphereStereographic => MetricModel::riemannian(n, RiemannianMetric::StereographicSphere),
            CatalogId::FunkBall => MetricModel::funk_ball(n),
            CatalogId::RandersSphereRotation => self.navigation().unwrap().build_dim(n)?,
            CatalogId::RandersRotation | CatalogId::RandersDilation => self.navigation().unwrap().build()?,
        })
    }

    /// Declared constant flag curvature.
    pub fn flag_curvature(&self) -> f64 {
        match self.id {
            CatalogId::Euclidean | CatalogId::MinkowskiQuartic | CatalogId::RandersRotation => 0.0,
            CatalogId::SphereStereographic | CatalogId::RandersSphereRotation => 1.0,
            CatalogId::FunkBall => -0.25,
            CatalogId::RandersDilation => -0.25 * self.param("kappa").powi(2),
        }
    }

    pub fn minkowski_norm(&self) -> Option<MinkowskiNorm> {
        match self.id {
            CatalogId::MinkowskiQuartic => Some(MinkowskiNorm::Quartic { eps: self.param("eps") }),
            _ => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.id == CatalogId::Euclidean
    }
}

/// A hypersurface given as a level set, with a base point and a normal side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    /// Level value; the radius for spheres and cylinders.
    #[serde(default)]
    pub level: Option<f64>,
    /// Coordinate index for hyperplanes and coordinate level sets.
    #[serde(default)]
    pub axis: Option<usize>,
    /// Point projected onto the surface to fix the family centre.
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    /// +1 for the normal along ∇f, −1 for the opposite side.
    #[serde(default = "default_sign")]
    pub sign: f64,
}

fn default_sign() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    /// x^axis = level.
    Hyperplane,
    /// F-distance sphere about the origin of radius `level`.
    FSphere,
    /// (x¹)² + (x²)² = level².
    Cylinder,
    /// |x| = level.
    RadialLevel,
    /// x^axis = level; the same level set as a hyperplane, kept as the x¹ family.
    CoordinateLevel,
}

impl SurfaceSpec {
    /// Parses the command-line form `kind:level=0.7,sign=-1,origin=0.7/0/0.3`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (kind, pairs) = split_spec(text);
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), serde_json::Value::String(kind.into()));
        for (k, v) in pairs {
            let value = if v.contains('/') {
                let items: Result<Vec<f64>, _> = v.split('/').map(str::parse).collect();
                serde_json::json!(items.map_err(|_| ConfigError::Schema {
                    field: format!("surface.{k}"),
                    message: format!("expected a /-separated list of numbers, got {v:?}"),
                })?)
            } else if let Ok(x) = v.parse::<f64>() {
                if k == "axis" {
                    serde_json::json!(x as i64)
                } else {
                    serde_json::json!(x)
                }
            } else {
                serde_json::Value::String(v.into())
            };
            obj.insert(k.into(), value);
        }
        crate::scenario::from_value(serde_json::Value::Object(obj), "surface")
    }

    pub fn level(&self) -> f64 {
        self.level.unwrap_or(match self.kind {
            SurfaceKind::Hyperplane | SurfaceKind::CoordinateLevel => 0.0,
            _ => 1.0,
        })
    }

    /// The defining function for a given metric.
    pub fn field(&self, metric: &MetricSpec) -> Result<ScalarField, String> {
        let axis = self.axis.unwrap_or(0);
        if axis >= metric.n {
            return Err(format!("axis {axis} out of range for n = {}", metric.n));
        }
        Ok(match self.kind {
            SurfaceKind::Hyperplane | SurfaceKind::CoordinateLevel => ScalarField::Coordinate(axis),
            SurfaceKind::Cylinder => {
                if metric.n < 3 {
                    return Err("a cylinder needs n >= 3".into());
                }
                ScalarField::Cylinder
            }
            SurfaceKind::RadialLevel => ScalarField::EuclideanNorm,
            SurfaceKind::FSphere => match (metric.minkowski_norm(), &metric.id) {
                (Some(norm), _) => ScalarField::NormDistance { norm, center: vec![0.0; metric.n] },
                // about the origin the round and flat distance spheres are coordinate spheres
                (None, CatalogId::Euclidean | CatalogId::SphereStereographic) => ScalarField::EuclideanNorm,
                _ => return Err(format!("no closed-form F-distance spheres for {}", metric.id)),
            },
        })
    }

    /// Base point candidate before projection.
    pub fn origin(&self, n: usize) -> Vec<f64> {
        if let Some(o) = &self.origin {
            return o.clone();
        }
        let l = self.level();
        let mut x = vec![0.1; n];
        match self.kind {
            SurfaceKind::Hyperplane | SurfaceKind::CoordinateLevel => x[self.axis.unwrap_or(0)] = l,
            SurfaceKind::Cylinder => {
                x[0] = l;
                x[1] = 0.0;
            }
            SurfaceKind::RadialLevel | SurfaceKind::FSphere => {
                x = vec![0.0; n];
                x[0] = l;
            }
        }
        x
    }
}

pub fn is_randers(model: &MetricModel) -> Option<&NavigationData> {
    match model.kind() {
        MetricKind::Randers(nav) => Some(nav),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ids_with_defaults() {
        let m = MetricSpec::parse("euclidean:n=3", "metric").unwrap();
        assert_eq!((m.id, m.n), (CatalogId::Euclidean, 3));
        let r = MetricSpec::parse("randers-dilation:n=2,kappa=0.2", "metric").unwrap();
        assert_eq!(r.params["kappa"], 0.2);
        assert_eq!(r.to_string(), "randers-dilation:n=2,kappa=0.2");
        assert!(matches!(
            MetricSpec::parse("hyperbolic:n=3", "metric"),
            Err(ConfigError::UnknownCatalogId(_))
        ));
        assert!(matches!(
            MetricSpec::parse("euclidean:n=3,eps=1", "metric"),
            Err(ConfigError::Schema { .. })
        ));
    }

    #[test]
    fn every_entry_builds() {
        for id in CatalogId::ALL {
            for n in 2..=4 {
                let spec = MetricSpec::parse(&format!("{id}:n={n}"), "metric").unwrap();
                assert_eq!(spec.build().unwrap().dim(), n);
            }
        }
    }

    #[test]
    fn surface_strings() {
        let s = SurfaceSpec::parse("cylinder:level=0.7,sign=-1,origin=0.7/0/0.3").unwrap();
        assert_eq!(s.kind, SurfaceKind::Cylinder);
        assert_eq!(s.origin, Some(vec![0.7, 0.0, 0.3]));
        assert_eq!(s.sign, -1.0);
        assert!(SurfaceSpec::parse("torus:level=1").is_err());
    }
}
