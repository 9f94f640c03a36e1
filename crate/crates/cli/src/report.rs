//! Verification reports and their JSON and CSV forms.
//!
//! Everything outside `environment` is a pure function of the scenario and
//! seed. Non-finite numbers are written as the strings "inf", "-inf" and
//! "nan" so that the JSON round-trips.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::OutputError;
use crate::scenario::Format;

pub const SCHEMA_VERSION: &str = "finsler-lab.report/1";

mod float {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        if x.is_finite() {
            Repr::Num(x)
        } else if x.is_nan() {
            Repr::Text("nan".into())
        } else if x > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("not a number: {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&to_repr(*x), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let reprs: Vec<Repr> = v.iter().map(|x| to_repr(*x)).collect();
            serde::Serialize::serialize(&reprs, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

/// Display form used in CSV cells; parses back to the same f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub label: String,
    pub metric: String,
    #[serde(with = "float")]
    pub residual: f64,
    #[serde(with = "float")]
    pub tolerance: f64,
    pub verdict: bool,
    /// Set when the underlying operation failed; the verdict is then false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed: u64,
    #[serde(with = "float::vec")]
    pub samples: Vec<f64>,
    #[serde(default)]
    pub detail: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Environment {
    pub tool: String,
    pub version: String,
    pub threads: usize,
    pub os: String,
    pub arch: String,
    pub started_unix_s: u64,
    /// Wall time per check, in check order.
    pub wall_time_s: Vec<f64>,
}

impl Environment {
    pub fn capture() -> Self {
        Environment {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            started_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_s: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict)
    }

    pub fn to_json(&self) -> Result<String, OutputError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, OutputError> {
        Ok(serde_json::from_str(text)?)
    }

    /// The report bytes that must be reproducible: JSON without the environment stamp.
    pub fn deterministic_json(&self) -> Result<String, OutputError> {
        let mut value = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut value {
            map.remove("environment");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// CSV table of one check with the fixed columns scenario, check, sample, residual.
    pub fn check_csv(&self, index: usize) -> Result<String, OutputError> {
        let c = &self.checks[index];
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "check", "sample", "residual"])?;
        for (i, r) in c.samples.iter().enumerate() {
            w.write_record([self.scenario.as_str(), c.label.as_str(), &i.to_string(), &format_float(*r)])?;
        }
        let bytes = w.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn file_stem(&self) -> String {
        self.scenario
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect()
    }

    /// Writes `<scenario>.json` and/or one `<scenario>.<index>-<label>.csv` per check.
    pub fn emit(&self, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, OutputError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| OutputError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let stem = self.file_stem();
        let mut written = Vec::new();
        for f in formats {
            match f {
                Format::Json => {
                    let path = dir.join(format!("{stem}.json"));
                    std::fs::write(&path, self.to_json()? + "\n").map_err(io(&path))?;
                    written.push(path);
                }
                Format::Csv => {
                    for (i, c) in self.checks.iter().enumerate() {
                        let label: String = c
                            .label
                            .chars()
                            .map(|ch| if ch.is_ascii_alphanumeric() || ch == '-' { ch } else { '_' })
                            .collect();
                        let path = dir.join(format!("{stem}.{i:02}-{label}.csv"));
                        std::fs::write(&path, self.check_csv(i)?).map_err(io(&path))?;
                        written.push(path);
                    }
                }
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VerificationReport {
        VerificationReport {
            schema: SCHEMA_VERSION.into(),
            scenario: "s".into(),
            seed: 42,
            checks: vec![CheckReport {
                name: "focal-detect".into(),
                label: "focal-detect".into(),
                metric: "euclidean:n=3".into(),
                residual: f64::INFINITY,
                tolerance: 1e-6,
                verdict: false,
                error: None,
                seed: 7,
                samples: vec![0.1 + 0.2, 1e-300, f64::INFINITY, 2.0f64.sqrt()],
                detail: BTreeMap::new(),
            }],
            passed: false,
            environment: Environment::capture(),
        }
    }

    #[test]
    fn json_round_trips_exactly() {
        let r = sample();
        let back = VerificationReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_and_json_carry_the_same_numbers() {
        let r = sample();
        let text = r.check_csv(0).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap(), vec!["scenario", "check", "sample", "residual"]);
        let values: Vec<f64> = rd.records().map(|rec| rec.unwrap()[3].parse().unwrap()).collect();
        assert_eq!(values, r.checks[0].samples);
    }

    #[test]
    fn environment_is_excluded_from_deterministic_bytes() {
        let a = sample();
        let mut b = sample();
        b.environment.wall_time_s = vec![3.0];
        b.environment.threads += 1;
        assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
    }
}
