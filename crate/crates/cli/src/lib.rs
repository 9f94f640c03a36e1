//! Scenario runner for finsler-core: builds catalog metrics, runs named
//! checks and writes JSON summaries and per-sample CSV tables.

pub mod catalog;
pub mod checks;
pub mod error;
pub mod report;
pub mod scenario;

use std::time::Instant;

use rayon::prelude::*;

pub use error::{ConfigError, OutputError};
pub use report::{CheckReport, Environment, VerificationReport};
pub use scenario::{load_scenario, parse_scenario, Format, Scenario};

/// Runs every check in order; failures are recorded, not fatal.
pub fn run_scenario(scenario: &Scenario) -> VerificationReport {
    let mut environment = Environment::capture();
    let results: Vec<(CheckReport, f64)> = scenario
        .checks
        .par_iter()
        .map(|check| {
            let start = Instant::now();
            let outcome = checks::run_check(check);
            let elapsed = start.elapsed().as_secs_f64();
            let report = match outcome {
                Ok(o) => CheckReport {
                    name: check.name.to_string(),
                    label: check.label.clone(),
                    metric: check.metric.to_string(),
                    verdict: o.residual <= check.tolerance,
                    residual: o.residual,
                    tolerance: check.tolerance,
                    error: None,
                    seed: check.seed,
                    samples: o.samples,
                    detail: o.detail,
                },
                Err(e) => CheckReport {
                    name: check.name.to_string(),
                    label: check.label.clone(),
                    metric: check.metric.to_string(),
                    residual: f64::NAN,
                    tolerance: check.tolerance,
                    verdict: false,
                    error: Some(e),
                    seed: check.seed,
                    samples: Vec::new(),
                    detail: Default::default(),
                },
            };
            (report, elapsed)
        })
        .collect();
    environment.wall_time_s = results.iter().map(|r| r.1).collect();
    let checks: Vec<CheckReport> = results.into_iter().map(|r| r.0).collect();
    VerificationReport {
        schema: report::SCHEMA_VERSION.to_string(),
        scenario: scenario.id.clone(),
        seed: scenario.seed,
        passed: checks.iter().all(|c| c.verdict),
        checks,
        environment,
    }
}

/// One line per check: verdict, label, residual against tolerance.
pub fn summary(report: &VerificationReport) -> String {
    let mut out = String::new();
    for (c, t) in report.checks.iter().zip(&report.environment.wall_time_s) {
        let verdict = if c.verdict { "PASS" } else { "FAIL" };
        out += &format!(
            "{verdict} {:<28} {:<40} residual {:.3e} tol {:.1e} ({t:.2} s)",
            c.label, c.metric, c.residual, c.tolerance
        );
        if let Some(e) = &c.error {
            out += &format!(" error: {e}");
        }
        out.push('\n');
    }
    out
}
