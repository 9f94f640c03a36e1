//! Acceptance run: one scenario file per criterion, one PASS/FAIL line each.
//!
//! The process exits nonzero when a criterion fails, except for the
//! homothetic half of the torsion criterion, which is listed under
//! `KNOWN_FAILURES` together with the measured relation it contradicts.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use finsler_lab::{load_scenario, run_scenario, VerificationReport};

/// Check labels expected to fail, with the reason printed next to them.
const KNOWN_FAILURES: &[(&str, &str)] = &[
    ("dilation n=2", "measured T = -2c'X, not +2c'X"),
    ("dilation n=3", "measured T = -2c'X, not +2c'X"),
];

fn scenario_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(file)
}

fn run(file: &str) -> (VerificationReport, f64) {
    let scenario = load_scenario(&scenario_path(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
    let start = Instant::now();
    let report = run_scenario(&scenario);
    (report, start.elapsed().as_secs_f64())
}

fn worst(report: &VerificationReport) -> String {
    let c = report
        .checks
        .iter()
        .max_by(|a, b| {
            let ra = a.residual / a.tolerance.max(f64::MIN_POSITIVE);
            let rb = b.residual / b.tolerance.max(f64::MIN_POSITIVE);
            ra.total_cmp(&rb)
        })
        .expect("scenario has checks");
    format!("worst {} residual {:.2e} tol {:.0e}", c.label, c.residual, c.tolerance)
}

fn failures(report: &VerificationReport) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| !c.verdict)
        .map(|c| match &c.error {
            Some(e) => format!("{}: {e}", c.label),
            None => format!("{}: residual {:.3e} > tol {:.0e}", c.label, c.residual, c.tolerance),
        })
        .collect()
}

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    known: bool,
    text: String,
}

fn standard(id: usize, title: &'static str, file: &str) -> (Line, VerificationReport) {
    let (report, secs) = run(file);
    let fails = failures(&report);
    let text = if fails.is_empty() {
        format!("{} checks, {}, {secs:.1} s", report.checks.len(), worst(&report))
    } else {
        fails.join("; ")
    };
    (
        Line {
            id,
            title,
            passed: fails.is_empty(),
            known: false,
            text,
        },
        report,
    )
}

fn main() -> ExitCode {
    let files = [
        (1, "tensor oracles", "01-tensor-oracle.json"),
        (2, "algebraic identities", "02-identities.json"),
        (3, "duality", "03-duality.json"),
        (4, "flag-curvature constants", "04-flag-curvature.json"),
        (5, "geodesics and transport", "05-geodesics.json"),
        (6, "focal points", "06-focal.json"),
        (7, "tube curvatures", "07-tube.json"),
        (8, "reversible torsion", "08-torsion.json"),
        (9, "S-curvature", "09-s-curvature.json"),
        (10, "Cartan residuals", "10-cartan.json"),
        (11, "isoparametric verifier", "11-isoparametric.json"),
        (12, "spacing, multiplicity and bound validators", "12-validators.json"),
        (13, "minimality audit", "13-minimality.json"),
    ];
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for (id, title, file) in files {
        let start = Instant::now();
        let (mut line, report) = standard(id, title, file);
        if id == 1 {
            let secs = start.elapsed().as_secs_f64();
            if secs >= 60.0 {
                line.passed = false;
                line.text = format!("runtime {secs:.1} s >= 60 s; {}", line.text);
            }
        }
        if id == 8 {
            let mut parts = Vec::new();
            let mut unexpected = false;
            let mut known = false;
            for c in &report.checks {
                let verdict = if c.verdict { "pass" } else { "fail" };
                let mut part = format!("{} {} {:.2e} (tol {:.0e}) {verdict}", c.label, c.name, c.residual, c.tolerance);
                if c.name == "torsion-homothetic" {
                    let d = &c.detail;
                    part += &format!(
                        " [c' = {}, sup|T + 2c'X| = {:.2e}]",
                        d["c_prime"], d["opposite_sign_residual"].as_f64().unwrap_or(f64::NAN)
                    );
                }
                match KNOWN_FAILURES.iter().find(|(l, _)| *l == c.label) {
                    Some((_, why)) if !c.verdict => {
                        known = true;
                        part += &format!(" known: {why}");
                    }
                    _ if !c.verdict => unexpected = true,
                    _ => {}
                }
                parts.push(part);
            }
            line.known = known && !unexpected;
            line.text = parts.join("; ");
        }
        lines.push(line);
        reports.push((file, report));
    }

    // 14: rerun every scenario and compare report bytes without the environment stamp
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (file, first) in &reports {
        let (again, _) = run(file);
        if again.deterministic_json().unwrap() != first.deterministic_json().unwrap() {
            mismatched.push(file.to_string());
        }
    }
    let mixed = "14-determinism.json";
    let (a, _) = run(mixed);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (b, _) = pool.install(|| run(mixed));
    let (c, _) = run(mixed);
    let bytes = a.deterministic_json().unwrap();
    if bytes != b.deterministic_json().unwrap() || bytes != c.deterministic_json().unwrap() {
        mismatched.push(format!("{mixed} (thread pools)"));
    }
    lines.push(Line {
        id: 14,
        title: "determinism",
        passed: mismatched.is_empty(),
        known: false,
        text: if mismatched.is_empty() {
            format!(
                "{} scenarios rerun byte-identical, {mixed} identical across thread pools, {:.1} s",
                reports.len() + 1,
                start.elapsed().as_secs_f64()
            )
        } else {
            format!("differing reports: {}", mismatched.join(", "))
        },
    });

    println!();
    for l in &lines {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        println!("criterion {:02} {tag} {}: {}", l.id, l.title, l.text);
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    let unexpected: Vec<_> = lines.iter().filter(|l| !l.passed && !l.known).map(|l| l.id).collect();
    println!("{passed}/{} criteria passed", lines.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
