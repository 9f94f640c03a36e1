use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_lab::catalog::{CatalogId, MetricSpec, SurfaceSpec};
use finsler_lab::checks::CheckName;
use finsler_lab::scenario::{self, BClosedForm, CheckFile, CheckParams, FunctionSpec, Sampling, ScenarioFile};
use finsler_lab::{load_scenario, run_scenario, summary, ConfigError, Format, Scenario};

#[derive(Parser)]
#[command(name = "finsler-lab", version, about = "Run Finsler geometry verification scenarios")]
struct Cli {
    /// Seed for every random draw; overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Directory for report files; nothing is written without it unless the scenario names one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report formats to write (repeatable).
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Catalog id with parameters, e.g. `randers-rotation:n=3,eps=0.3`.
    #[arg(long, default_value = "euclidean:n=3")]
    metric: String,
    /// Samples per check.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args, Clone)]
struct SurfaceArgs {
    /// Surface as `kind:level=..,sign=..,origin=a/b/c`; kinds: hyperplane, f-sphere, cylinder, radial-level, coordinate-level.
    #[arg(long)]
    surface: String,
    /// Largest arc length searched or sampled along the normal geodesics.
    #[arg(long)]
    s_max: Option<f64>,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a scenario file.
    Run { scenario: PathBuf },
    /// Jet tensors against finite differences, and their algebraic identities.
    Tensors(MetricArgs),
    /// Geodesic speed, transport pairings, and straightness for Minkowski models.
    Geodesic(MetricArgs),
    /// Numeric focal points of a surface against the tube law.
    Focal {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    /// Tube principal curvatures against finite differences on the mapped tube.
    Tube {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Grid points in (0, s_max].
        #[arg(long)]
        points: Option<usize>,
    },
    /// Transnormal and isoparametric verdict for a catalog function.
    Isoparam {
        #[command(flatten)]
        metric: MetricArgs,
        /// coordinate, radial, cylinder or nonexample.
        #[arg(long, value_parser = parse_function)]
        function: FunctionSpec,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        /// Closed form for b̃: zero or radial.
        #[arg(long, value_parser = parse_closed_form)]
        closed_form: Option<BClosedForm>,
        /// Expect the verdict to be negative.
        #[arg(long)]
        expect_false: bool,
    },
    /// Cartan residuals of measured spectra on a surface, plus synthetic checks.
    Cartan {
        #[command(flatten)]
        metric: MetricArgs,
        /// Surface whose measured spectrum is also checked, same syntax as for `focal`.
        #[arg(long)]
        surface: Option<String>,
    },
    /// Killing classification, reversible torsion and S-curvature of a Randers metric.
    RandersAudit(MetricArgs),
}

fn parse_function(s: &str) -> Result<FunctionSpec, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown function {s:?}"))
}

fn parse_closed_form(s: &str) -> Result<BClosedForm, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown closed form {s:?}"))
}

fn check(name: CheckName) -> CheckFile {
    CheckFile {
        name,
        label: None,
        tolerance: None,
        metric: None,
        surface: None,
        count: None,
        params: CheckParams::default(),
    }
}

fn adhoc(id: &str, m: &MetricArgs, surface: Option<&str>, checks: Vec<CheckFile>) -> Result<Scenario, ConfigError> {
    let surface = surface.map(SurfaceSpec::parse).transpose()?;
    scenario::resolve(ScenarioFile {
        id: id.to_string(),
        description: String::new(),
        metric: m.metric.clone(),
        surface,
        sampling: Sampling {
            count: m.count.unwrap_or(scenario::DEFAULT_COUNT),
            seed: 0,
        },
        checks,
        output: Default::default(),
    })
}

fn with_params(name: CheckName, params: CheckParams) -> CheckFile {
    CheckFile { params, ..check(name) }
}

fn build(verb: &Verb) -> Result<Scenario, ConfigError> {
    use CheckName::*;
    match verb {
        Verb::Run { scenario } => load_scenario(scenario),
        Verb::Tensors(m) => adhoc(
            "tensors",
            m,
            None,
            [TensorOracle, GContraction, ClContraction, SprayHomogeneity, GammaContraction, LegendreRoundtrip]
                .map(check)
                .into(),
        ),
        Verb::Geodesic(m) => {
            let mut checks = vec![check(SpeedDrift), check(TransportPairing)];
            let spec = MetricSpec::parse(&m.metric, "metric")?;
            if spec.minkowski_norm().is_some() || spec.is_euclidean() {
                checks.insert(0, check(GeodesicStraight));
            }
            adhoc("geodesic", m, None, checks)
        }
        Verb::Focal { metric, surface } => {
            let params = CheckParams { s_max: surface.s_max, ..Default::default() };
            adhoc("focal", metric, Some(&surface.surface), vec![with_params(FocalDetect, params)])
        }
        Verb::Tube { metric, surface, points } => {
            let params = CheckParams { s_max: surface.s_max, points: *points, ..Default::default() };
            adhoc("tube", metric, Some(&surface.surface), vec![with_params(TubeCurvature, params)])
        }
        Verb::Isoparam { metric, function, levels, closed_form, expect_false } => {
            let params = CheckParams {
                function: Some(*function),
                levels: Some(levels.clone()),
                b_closed_form: *closed_form,
                verdict: Some(!expect_false),
                ..Default::default()
            };
            adhoc("isoparam", metric, None, vec![with_params(Isoparametric, params)])
        }
        Verb::Cartan { metric, surface } => {
            let mut checks = vec![check(CartanSynthetic), check(CartanDetect), check(Spacing), check(MultiplicityPattern), check(CountBound)];
            if surface.is_some() {
                checks.insert(0, check(Cartan));
            }
            adhoc("cartan", metric, surface.as_deref(), checks)
        }
        Verb::RandersAudit(m) => {
            let spec = MetricSpec::parse(&m.metric, "metric")?;
            let checks = if spec.id == CatalogId::RandersDilation {
                [TorsionHomothetic, SCurvatureConstant]
            } else {
                [TorsionAudit, SCurvatureZero]
            };
            adhoc("randers-audit", m, None, checks.map(check).into())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut scenario = match build(&cli.verb) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        scenario.reseed(seed);
    }
    if !(cli.tol_scale > 0.0) {
        eprintln!("error: --tol-scale must be positive");
        return ExitCode::from(2);
    }
    scenario.scale_tolerances(cli.tol_scale);
    let report = run_scenario(&scenario);
    print!("{}", summary(&report));
    let formats = if cli.format.is_empty() { scenario.formats.clone() } else { cli.format.clone() };
    if let Some(dir) = cli.out.as_ref().or(scenario.output_dir.as_ref()) {
        match report.emit(dir, &formats) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
