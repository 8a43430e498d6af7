use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;

use curvmeas::boundary::{build_boundary_with_tolerance, check_general_position, OffsetBoundary};
use curvmeas::distance::{estimate_mu_reach, sample_critical_function};
use curvmeas::geometry::DEFAULT_TOLERANCE;
use curvmeas::io::{
    export_colored_mesh, read_cloud_with_tolerance, BoundaryStats, CellValues, KernelSpec, PerPointRow,
    ResultDocument, RunConfig,
};
use curvmeas::measures::{default_eta, eval_measures, per_point_curvature_with_eta, MeasureKind};
use curvmeas::stability::{run_stability_experiment_with_eta, PerturbationMode, ReferenceShape};
use curvmeas::{CurvError, PointCloud};

#[derive(Parser, Debug)]
#[command(name = "curvmeas", version, about = "Curvature measures of unions of balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Offset radius.
    #[arg(long, short = 'r')]
    radius: f64,
    /// Patch diameter for face integration (default radius/50).
    #[arg(long)]
    eta: Option<f64>,
    /// Test function: const1 or hat:cx,cy,cz,rho.
    #[arg(long, default_value = "const1")]
    kernel: KernelSpec,
    /// Coincidence tolerance for points and degeneracy checks.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// General-position report and a critical-function sweep.
    Check {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Level for the mu-reach estimate.
        #[arg(long)]
        mu: Option<f64>,
        /// Number of sampled radii in (0, radius].
        #[arg(long, default_value_t = 24)]
        sweep_radii: usize,
        #[arg(long, default_value_t = 64)]
        probes: usize,
    },
    /// Builds the offset boundary and prints its statistics.
    Boundary {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Integrates the curvature measures against the kernel.
    Measure {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also report per-point mean and Gaussian measures of hats of this radius.
        #[arg(long)]
        per_point: Option<f64>,
        /// Omit the per-cell table.
        #[arg(long)]
        totals_only: bool,
    },
    /// Hausdorff-stability sweep on a generated reference shape.
    Stability {
        #[command(flatten)]
        common: Common,
        /// segment, sphere, torus or cube_torus.
        #[arg(long, default_value = "segment")]
        shape: String,
        /// Sample count of the shape.
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// Segment length.
        #[arg(long, default_value_t = 2.0)]
        length: f64,
        /// Height of the segment outlier (0 for none).
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        /// jitter, outlier or decimate.
        #[arg(long, default_value = "outlier")]
        mode: PerturbationMode,
        /// Perturbation sizes, comma separated, as multiples of the radius.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2])]
        epsilons: Vec<f64>,
        /// Use --kernel instead of a hat of radius r at the perturbation site.
        #[arg(long)]
        explicit_kernel: bool,
    },
    /// Writes a tessellated mesh colored by a measure.
    Export {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
        /// Measure used for the face colors: phi_h, phi_g, h_bar or h_tilde (traces).
        #[arg(long, default_value = "phi_h")]
        color: MeasureKind,
        /// Color each face by the per-point measure of its sphere, with hats of this radius.
        #[arg(long)]
        per_point: Option<f64>,
    },
}

enum Failure {
    Usage(String),
    Data(CurvError),
    Internal(String),
}

impl From<CurvError> for Failure {
    fn from(e: CurvError) -> Self {
        if e.is_data_error() {
            Failure::Data(e)
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn kind_name(e: &CurvError) -> &'static str {
    match e {
        CurvError::DegeneratePair(..) | CurvError::DegenerateTriple(_) | CurvError::Tangent(_) => "degenerate",
        CurvError::GeneralPosition(_) => "general_position",
        CurvError::InvalidParameter(_) => "invalid_parameter",
        CurvError::Unsupported(_) => "unsupported",
        CurvError::Domain(_) => "domain",
        CurvError::InsufficientSignal(_) => "insufficient_signal",
        CurvError::EmptyBoundary => "empty_boundary",
        CurvError::Parse { .. } => "parse",
        CurvError::DuplicatePoint { .. } => "duplicate_point",
        CurvError::Io(_) => "io",
        CurvError::Json(_) => "json",
        CurvError::InvalidSphericalTriangle(..) | CurvError::UnclosedFace(_) => "geometry",
        CurvError::Internal(_) => "internal",
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let (code, body) = match f {
        Failure::Usage(msg) => {
            eprintln!("{}", Cli::command().render_usage());
            (1, json!({ "kind": "usage", "message": msg }))
        }
        Failure::Data(e) => {
            let mut body = json!({ "kind": kind_name(&e), "message": e.to_string() });
            match &e {
                CurvError::GeneralPosition(report) => body["report"] = json!(report),
                CurvError::Parse { location, .. } | CurvError::DuplicatePoint { location, .. } => {
                    body["location"] = json!(location)
                }
                _ => {}
            }
            (2, body)
        }
        Failure::Internal(msg) => (3, json!({ "kind": "internal", "message": msg })),
    };
    eprintln!("{}", json!({ "error": body, "exit_code": code }));
    ExitCode::from(code)
}

fn config(command: &str, input: Option<&PathBuf>, c: &Common) -> Result<RunConfig, Failure> {
    let cfg = RunConfig {
        command: command.into(),
        input_path: input.cloned(),
        radius: c.radius,
        eta: c.eta.unwrap_or_else(|| default_eta(c.radius)),
        kernel: c.kernel,
        measures: MeasureKind::ALL.to_vec(),
        tolerance: c.tolerance,
        seed: c.seed,
        out_json: c.out.clone(),
        out_mesh: None,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn emit(doc: &ResultDocument, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => doc.write(path)?,
        None => print!("{}", doc.to_json()?),
    }
    Ok(())
}

fn load(path: &PathBuf, cfg: &RunConfig) -> Result<PointCloud, Failure> {
    if !path.exists() {
        return Err(Failure::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(read_cloud_with_tolerance(path, None, cfg.tolerance)?.reindexed(cfg.radius))
}

/// Rejects degenerate input with the full report before building.
fn boundary_of(cloud: &PointCloud, cfg: &RunConfig) -> Result<OffsetBoundary, Failure> {
    let report = check_general_position(cloud, cfg.radius, cfg.tolerance);
    if !report.ok {
        return Err(Failure::Data(CurvError::GeneralPosition(report)));
    }
    Ok(build_boundary_with_tolerance(cloud, cfg.radius, cfg.tolerance)?)
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Check { input, common, mu, sweep_radii, probes } => {
            let cfg = config("check", Some(&input), &common)?;
            let cloud = load(&input, &cfg)?;
            let mut doc = ResultDocument::new(cfg.clone());
            let report = check_general_position(&cloud, cfg.radius, cfg.tolerance);
            let degenerate = !report.ok;
            doc.general_position = Some(report);
            let r_min = cfg.radius / sweep_radii.max(1) as f64;
            let sample = sample_critical_function(&cloud, r_min, cfg.radius, sweep_radii, probes)?;
            if let Some(mu) = mu {
                doc.mu_reach = Some(estimate_mu_reach(&sample, mu));
            }
            doc.critical_function = Some(sample);
            emit(&doc, &common.out)?;
            Ok(ExitCode::from(if degenerate { 2 } else { 0 }))
        }
        Command::Boundary { input, common } => {
            let cfg = config("boundary", Some(&input), &common)?;
            let cloud = load(&input, &cfg)?;
            let b = boundary_of(&cloud, &cfg)?;
            let mut doc = ResultDocument::new(cfg);
            doc.general_position = Some(check_general_position(&cloud, b.r, doc.config.tolerance));
            doc.boundary = Some(BoundaryStats::of(&b));
            emit(&doc, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Measure { input, common, per_point, totals_only } => {
            let cfg = config("measure", Some(&input), &common)?;
            let cloud = load(&input, &cfg)?;
            let b = boundary_of(&cloud, &cfg)?;
            let mut report = eval_measures(&b, &cfg.kernel.kernel()?, cfg.eta)?;
            if totals_only {
                report.per_cell.clear();
            }
            let mut doc = ResultDocument::new(cfg.clone());
            doc.boundary = Some(BoundaryStats::of(&b));
            doc.measures.push(report);
            if let Some(rho) = per_point {
                let values = per_point_curvature_with_eta(&b, &cloud, rho, cfg.eta)?;
                doc.per_point = Some(
                    values
                        .into_iter()
                        .enumerate()
                        .map(|(point, (mean, gaussian))| PerPointRow { point, mean, gaussian })
                        .collect(),
                );
            }
            emit(&doc, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stability { common, shape, samples, length, offset, mode, epsilons, explicit_kernel } => {
            let cfg = config("stability", None, &common)?;
            let shape = match shape.as_str() {
                "segment" => ReferenceShape::SegmentPlusOutlier { length, samples, offset },
                "sphere" => ReferenceShape::SphereSampling { n: samples },
                "torus" => ReferenceShape::TorusSampling { n: samples, r_major: 1.0, r_minor: 0.4 },
                "cube_torus" => ReferenceShape::CubeUnionTorus { n: samples },
                other => return Err(Failure::Usage(format!("unknown shape {other:?}"))),
            };
            let kernel = if explicit_kernel {
                cfg.kernel.kernel()?
            } else {
                let reference = shape.sample(cfg.seed)?;
                shape.localized_kernel(&reference.cloud, cfg.radius)?
            };
            let eps: Vec<f64> = epsilons.iter().map(|e| e * cfg.radius).collect();
            let run = run_stability_experiment_with_eta(&shape, cfg.radius, &kernel, &eps, mode, cfg.seed, cfg.eta)?;
            let mut doc = ResultDocument::new(cfg);
            doc.stability = Some(run);
            emit(&doc, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { input, common, mesh, color, per_point } => {
            let mut cfg = config("export", Some(&input), &common)?;
            cfg.out_mesh = Some(mesh.clone());
            let cloud = load(&input, &cfg)?;
            let b = boundary_of(&cloud, &cfg)?;
            let report = eval_measures(&b, &cfg.kernel.kernel()?, cfg.eta)?;
            let values = match per_point {
                Some(rho) => {
                    let v = per_point_curvature_with_eta(&b, &cloud, rho, cfg.eta)?;
                    CellValues::PerPoint(
                        v.into_iter().map(|(h, g)| if color == MeasureKind::PhiG { g } else { h }).collect(),
                    )
                }
                None => CellValues::from_report(&b, &report, color),
            };
            export_colored_mesh(&b, &values, cfg.eta, &mesh)?;
            let mut doc = ResultDocument::new(cfg);
            doc.boundary = Some(BoundaryStats::of(&b));
            let mut totals = report;
            totals.per_cell.clear();
            doc.measures.push(totals);
            emit(&doc, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn threads_of(c: &Command) -> Option<usize> {
    match c {
        Command::Check { common, .. }
        | Command::Boundary { common, .. }
        | Command::Measure { common, .. }
        | Command::Stability { common, .. }
        | Command::Export { common, .. } => common.threads,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return report_failure(Failure::Usage(e.kind().to_string()));
        }
    };
    if let Some(n) = threads_of(&cli.command) {
        if n == 0 {
            return report_failure(Failure::Usage("--threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report_failure(Failure::Internal(e.to_string()));
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(f) => report_failure(f),
    }
}
