use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qsgeom::distortion::{compute_lambda, smooth_lambda};
use qsgeom::estimation::{
    bilipschitz_constant, fit_hoelder, fit_modulus, gh_bruteforce, gh_upper_identity, identity_bound, quotient_front,
    verify_modulus, ModulusFamily, TripleSampling, BRUTEFORCE_LIMIT,
};
use qsgeom::gluing::{glue, verify_bilipschitz_comparison, verify_local_isometry};
use qsgeom::mesh::{build_mesh, geodesic_metric, MeshKind, MeshSpec};
use qsgeom::metric::{FiniteMetricSpace, PointId};
use qsgeom::nets::{
    build_approximation, greedy_net, valence_bound, valence_radii, verify_net, volume_ratio_constant, ScanOrder,
};
use qsgeom::pipeline::{
    emit_all, emit_report, run_lipschitz_pipeline, run_quasisymmetric_pipeline, ExperimentConfig, ReportFormat,
    RunReport,
};
use qsgeom::Result;

#[derive(Parser)]
#[command(name = "qsgeom", version, about = "Nets, glued metrics and quasisymmetry estimates on sampled manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and optionally write it and its geodesic metric.
    Mesh {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Vertex count (circle), grid side (torus) or subdivision level (sphere).
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        size: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        metric: Option<PathBuf>,
    },
    /// Greedy ε-net of a metric file and its approximation conditions.
    Net {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Manifold dimension used for the valence bound.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Total volume of the sampled manifold; enables the valence bound.
        #[arg(long)]
        volume: Option<f64>,
    },
    /// Glue a shortcut metric on a subset into an ambient metric.
    Glue {
        #[arg(long)]
        ambient: PathBuf,
        /// Comma-separated point indices.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
        #[arg(long)]
        shortcut: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distortion field of a target metric at one scale.
    Lambda {
        #[arg(long)]
        geodesic: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Mesh file, needed for smoothing.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a quasisymmetry modulus between two metrics on the same points.
    Fit {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = Family::PowerPair)]
        family: Family,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gromov–Hausdorff bounds between two metric files.
    Gh {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Run the bi-Lipschitz pipeline from a config file.
    PipelineLipschitz {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the quasisymmetric pipeline from a config file.
    PipelineQs {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-render a structured report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Circle,
    Torus,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    PowerPair,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Structured,
    Plot,
}

/// Exit status: 0 when every verdict passes, 1 when one fails, 2 on errors.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print(value: serde_json::Value) {
    say(serde_json::to_string_pretty(&value).expect("json value"));
}

fn write_or_print(text: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Mesh { kind, resolution, size, out, metric } => {
            let kind = match kind {
                Kind::Circle => MeshKind::Circle,
                Kind::Torus => MeshKind::Torus,
                Kind::Sphere => MeshKind::Sphere,
            };
            let mesh = build_mesh(MeshSpec { kind, resolution, size })?;
            if let Some(path) = out {
                mesh.write(&path)?;
            }
            if let Some(path) = metric {
                geodesic_metric(&mesh)?.write(&path)?;
            }
            print(json!({
                "kind": kind,
                "vertices": mesh.len(),
                "edges": mesh.edges.len(),
                "mesh_scale": mesh.mesh_scale,
                "total_volume": mesh.total_volume(),
            }));
            Ok(true)
        }
        Command::Net { metric, epsilon, seed, dim, volume } => {
            let space = FiniteMetricSpace::read(&metric)?;
            let order = seed.map(ScanOrder::Seeded).unwrap_or_default();
            let net = greedy_net(&space, epsilon, order)?;
            let verdict = verify_net(&space, &net.members, epsilon)?;
            let approx = build_approximation(&space, &net)?;
            let m = volume.map(|v| volume_ratio_constant(&space, dim, v, &valence_radii(epsilon)));
            let bound = m.map(|m| valence_bound(dim, m));
            let ok = verdict.is_ok()
                && approx.k_observed.is_some_and(|k| bound.is_none_or(|b| k as f64 <= b));
            print(json!({
                "members": net.indices(),
                "net_ok": verdict.is_ok(),
                "k_observed": approx.k_observed,
                "max_valence": approx.max_valence(),
                "volume_ratio": m,
                "valence_bound": bound,
            }));
            Ok(ok)
        }
        Command::Glue { ambient, subset, shortcut, lipschitz, out } => {
            let rho = FiniteMetricSpace::read(&ambient)?;
            let d = FiniteMetricSpace::read(&shortcut)?;
            let ids: Vec<PointId> = subset.into_iter().map(PointId).collect();
            let glued = glue(&rho, &ids, &d)?;
            let mut isometry = verify_local_isometry(&glued, 0.0);
            isometry.ok = isometry.observed_radius >= isometry.separation;
            let comparison = verify_bilipschitz_comparison(&glued, lipschitz)?;
            if let Some(path) = out {
                glued.result.write(&path)?;
            }
            let ok = isometry.ok && comparison.ok;
            print(json!({ "local_isometry": isometry, "bilipschitz": comparison, "clamped": glued.clamped }));
            Ok(ok)
        }
        Command::Lambda { geodesic, target, epsilon, mesh, rounds, out } => {
            let d_g = FiniteMetricSpace::read(&geodesic)?;
            let d = FiniteMetricSpace::read(&target)?;
            let mut field = compute_lambda(&d_g, &d, epsilon)?;
            if let Some(path) = mesh {
                let mesh = qsgeom::mesh::MeshManifold::from_json(&std::fs::read_to_string(path)?)?;
                field = smooth_lambda(&field, &mesh, rounds)?;
            }
            print(json!({ "epsilon": epsilon, "min": field.min(), "max": field.max(), "points": field.len() }));
            if let Some(path) = out {
                write_or_print(serde_json::to_string_pretty(&field)?, Some(&path))?;
            }
            Ok(true)
        }
        Command::Fit { source, target, family, seed } => {
            let a = FiniteMetricSpace::read(&source)?;
            let b = FiniteMetricSpace::read(&target)?;
            let family = match family {
                Family::PowerPair => ModulusFamily::PowerPair,
                Family::Linear => ModulusFamily::Linear,
            };
            let sampling = TripleSampling::auto(a.len(), seed, vec![]);
            let front = quotient_front(&a, &b, &sampling)?;
            let fit = fit_modulus(&front.quotients, family)?;
            let check = verify_modulus(&a, &b, &sampling, &fit)?;
            print(json!({
                "fit": fit,
                "check": check,
                "triples": front.scanned,
                "bilipschitz": bilipschitz_constant(&a, &b)?,
                "hoelder": fit_hoelder(&a, &b).ok(),
            }));
            Ok(check.violations == 0)
        }
        Command::Gh { a, b } => {
            let a = FiniteMetricSpace::read(&a)?;
            let b = FiniteMetricSpace::read(&b)?;
            let identity = if a.same_points(&b) { Some(identity_bound(&a, &b)?) } else { None };
            let exact = if a.len().max(b.len()) <= BRUTEFORCE_LIMIT { Some(gh_bruteforce(&a, &b)?) } else { None };
            print(json!({
                "identity": identity,
                "identity_upper": if a.same_points(&b) { Some(gh_upper_identity(&a, &b)?) } else { None },
                "bruteforce": exact,
                "diameter_lower": qsgeom::estimation::diameter_lower_bound(&a, &b),
            }));
            Ok(true)
        }
        Command::PipelineLipschitz { config } => finish(run_lipschitz_pipeline(&ExperimentConfig::load(&config)?)?),
        Command::PipelineQs { config } => finish(run_quasisymmetric_pipeline(&ExperimentConfig::load(&config)?)?),
        Command::Report { input, format, out } => {
            let report = RunReport::from_json(&std::fs::read_to_string(&input)?)?;
            let format = match format {
                Format::Table => ReportFormat::Table,
                Format::Structured => ReportFormat::Structured,
                Format::Plot => ReportFormat::Plot,
            };
            match out {
                Some(path) => emit_report(&report, format, &path)?,
                None => {
                    let tmp = match format {
                        ReportFormat::Table => qsgeom::pipeline::report::render_table(&report),
                        ReportFormat::Structured => report.to_json(),
                        ReportFormat::Plot => qsgeom::pipeline::report::render_plot(&report),
                    };
                    write_or_print(tmp, None)?;
                }
            }
            Ok(report.ok)
        }
    }
}

fn finish(report: RunReport) -> Result<bool> {
    emit_all(&report)?;
    for v in report.all_verdicts() {
        say(format_args!("{} {:<26} observed {:.6e} bound {:.6e}", if v.ok { "PASS" } else { "FAIL" }, v.name, v.observed, v.bound));
    }
    for w in &report.warnings {
        say(format_args!("warning: {w}"));
    }
    say(format_args!(
        "{}: {} (table {}, document {}, plot {})",
        report.pipeline,
        if report.ok { "all verdicts pass" } else { "some verdicts fail" },
        report.config.table_path().display(),
        report.config.document_path().display(),
        report.config.plot_path().display()
    ));
    Ok(report.ok)
}
