//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsgeom::distortion::{compute_lambda, verify_ball_bound};
use qsgeom::estimation::{
    diameter_lower_bound, fit_modulus, gh_bruteforce, gh_upper_identity, qs_quotients, quotient_front, ModulusFamily,
    TripleSampling,
};
use qsgeom::gluing::{glue, verify_local_isometry};
use qsgeom::mesh::{build_mesh, geodesic_metric, make_test_metric, MeshSpec, TargetSpec};
use qsgeom::metric::{path_metric_closure, FiniteMetricSpace, PointId};
use qsgeom::nets::{
    build_approximation, greedy_net, valence_bound, valence_radii, verify_conditions, verify_net,
    volume_ratio_constant, ScanOrder,
};
use qsgeom::pipeline::{run_lipschitz_pipeline, run_quasisymmetric_pipeline, ExperimentConfig};

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn run_config(pipeline: &str, epsilons: &str, target: &str) -> ExperimentConfig {
    let text = format!(
        r#"
mesh = {{ kind = "circle", resolution = 2000, size = 1.0 }}
target = {target}
epsilons = {epsilons}
seed = 7

[output]
dir = "{}"
stem = "{pipeline}"
"#,
        std::env::temp_dir().join("qsgeom-acceptance").display()
    );
    ExperimentConfig::from_toml(&text).expect("acceptance config")
}

const SCHEDULE: &str = "[0.4, 0.2, 0.1, 0.05]";

fn random_space(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> FiniteMetricSpace {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(lo..hi);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    let names = (0..n).map(|i| format!("p{i}")).collect();
    path_metric_closure(&FiniteMetricSpace::new("random", names, rows).expect("random table"))
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<PointId> {
    let k = rng.gen_range(1..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut s: Vec<PointId> = idx[..k].iter().map(|&i| PointId(i)).collect();
    s.sort();
    s
}

/// Path closure of `ρ|S` with every entry shrunk by an independent factor.
fn shrunk_on(rng: &mut ChaCha8Rng, rho: &FiniteMetricSpace, s: &[PointId]) -> FiniteMetricSpace {
    let sub = rho.restrict(s).expect("subset");
    let m = sub.len();
    let mut rows = sub.rows();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = rows[i][j] * rng.gen_range(0.05..1.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    path_metric_closure(&FiniteMetricSpace::new("d", sub.points().to_vec(), rows).expect("shrunk table"))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for instance in 0..1000 {
        let n = rng.gen_range(2..=40);
        let rho = random_space(&mut rng, n, 0.1, 10.0);
        let s = random_subset(&mut rng, n);
        let d = shrunk_on(&mut rng, &rho, &s);
        let glued = glue(&rho, &s, &d).map_err(|e| format!("instance {instance}: {e}"))?;
        let axioms = glued.result.check_axioms(glued.result.tolerance());
        ensure!(axioms.is_valid(), "instance {instance}: glued metric fails the axioms: {:?}", axioms.violations().next());
        for x in 0..n {
            for y in 0..n {
                ensure!(glued.result.dist(x, y) <= rho.dist(x, y), "instance {instance}: glued exceeds ambient at ({x},{y})");
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:.2?}");
    Ok(format!("1000 instances in {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0usize;
    for instance in 0..1000 {
        let n = rng.gen_range(2..=40);
        let rho = random_space(&mut rng, n, 0.1, 10.0);
        let s = random_subset(&mut rng, n);
        if s.len() < 2 {
            continue;
        }
        let d = rho.restrict(&s).unwrap().scaled(rng.gen_range(0.1..0.95)).unwrap();
        // gap g: smallest amount by which d undercuts ρ on distinct pairs of S
        let mut g = f64::INFINITY;
        for a in 0..s.len() {
            for b in (a + 1)..s.len() {
                g = g.min(rho.dist(s[a].0, s[b].0) - d.dist(a, b));
            }
        }
        let glued = glue(&rho, &s, &d).map_err(|e| format!("instance {instance}: {e}"))?;
        for x in 0..n {
            for y in 0..n {
                if rho.dist(x, y) < g / 2.0 {
                    checked += 1;
                    ensure!(
                        glued.result.dist(x, y) == rho.dist(x, y),
                        "instance {instance}: pair ({x},{y}) at ρ = {} changed to {}",
                        rho.dist(x, y),
                        glued.result.dist(x, y)
                    );
                }
            }
        }
        ensure!(verify_local_isometry(&glued, g / 2.0).ok, "instance {instance}: verifier disagrees at g/2 = {}", g / 2.0);
    }
    Ok(format!("{checked} pairs below g/2 unchanged"))
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let config = run_config("c3", SCHEDULE, "{ kind = \"scaled\", factor = 2.0 }");
    let report = run_lipschitz_pipeline(&config).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let mut worst_slack = f64::INFINITY;
    for r in &report.records {
        let l = r.measured_lipschitz.ok_or("missing measured L")?;
        ensure!(l <= 2.0 + 1e-6, "eps = {}: measured L = {l}", r.epsilon);
        let envelope = 2.0 * r.epsilon + report.mesh.mesh_scale;
        ensure!(r.gh.upper <= envelope, "eps = {}: GH upper {} > {envelope}", r.epsilon, r.gh.upper);
        worst_slack = worst_slack.min(envelope - r.gh.upper);
    }
    ensure!(report.records.len() == 4, "{} records", report.records.len());
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:.2?}");
    Ok(format!("L <= 2 + 1e-6 and GH within 2eps + mesh_scale (min slack {worst_slack:.3e}) in {elapsed:.2?}"))
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let config = run_config("c4", SCHEDULE, "{ kind = \"snowflake\", alpha = 0.5 }");
    let report = run_quasisymmetric_pipeline(&config).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(600), "took {elapsed:.2?}");
    let hoelder = report.hoelder.as_ref().ok_or("missing Hölder fit")?;
    let uppers: Vec<f64> = report.records.iter().map(|r| r.gh.upper).collect();
    ensure!(uppers.windows(2).all(|w| w[1] < w[0]), "GH upper bounds not strictly decreasing: {uppers:?}");
    let cs: Vec<f64> = report.records.iter().filter_map(|r| r.eta2.as_ref().map(|f| f.c)).collect();
    ensure!(cs.len() == 4, "{} fitted eta2 constants", cs.len());
    let spread = cs.iter().copied().fold(0.0, f64::max) / cs.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(spread <= 3.0, "eta2 constants spread by {spread}");
    for r in &report.records {
        let envelope = 2.0 * hoelder.c * r.epsilon.powf(0.5);
        ensure!(
            r.gh.upper <= envelope,
            "eps = {}: GH upper {:.3e} > 2C'eps^0.5 = {envelope:.3e} (C' = {:.3}, C = {:.3e})",
            r.epsilon,
            r.gh.upper,
            hoelder.c,
            r.c.unwrap_or(f64::NAN)
        );
    }
    Ok(format!("GH within 2C'eps^0.5, decreasing, eta2 spread {spread:.2}, {elapsed:.2?}"))
}

fn criterion_5() -> Outcome {
    let mesh = build_mesh(MeshSpec::circle(1000, 1.0)).map_err(|e| e.to_string())?;
    let d_g = geodesic_metric(&mesh).map_err(|e| e.to_string())?;
    let d = make_test_metric(&mesh, &d_g, &TargetSpec::Snowflake { alpha: 0.5 }).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.05] {
        let field = compute_lambda(&d_g, &d, eps).map_err(|e| e.to_string())?;
        let expected = eps.powf(0.5 - 1.0);
        for (p, &v) in field.values.iter().enumerate() {
            let rel = (v - expected).abs() / expected;
            ensure!(rel <= 0.02, "eps = {eps}, point {p}: lambda {v} vs {expected}");
            worst = worst.max(rel);
        }
    }
    Ok(format!("worst relative error {worst:.3e}"))
}

fn ball_margin(spec: MeshSpec, target: TargetSpec, eps: f64) -> Outcome {
    let mesh = build_mesh(spec).map_err(|e| e.to_string())?;
    let d_g = geodesic_metric(&mesh).map_err(|e| e.to_string())?;
    let d = make_test_metric(&mesh, &d_g, &target).map_err(|e| e.to_string())?;
    let net = greedy_net(&d_g, eps / 2.0, ScanOrder::Seeded(7)).map_err(|e| e.to_string())?;
    let k = build_approximation(&d_g, &net).map_err(|e| e.to_string())?.k_observed.ok_or("no K")?;
    let r = 2.0 * (2.0 * k as f64 + 1.0);
    let sampling = TripleSampling::auto(d_g.len(), 7, net.indices());
    let front = quotient_front(&d_g, &d, &sampling).map_err(|e| e.to_string())?;
    let eta = fit_modulus(&front.quotients, ModulusFamily::PowerPair).map_err(|e| e.to_string())?;
    let field = compute_lambda(&d_g, &d, eps).map_err(|e| e.to_string())?;
    let check = verify_ball_bound(&d_g, &field, r, &|t| eta.eval(t)).map_err(|e| e.to_string())?;
    ensure!(
        check.observed <= check.constant,
        "observed ratio {} exceeds C = {} at {:?}",
        check.observed,
        check.constant,
        check.witness
    );
    Ok(format!(
        "{} pairs, observed {:.4} vs C {:.3e} (margin {:.3e})",
        check.checked,
        check.observed,
        check.constant,
        check.constant / check.observed
    ))
}

fn criterion_6() -> Outcome {
    let circle = ball_margin(MeshSpec::circle(2000, 1.0), TargetSpec::Snowflake { alpha: 0.5 }, 0.05)?;
    let sphere = ball_margin(
        MeshSpec::sphere(3, 1.0),
        TargetSpec::QsPower { center: 0, radius: 1.0, alpha: 0.5 },
        0.4,
    )?;
    Ok(format!("circle: {circle}; sphere: {sphere}"))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for (spec, epsilons) in [(MeshSpec::circle(1000, 1.0), [0.2, 0.1, 0.05]), (MeshSpec::sphere(3, 1.0), [0.8, 0.6, 0.4])] {
        let mesh = build_mesh(spec).map_err(|e| e.to_string())?;
        let d_g = geodesic_metric(&mesh).map_err(|e| e.to_string())?;
        let dim = mesh.dim();
        for eps in epsilons {
            let net = greedy_net(&d_g, eps, ScanOrder::Seeded(7)).map_err(|e| e.to_string())?;
            ensure!(verify_net(&d_g, &net.members, eps).map_err(|e| e.to_string())?.is_ok(), "n = {dim}, eps = {eps}: not a net");
            let approx = build_approximation(&d_g, &net).map_err(|e| e.to_string())?;
            let k = approx.k_observed.ok_or_else(|| format!("n = {dim}, eps = {eps}: no K satisfies A1-A4"))?;
            ensure!(verify_conditions(&approx, k).all_ok(), "n = {dim}, eps = {eps}: conditions fail at K = {k}");
            let m = volume_ratio_constant(&d_g, dim, mesh.total_volume(), &valence_radii(eps));
            let bound = valence_bound(dim, m);
            ensure!(k as f64 <= bound, "n = {dim}, eps = {eps}: K = {k} > 8^n M^2 = {bound}");
            lines.push(format!("n={dim} eps={eps} K={k}<={bound:.1}"));
        }
    }
    Ok(lines.join(", "))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for instance in 0..500 {
        let n = rng.gen_range(1..=6);
        let a = random_space(&mut rng, n, 0.5, 3.0);
        let b = random_space(&mut rng, n, 0.5, 3.0);
        let exact = gh_bruteforce(&a, &b).map_err(|e| e.to_string())?;
        let identity = gh_upper_identity(&a, &b).map_err(|e| e.to_string())?;
        let lower = diameter_lower_bound(&a, &b);
        ensure!(exact.upper <= identity + 1e-12, "instance {instance}: {} > identity {identity}", exact.upper);
        ensure!(exact.upper >= lower - 1e-12, "instance {instance}: {} < diameter bound {lower}", exact.upper);
    }
    let a = FiniteMetricSpace::line(&[0.0, 1.0]).unwrap();
    let b = FiniteMetricSpace::line(&[0.0, 2.0]).unwrap();
    let exact = gh_bruteforce(&a, &b).map_err(|e| e.to_string())?;
    ensure!(exact.upper == 0.5 && exact.lower == 0.5, "{{0,1}} vs {{0,2}} gave [{}, {}]", exact.lower, exact.upper);
    Ok("500 pairs dominated; {0,1} vs {0,2} = 0.5".into())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for instance in 0..100 {
        let n = rng.gen_range(3..=12);
        let l: f64 = rng.gen_range(1.0..=3.0);
        let a = random_space(&mut rng, n, 0.5, 3.0);
        let mut rows = a.rows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rows[i][j] * rng.gen_range(1.0..=l);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        // closing a stretch of a metric keeps it between a and L·a
        let b = path_metric_closure(&FiniteMetricSpace::new("b", a.points().to_vec(), rows).unwrap());
        let qs = qs_quotients(&a, &b, &TripleSampling::Exhaustive).map_err(|e| e.to_string())?;
        let fit = fit_modulus(&qs.quotients, ModulusFamily::Linear).map_err(|e| e.to_string())?;
        ensure!(fit.c <= l * l + 1e-9, "instance {instance}: C = {} > L^2 = {}", fit.c, l * l);
        worst = worst.max(fit.c / (l * l));
    }
    let mut alphas = Vec::new();
    for alpha in [0.3, 0.5, 0.7] {
        let positions: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..5.0)).collect();
        let a = FiniteMetricSpace::line(&positions).unwrap();
        let b = a.map("snowflake", |v| v.powf(alpha)).unwrap();
        let qs = qs_quotients(&a, &b, &TripleSampling::Exhaustive).map_err(|e| e.to_string())?;
        let fit = fit_modulus(&qs.quotients, ModulusFamily::PowerPair).map_err(|e| e.to_string())?;
        ensure!((fit.alpha - alpha).abs() <= 0.02, "snowflake {alpha}: fitted {}", fit.alpha);
        alphas.push(format!("{alpha}->{:.4}", fit.alpha));
    }
    Ok(format!("largest C/L^2 {worst:.4}; snowflake fits {}", alphas.join(" ")))
}

fn criterion_10() -> Outcome {
    let lip = run_config("c10l", SCHEDULE, "{ kind = \"scaled\", factor = 2.0 }");
    let qs = run_config("c10q", "[0.2, 0.1]", "{ kind = \"snowflake\", alpha = 0.5 }");
    let first = (run_lipschitz_pipeline(&lip), run_quasisymmetric_pipeline(&qs));
    let second = (run_lipschitz_pipeline(&lip), run_quasisymmetric_pipeline(&qs));
    let json = |r: qsgeom::Result<qsgeom::pipeline::RunReport>| r.map(|r| r.to_json()).map_err(|e| e.to_string());
    let (a, b) = (json(first.0)?, json(second.0)?);
    ensure!(a == b, "lipschitz reports differ");
    let (c, d) = (json(first.1)?, json(second.1)?);
    ensure!(c == d, "quasisymmetric reports differ");
    Ok(format!("identical reports ({} and {} bytes)", a.len(), c.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gluing is a metric below the ambient", criterion_1),
        ("local isometry below half the gap", criterion_2),
        ("bi-Lipschitz pipeline on the doubled circle", criterion_3),
        ("quasisymmetric pipeline on the snowflake circle", criterion_4),
        ("distortion field of the snowflake circle", criterion_5),
        ("ball bound on circle and sphere", criterion_6),
        ("nets give approximations within the valence bound", criterion_7),
        ("GH brute force between its bounds", criterion_8),
        ("modulus fits of bi-Lipschitz and snowflake pairs", criterion_9),
        ("deterministic reports", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
