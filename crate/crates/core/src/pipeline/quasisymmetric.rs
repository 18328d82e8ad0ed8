//! Quasisymmetric targets: a conformal rescaling of `d_g` by the smoothed
//! distortion field, glued to `d` on an ε/2-net.

use std::time::Instant;

use log::{info, warn};

use super::report::{EpsilonRecord, RunReport, Verdict};
use super::{gh_record, prepare, require, timed, ExperimentConfig};
use crate::distortion::{
    build_d_epsilon, build_rho_epsilon, compute_lambda, comparison_constant, smooth_lambda, verify_adjacency_inequality,
    verify_annular_bound, verify_ball_bound, verify_chain_argument, verify_local_comparison, verify_sphere_bound,
};
use crate::error::{Error, Result};
use crate::estimation::{fit_hoelder, fit_modulus, quotient_front, ModulusFamily, TripleSampling};
use crate::gluing::{glue, verify_local_isometry};
use crate::nets::{build_approximation, greedy_net, ScanOrder};

/// Ball points kept per center in the local comparison scan.
const COMPARISON_POINTS: usize = 64;
/// Net points used as chain sources.
const CHAIN_SOURCES: usize = 16;
/// Allowed spread of the fitted η₂ constants across the schedule.
pub const ETA2_UNIFORMITY: f64 = 3.0;

pub fn run_quasisymmetric_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    let setup = prepare(config)?;
    let (mesh, d_g, d) = (&setup.mesh, &setup.d_g, &setup.d);
    let mut warnings = setup.warnings.clone();
    let hoelder = timed("fit_hoelder", || fit_hoelder(d_g, d))?;

    let mut records = Vec::with_capacity(config.epsilons.len());
    for &eps in &config.epsilons {
        let started = Instant::now();
        let net = timed("net", || greedy_net(d_g, eps / 2.0, ScanOrder::Seeded(config.seed)))?;
        let members = net.indices();
        let approx = timed("approximation", || build_approximation(d_g, &net))?;
        let k = approx.k_observed.ok_or_else(|| Error::StageFailed {
            stage: "approximation".into(),
            message: format!("no K up to {} satisfies all four conditions", net.len() + 1),
            witness: vec![],
        })?;
        let r = config.overrides.r.unwrap_or(2.0 * (2.0 * k as f64 + 1.0));

        let sampling = TripleSampling::auto(d_g.len(), config.seed, members.clone());
        let front = timed("fit_eta", || quotient_front(d_g, d, &sampling))?;
        let eta = timed("fit_eta", || fit_modulus(&front.quotients, ModulusFamily::PowerPair))?;
        let eta_fn = |t: f64| eta.eval(t);
        let c = config.overrides.c.unwrap_or_else(|| comparison_constant(&eta_fn, r));
        if !c.is_finite() {
            return Err(Error::StageFailed {
                stage: "constants".into(),
                message: format!("C = η(1)²η(16R)⁴ overflows for R = {r}"),
                witness: vec![],
            });
        }

        let raw = timed("lambda", || compute_lambda(d_g, d, eps))?;
        let field = timed("smoothing", || smooth_lambda(&raw, mesh, config.smoothing_rounds))?;

        let sphere = timed("sphere_bound", || verify_sphere_bound(d_g, d, &field, &eta_fn))?;
        require("sphere_bound", &sphere)?;
        let ball = timed("ball_bound", || verify_ball_bound(d_g, &field, r, &eta_fn))?;
        require("ball_bound", &ball)?;
        let annular = timed("annular_bound", || verify_annular_bound(d_g, &field, r, &eta_fn))?;
        if !annular.ok {
            let w = format!("eps = {eps}: annular ratio {} exceeds η(1)η(R)² = {}", annular.observed, annular.constant);
            warn!("{w}");
            warnings.push(w);
        }
        let d_eps = timed("local_comparison", || build_d_epsilon(mesh, &field))?;
        let local = timed("local_comparison", || verify_local_comparison(d_g, &d_eps.metric, &field, &members, r, c, COMPARISON_POINTS),
        )?;
        require("local_comparison", &local)?;
        drop(d_eps);

        let rho = timed("rho_epsilon", || build_rho_epsilon(mesh, &field, c))?;
        let adjacency = timed("adjacency", || verify_adjacency_inequality(d_g, d, &rho.metric, eps, c, &eta_fn))?;
        require("adjacency", &adjacency)?;
        let l = config.overrides.l.unwrap_or(adjacency.constant);
        let chain = timed("chain_argument", || verify_chain_argument(mesh, &rho, d_g, d, &members, eps, CHAIN_SOURCES))?;
        if !chain.ok {
            return Err(Error::StageFailed {
                stage: "chain_argument".into(),
                message: format!(
                    "domination margin {:.6e}, chain margin {:.6e}, slack {} (limit {})",
                    chain.domination.margin(),
                    chain.chains.margin(),
                    chain.max_slack,
                    chain.slack_limit
                ),
                witness: chain.domination.witness.or(chain.chains.witness).map(|(a, b)| vec![a, b]).unwrap_or_default(),
            });
        }

        let d_on_s = d.restrict(&net.members)?;
        let glued = timed("glue", || glue(&rho.metric, &net.members, &d_on_s))?;
        drop(rho);
        let mut isometry = verify_local_isometry(&glued, 0.0);
        isometry.ok = isometry.observed_radius >= isometry.separation;
        if !isometry.ok {
            return Err(Error::StageFailed {
                stage: "local_isometry".into(),
                message: format!("pair at ρ_ε-distance {} was shortened", isometry.observed_radius),
                witness: isometry.witness.map(|(a, b)| vec![a, b]).unwrap_or_default(),
            });
        }
        let result = glued.result;
        let front2 = timed("fit_eta2", || quotient_front(d_g, &result, &sampling))?;
        let eta2 = timed("fit_eta2", || fit_modulus(&front2.quotients, ModulusFamily::PowerPair))?;

        let envelope = 2.0 * hoelder.c * eps.powf(hoelder.alpha);
        let mu = c.max(1.0) * raw.max();
        let gh = gh_record(d, &result, &net.members, eps, envelope, "2*C'*eps^alpha", Some(2.0 * mu * eps))?;

        let checks = vec![sphere, ball, annular, local, adjacency];
        let mut verdicts: Vec<Verdict> =
            checks.iter().filter(|c| c.name != "annular_bound").map(Verdict::from_check).collect();
        verdicts.push(Verdict {
            name: "chain_argument".into(),
            ok: chain.ok,
            bound: chain.slack_limit,
            observed: chain.max_slack,
            detail: format!("{} chains, domination margin {:.6e}", chain.chains.checked, chain.domination.margin()),
        });
        verdicts.push(Verdict {
            name: "local_isometry".into(),
            ok: isometry.ok,
            bound: isometry.separation,
            observed: isometry.observed_radius,
            detail: format!("{} pairs shortened", isometry.changed_pairs),
        });
        verdicts.push(Verdict::at_most("gh_envelope", gh.upper, envelope, "GH upper bound against 2*C'*eps^alpha"));
        let ok = verdicts.iter().all(|v| v.ok);
        info!(
            "quasisymmetric eps = {eps}: {} net points, K = {k}, C = {c:.3e}, ok = {ok}, {:.2?}",
            net.len(),
            started.elapsed()
        );
        records.push(EpsilonRecord {
            epsilon: eps,
            net_size: net.len(),
            k_observed: Some(k),
            r: Some(r),
            c: Some(c),
            l,
            lambda_min: Some(raw.min()),
            lambda_max: Some(raw.max()),
            eta: Some(eta),
            eta2: Some(eta2),
            measured_lipschitz: None,
            checks,
            chain: Some(chain),
            local_isometry: isometry,
            bilipschitz: None,
            gh,
            field: Some(field),
            verdicts,
            ok,
        });
    }

    let mut verdicts = Vec::new();
    if records.len() >= 2 {
        let decreasing = records.windows(2).all(|w| w[1].gh.upper < w[0].gh.upper);
        verdicts.push(Verdict {
            name: "gh_decreasing".into(),
            ok: decreasing,
            bound: 0.0,
            observed: records.windows(2).map(|w| w[1].gh.upper - w[0].gh.upper).fold(f64::NEG_INFINITY, f64::max),
            detail: "largest step of the GH upper bound along the schedule".into(),
        });
        let cs: Vec<f64> = records.iter().filter_map(|r| r.eta2.as_ref().map(|f| f.c)).collect();
        let spread = cs.iter().copied().fold(0.0, f64::max) / cs.iter().copied().fold(f64::INFINITY, f64::min);
        verdicts.push(Verdict::at_most(
            "eta2_uniformity",
            spread,
            ETA2_UNIFORMITY,
            "ratio of largest to smallest fitted eta2 constant",
        ));
    }
    let ok = records.iter().all(|r| r.ok) && verdicts.iter().all(|v| v.ok);
    Ok(RunReport {
        pipeline: "quasisymmetric".into(),
        config: config.clone(),
        mesh: setup.summary(),
        target_lipschitz: None,
        hoelder: Some(hoelder),
        warnings,
        records,
        verdicts,
        ok,
    })
}
