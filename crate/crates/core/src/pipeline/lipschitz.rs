//! Bi-Lipschitz targets: a global scaling of `d_g` glued to `d` on a net.

use std::time::Instant;

use log::info;

use super::report::{EpsilonRecord, RunReport, Verdict};
use super::{gh_record, prepare, stage, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimation::bilipschitz_constant;
use crate::gluing::{glue, verify_bilipschitz_comparison, verify_local_isometry};
use crate::nets::{greedy_net, ScanOrder};

pub fn run_lipschitz_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    let setup = prepare(config)?;
    let (d_g, d) = (&setup.d_g, &setup.d);
    let measured = stage("measure_lipschitz", bilipschitz_constant(d_g, d))?;
    let l = config.overrides.l.unwrap_or(measured);
    let ambient = stage("scale", d_g.scaled(l))?;

    let mut records = Vec::with_capacity(config.epsilons.len());
    for &eps in &config.epsilons {
        let started = Instant::now();
        let net = stage("net", greedy_net(&ambient, eps, ScanOrder::Seeded(config.seed)))?;
        let d_on_s = d.restrict(&net.members)?;
        let ambient_on_s = ambient.restrict(&net.members)?;
        let excess = d_on_s
            .raw()
            .iter()
            .zip(ambient_on_s.raw())
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .fold(0.0, f64::max);
        let domination = Verdict::at_most(
            "net_domination",
            excess,
            1.0 + 1e-9,
            "largest d / (L d_g) over net pairs",
        );
        if !domination.ok {
            return Err(Error::StageFailed {
                stage: "net_domination".into(),
                message: format!("d exceeds L·d_g on the net by a factor {excess}"),
                witness: vec![],
            });
        }

        let glued = stage("glue", glue(&ambient, &net.members, &d_on_s))?;
        let mut isometry = verify_local_isometry(&glued, 0.0);
        isometry.ok = isometry.observed_radius >= isometry.separation;
        let comparison = stage("bilipschitz_comparison", verify_bilipschitz_comparison(&glued, l))?;
        if !comparison.ok {
            return Err(Error::StageFailed {
                stage: "bilipschitz_comparison".into(),
                message: format!("worst ratio {} exceeds L = {l}", comparison.worst_ratio),
                witness: comparison.witness.map(|(a, b)| vec![a, b]).unwrap_or_default(),
            });
        }
        let to_geodesic = bilipschitz_constant(d_g, &glued.result)?;

        let envelope = 2.0 * eps + setup.mesh.mesh_scale;
        let gh = gh_record(d, &glued.result, &net.members, eps, envelope, "2*eps + mesh_scale", None)?;
        let verdicts = vec![
            domination,
            Verdict {
                name: "local_isometry".into(),
                ok: isometry.ok,
                bound: isometry.separation,
                observed: isometry.observed_radius,
                detail: format!("{} pairs shortened", isometry.changed_pairs),
            },
            Verdict::at_most("bilipschitz_to_geodesic", to_geodesic, l * (1.0 + 1e-9), "measured against L"),
            Verdict::at_most("gh_envelope", gh.upper, envelope, "GH upper bound against 2*eps + mesh_scale"),
        ];
        let ok = verdicts.iter().all(|v| v.ok);
        info!("lipschitz eps = {eps}: {} net points, ok = {ok}, {:.2?}", net.len(), started.elapsed());
        records.push(EpsilonRecord {
            epsilon: eps,
            net_size: net.len(),
            k_observed: None,
            r: None,
            c: None,
            l,
            lambda_min: None,
            lambda_max: None,
            eta: None,
            eta2: None,
            measured_lipschitz: Some(to_geodesic),
            checks: vec![],
            chain: None,
            local_isometry: isometry,
            bilipschitz: Some(comparison),
            gh,
            field: None,
            verdicts,
            ok,
        });
    }

    let ok = records.iter().all(|r| r.ok);
    Ok(RunReport {
        pipeline: "lipschitz".into(),
        config: config.clone(),
        mesh: setup.summary(),
        target_lipschitz: Some(measured),
        hoelder: None,
        warnings: setup.warnings,
        records,
        verdicts: vec![],
        ok,
    })
}
