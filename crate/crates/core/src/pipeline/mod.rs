//! End-to-end pipelines: every stage is a hypothesis of the next, so a
//! failing stage aborts the run with its name and a witness.

pub mod config;
pub mod lipschitz;
pub mod quasisymmetric;
pub mod report;

use std::time::Instant;

use log::{debug, warn};

pub use config::{ExperimentConfig, Overrides, OutputPaths};
pub use lipschitz::run_lipschitz_pipeline;
pub use quasisymmetric::run_quasisymmetric_pipeline;
pub use report::{emit_all, emit_report, loglog_slope, EpsilonRecord, GhRecord, ReportFormat, RunReport, Verdict};

use crate::distortion::BoundCheck;
use crate::error::{Error, Result};
use crate::estimation::{gh_upper_identity, gh_via_common_net};
use crate::mesh::{build_mesh, geodesic_metric, make_test_metric, MeshManifold};
use crate::metric::{FiniteMetricSpace, PointId};
use report::MeshSummary;

pub(crate) struct Setup {
    pub mesh: MeshManifold,
    pub d_g: FiniteMetricSpace,
    pub d: FiniteMetricSpace,
    pub warnings: Vec<String>,
}

pub(crate) fn prepare(config: &ExperimentConfig) -> Result<Setup> {
    config.validate()?;
    let mesh = build_mesh(config.mesh)?;
    let d_g = geodesic_metric(&mesh)?;
    let d = make_test_metric(&mesh, &d_g, &config.target)?;
    let mut warnings = Vec::new();
    if let Some(&smallest) = config.epsilons.last() {
        if mesh.mesh_scale >= smallest / 4.0 {
            warnings.push(format!(
                "mesh scale {} is not below a quarter of the smallest epsilon {smallest}",
                mesh.mesh_scale
            ));
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Setup { mesh, d_g, d, warnings })
}

impl Setup {
    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            kind: self.mesh.kind(),
            dim: self.mesh.dim(),
            vertices: self.mesh.len(),
            mesh_scale: self.mesh.mesh_scale,
        }
    }
}

/// Tags an error with the stage it came from.
pub(crate) fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::StageFailed { .. } => e,
        Error::Precondition { message, witness } => Error::StageFailed { stage: name.into(), message, witness },
        other => Error::StageFailed { stage: name.into(), message: other.to_string(), witness: vec![] },
    })
}

/// [`stage`], with the elapsed time logged at debug level.
pub(crate) fn timed<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let started = Instant::now();
    let out = stage(name, f());
    debug!("{name}: {:.2?}", started.elapsed());
    out
}

pub(crate) fn require(name: &str, check: &BoundCheck) -> Result<()> {
    if check.ok {
        return Ok(());
    }
    Err(Error::StageFailed {
        stage: name.into(),
        message: format!(
            "margin {:.6e} below tolerance (constant {:.6e}, observed {:.6e}, {} violating pairs)",
            check.margin(),
            check.constant,
            check.observed,
            check.violations
        ),
        witness: check.witness.map(|(a, b)| vec![a, b]).unwrap_or_default(),
    })
}

pub(crate) fn gh_record(
    d: &FiniteMetricSpace,
    approx: &FiniteMetricSpace,
    net: &[PointId],
    epsilon: f64,
    envelope: f64,
    envelope_rule: &str,
    mu_envelope: Option<f64>,
) -> Result<GhRecord> {
    let common = stage("gh_bounds", gh_via_common_net(d, approx, net, epsilon, None))?;
    let identity_upper = stage("gh_bounds", gh_upper_identity(d, approx))?;
    Ok(GhRecord {
        lower: common.bound.lower,
        identity_upper,
        common_net_upper: common.bound.upper,
        upper: identity_upper.min(common.bound.upper),
        envelope,
        envelope_rule: envelope_rule.into(),
        mu_envelope,
    })
}
