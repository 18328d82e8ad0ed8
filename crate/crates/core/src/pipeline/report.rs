//! Run reports and their three renderings: a CSV table, a JSON document
//! and an SVG log–log plot.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::distortion::{BoundCheck, ChainCheck, DistortionField};
use crate::error::Result;
use crate::estimation::{HoelderFit, ModulusFit};
use crate::gluing::{BiLipschitzVerdict, LocalIsometryVerdict};
use crate::mesh::MeshKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub ok: bool,
    #[serde(with = "crate::extended")]
    pub bound: f64,
    #[serde(with = "crate::extended")]
    pub observed: f64,
    pub detail: String,
}

impl Verdict {
    /// Passes when `observed ≤ bound`.
    pub fn at_most(name: &str, observed: f64, bound: f64, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), ok: observed <= bound, bound, observed, detail: detail.into() }
    }

    pub fn from_check(check: &BoundCheck) -> Self {
        Verdict {
            name: check.name.clone(),
            ok: check.ok,
            bound: check.constant,
            observed: check.observed,
            detail: format!(
                "margins {:.6e}/{:.6e} over {} pairs, {} below 1",
                check.lower_margin, check.upper_margin, check.checked, check.violations
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub kind: MeshKind,
    pub dim: usize,
    pub vertices: usize,
    pub mesh_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhRecord {
    #[serde(with = "crate::extended")]
    pub lower: f64,
    #[serde(with = "crate::extended")]
    pub identity_upper: f64,
    #[serde(with = "crate::extended")]
    pub common_net_upper: f64,
    #[serde(with = "crate::extended")]
    pub upper: f64,
    /// Envelope the upper bound is checked against.
    #[serde(with = "crate::extended")]
    pub envelope: f64,
    pub envelope_rule: String,
    /// `2 μ_ε ε` with `μ_ε = max{C,1} max λ_ε`, when defined.
    #[serde(with = "crate::extended::option")]
    pub mu_envelope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    pub net_size: usize,
    pub k_observed: Option<usize>,
    #[serde(with = "crate::extended::option")]
    pub r: Option<f64>,
    #[serde(with = "crate::extended::option")]
    pub c: Option<f64>,
    #[serde(with = "crate::extended")]
    pub l: f64,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub eta: Option<ModulusFit>,
    pub eta2: Option<ModulusFit>,
    pub measured_lipschitz: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub chain: Option<ChainCheck>,
    pub local_isometry: LocalIsometryVerdict,
    pub bilipschitz: Option<BiLipschitzVerdict>,
    pub gh: GhRecord,
    pub field: Option<DistortionField>,
    pub verdicts: Vec<Verdict>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub pipeline: String,
    pub config: ExperimentConfig,
    pub mesh: MeshSummary,
    /// Bi-Lipschitz constant between `d_g` and the target.
    pub target_lipschitz: Option<f64>,
    pub hoelder: Option<HoelderFit>,
    pub warnings: Vec<String>,
    pub records: Vec<EpsilonRecord>,
    pub verdicts: Vec<Verdict>,
    pub ok: bool,
}

impl RunReport {
    pub fn all_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.records.iter().flat_map(|r| r.verdicts.iter()).chain(self.verdicts.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Structured,
    Plot,
}

pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text = match format {
        ReportFormat::Table => render_table(report),
        ReportFormat::Structured => report.to_json(),
        ReportFormat::Plot => render_plot(report),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Writes all three renderings to the paths named in the config.
pub fn emit_all(report: &RunReport) -> Result<()> {
    let c = &report.config;
    emit_report(report, ReportFormat::Table, &c.table_path())?;
    emit_report(report, ReportFormat::Structured, &c.document_path())?;
    emit_report(report, ReportFormat::Plot, &c.plot_path())
}

pub const TABLE_HEADER: &str =
    "epsilon,net_size,k_observed,r,c,l,lambda_min,lambda_max,gh_lower,gh_upper,gh_envelope,eta2_c,eta2_alpha,ok";

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_table(report: &RunReport) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in &report.records {
        let row = [
            r.epsilon.to_string(),
            r.net_size.to_string(),
            cell(r.k_observed),
            cell(r.r),
            cell(r.c),
            r.l.to_string(),
            cell(r.lambda_min),
            cell(r.lambda_max),
            r.gh.lower.to_string(),
            r.gh.upper.to_string(),
            r.gh.envelope.to_string(),
            cell(r.eta2.as_ref().map(|f| f.c)),
            cell(r.eta2.as_ref().map(|f| f.alpha)),
            r.ok.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / n, logs.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const PAD: f64 = 60.0;

struct Series<'a> {
    label: &'a str,
    colour: &'a str,
    points: Vec<(f64, f64)>,
}

pub fn render_plot(report: &RunReport) -> String {
    let series = [
        Series {
            label: "GH upper bound",
            colour: "#1f77b4",
            points: report.records.iter().map(|r| (r.epsilon, r.gh.upper)).collect(),
        },
        Series {
            label: "GH envelope",
            colour: "#7f7f7f",
            points: report.records.iter().map(|r| (r.epsilon, r.gh.envelope)).collect(),
        },
        Series {
            label: "eta2 constant",
            colour: "#d62728",
            points: report.records.iter().filter_map(|r| r.eta2.as_ref().map(|f| (r.epsilon, f.c))).collect(),
        },
    ];
    let all: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} pipeline: bounds against epsilon (log-log)</text>"#,
        WIDTH / 2.0,
        report.pipeline
    );
    if all.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }

    let decades = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.map(f64::log10).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
        let (lo, hi) = (lo.floor(), hi.ceil());
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    };
    let (x0, x1) = decades(&mut all.iter().map(|p| p.0));
    let (y0, y1) = decades(&mut all.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);

    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * PAD,
        HEIGHT - 2.0 * PAD
    );
    for k in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{k}</text>"#,
            HEIGHT - PAD,
            HEIGHT - PAD + 5.0,
            HEIGHT - PAD + 20.0
        );
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(k));
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.2}" x2="{PAD}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">1e{k}</text>"#,
            PAD - 5.0,
            PAD - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">epsilon</text>"#, WIDTH / 2.0, HEIGHT - 15.0);

    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{}"/>"#, pts.join(" "), s.colour);
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{}"/>"#, s.colour);
        }
        let slope = loglog_slope(&s.points).map(|v| format!(" (slope {v:.3})")).unwrap_or_default();
        let ly = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{}">{}{}</text>"#,
            PAD + 10.0,
            s.colour,
            s.label,
            slope
        );
    }
    svg.push_str("</svg>\n");
    svg
}
