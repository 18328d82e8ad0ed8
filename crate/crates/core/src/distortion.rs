//! Scale-ε distortion fields and the comparison bounds built on them.
//!
//! `λ_ε(p)` is the largest target distance from `p` to a point within
//! geodesic distance `ε`, divided by `ε`. The verifiers scan sampled pairs
//! and report multiplicative margins: a margin of at least 1 means the bound
//! holds, and a run fails only once a margin drops below `1/(1 + 5%)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{path_from_tree, rescale_metric, rescaled_edge_weights, shortest_path_tree, ConformalWeight, MeshManifold};
use crate::metric::{FiniteMetricSpace, PointId};

/// Relative overshoot of a bound tolerated before a check fails.
pub const VIOLATION_ALLOWANCE: f64 = 0.05;

/// Relative slack on `d_g ≤ ε` so that sums of mesh edges landing on `ε`
/// up to rounding count as inside the closed ball.
const BALL_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionField {
    pub epsilon: f64,
    pub values: Vec<f64>,
    /// Point realising the maximum for each `p`.
    pub argmax: Vec<usize>,
    pub smoothed: Option<Vec<f64>>,
}

impl DistortionField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Smoothed values if present, raw values otherwise.
    pub fn effective(&self) -> &[f64] {
        self.smoothed.as_deref().unwrap_or(&self.values)
    }
}

fn check_pair(d_g: &FiniteMetricSpace, d: &FiniteMetricSpace) -> Result<()> {
    if d_g.same_points(d) {
        Ok(())
    } else {
        Err(Error::domain(format!("metrics have {} and {} points", d_g.len(), d.len())))
    }
}

fn closed_radius(epsilon: f64) -> f64 {
    epsilon * (1.0 + BALL_SLACK)
}

pub fn compute_lambda(d_g: &FiniteMetricSpace, d: &FiniteMetricSpace, epsilon: f64) -> Result<DistortionField> {
    check_pair(d_g, d)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let radius = closed_radius(epsilon);
    let scanned: Vec<(f64, usize, usize)> = (0..d_g.len())
        .into_par_iter()
        .map(|p| {
            let (mut best, mut arg, mut count) = (0.0, p, 0);
            for (q, (&g, &t)) in d_g.row(p).iter().zip(d.row(p)).enumerate() {
                if g <= radius {
                    count += 1;
                    if t > best {
                        best = t;
                        arg = q;
                    }
                }
            }
            (best / epsilon, arg, count)
        })
        .collect();
    if let Some(p) = scanned.iter().position(|s| s.2 < 2) {
        return Err(Error::Resolution(format!(
            "closed {epsilon}-ball around point {p} holds no other point; refine the mesh"
        )));
    }
    Ok(DistortionField {
        epsilon,
        values: scanned.iter().map(|s| s.0).collect(),
        argmax: scanned.iter().map(|s| s.1).collect(),
        smoothed: None,
    })
}

/// Replaces each value by the mean of itself and the average of its mesh
/// neighbours, `rounds` times, then clamps into `[λ/2, 2λ]`.
pub fn smooth_lambda(field: &DistortionField, mesh: &MeshManifold, rounds: usize) -> Result<DistortionField> {
    if mesh.len() != field.len() {
        return Err(Error::domain(format!("field has {} values for {} vertices", field.len(), mesh.len())));
    }
    let mut cur = field.values.clone();
    for _ in 0..rounds {
        cur = (0..cur.len())
            .map(|v| {
                let (sum, k) = mesh.neighbors(v).fold((0.0, 0usize), |(s, k), u| (s + cur[u], k + 1));
                if k == 0 {
                    cur[v]
                } else {
                    0.5 * (cur[v] + sum / k as f64)
                }
            })
            .collect();
    }
    for (s, &v) in cur.iter_mut().zip(&field.values) {
        *s = s.clamp(0.5 * v, 2.0 * v);
    }
    Ok(DistortionField { smoothed: Some(cur), ..field.clone() })
}

/// Largest `|λ(p) − λ(q)|` over mesh edges.
pub fn max_adjacent_gap(field: &DistortionField, mesh: &MeshManifold) -> f64 {
    mesh.edges.iter().map(|e| (field.values[e.a] - field.values[e.b]).abs()).fold(0.0, f64::max)
}

/// Outcome of a two-sided bound scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// The constant the bound is stated with.
    #[serde(with = "crate::extended")]
    pub constant: f64,
    /// Smallest constant that would make every scanned pair pass.
    #[serde(with = "crate::extended")]
    pub observed: f64,
    /// Minimum of `actual / lower bound`.
    #[serde(with = "crate::extended")]
    pub lower_margin: f64,
    /// Minimum of `upper bound / actual`.
    #[serde(with = "crate::extended")]
    pub upper_margin: f64,
    pub checked: usize,
    pub skipped: usize,
    /// Pairs with a margin below 1.
    pub violations: usize,
    pub witness: Option<(usize, usize)>,
    pub ok: bool,
}

impl BoundCheck {
    pub fn margin(&self) -> f64 {
        self.lower_margin.min(self.upper_margin)
    }
}

/// Accumulates margins pair by pair.
#[derive(Clone, Debug)]
struct Tally {
    observed: f64,
    lower: f64,
    upper: f64,
    checked: usize,
    skipped: usize,
    violations: usize,
    witness: Option<(usize, usize)>,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            observed: 0.0,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            checked: 0,
            skipped: 0,
            violations: 0,
            witness: None,
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, pair: (usize, usize), lower: f64, upper: f64, observed: f64) {
        self.checked += 1;
        self.lower = self.lower.min(lower);
        self.upper = self.upper.min(upper);
        self.observed = self.observed.max(observed);
        let m = lower.min(upper);
        if m < 1.0 - 1e-12 {
            self.violations += 1;
        }
        if m < self.worst {
            self.worst = m;
            self.witness = Some(pair);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.observed = self.observed.max(other.observed);
        self.lower = self.lower.min(other.lower);
        self.upper = self.upper.min(other.upper);
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.violations += other.violations;
        if other.worst < self.worst {
            self.worst = other.worst;
            self.witness = other.witness;
        }
        self
    }

    fn finish(mut self, name: &str, constant: f64) -> BoundCheck {
        if self.checked == 0 {
            self.lower = 1.0;
            self.upper = 1.0;
        }
        let margin = self.lower.min(self.upper);
        BoundCheck {
            name: name.to_string(),
            constant,
            observed: self.observed,
            lower_margin: self.lower,
            upper_margin: self.upper,
            checked: self.checked,
            skipped: self.skipped,
            violations: self.violations,
            witness: if self.violations > 0 { self.witness } else { None },
            ok: margin >= 1.0 / (1.0 + VIOLATION_ALLOWANCE),
        }
    }
}

/// Scans every unordered pair `p < q` in parallel.
fn scan_pairs(n: usize, visit: impl Fn(usize, usize, &mut Tally) + Sync) -> Tally {
    (0..n)
        .into_par_iter()
        .map(|p| {
            let mut t = Tally::new();
            for q in (p + 1)..n {
                visit(p, q, &mut t);
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
}

/// `η(ε/d_g)⁻¹ λ(p) ε ≤ d(p,q) ≤ λ(p) ε` on pairs with `0 < d_g ≤ ε`,
/// checked from both endpoints.
pub fn verify_sphere_bound(
    d_g: &FiniteMetricSpace,
    d: &FiniteMetricSpace,
    field: &DistortionField,
    eta: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<BoundCheck> {
    check_pair(d_g, d)?;
    let eps = field.epsilon;
    let radius = closed_radius(eps);
    let tally = scan_pairs(d_g.len(), |p, q, t| {
        let g = d_g.dist(p, q);
        if g > radius {
            return;
        }
        let e = eta(eps / g);
        let v = d.dist(p, q);
        for (a, b) in [(p, q), (q, p)] {
            let top = field.values[a] * eps;
            let low = top / e;
            t.record((a, b), v / low, top / v, (low / v).max(v / top));
        }
    });
    Ok(tally.finish("sphere_bound", 1.0))
}

/// Ball bound constant `η(1)² η(8R)⁴`.
pub fn ball_constant(eta: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    eta(1.0).powi(2) * eta(8.0 * r).powi(4)
}

/// Annular bound constant `η(1) η(R)²`.
pub fn annular_constant(eta: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    eta(1.0) * eta(r).powi(2)
}

/// Local comparison constant `η(1)² η(16R)⁴`, also the factor in `h_ε`.
pub fn comparison_constant(eta: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    eta(1.0).powi(2) * eta(16.0 * r).powi(4)
}

fn ratio_scan(
    d_g: &FiniteMetricSpace,
    field: &DistortionField,
    constant: f64,
    name: &str,
    window: impl Fn(f64) -> bool + Sync,
) -> Result<BoundCheck> {
    if field.len() != d_g.len() {
        return Err(Error::domain("field and metric sizes differ"));
    }
    let tally = scan_pairs(d_g.len(), |p, q, t| {
        if !window(d_g.dist(p, q)) {
            return;
        }
        let (a, b) = (field.values[p], field.values[q]);
        let ratio = (a / b).max(b / a);
        t.record((p, q), constant / ratio, constant / ratio, ratio);
    });
    Ok(tally.finish(name, constant))
}

/// `C⁻¹λ(p) ≤ λ(q) ≤ Cλ(p)` on pairs with `d_g < Rε`, `C = η(1)²η(8R)⁴`.
pub fn verify_ball_bound(
    d_g: &FiniteMetricSpace,
    field: &DistortionField,
    r: f64,
    eta: &dyn Fn(f64) -> f64,
) -> Result<BoundCheck> {
    if !(r >= 1.0) {
        return Err(Error::domain(format!("R must be at least 1, got {r}")));
    }
    let limit = r * field.epsilon;
    ratio_scan(d_g, field, ball_constant(eta, r), "ball_bound", move |g| g < limit)
}

/// The same ratio on the shell `R⁻¹ε ≤ d_g ≤ Rε`, `C = η(1)η(R)²`.
pub fn verify_annular_bound(
    d_g: &FiniteMetricSpace,
    field: &DistortionField,
    r: f64,
    eta: &dyn Fn(f64) -> f64,
) -> Result<BoundCheck> {
    if !(r >= 1.0) {
        return Err(Error::domain(format!("R must be at least 1, got {r}")));
    }
    let (lo, hi) = (field.epsilon / r, closed_radius(r * field.epsilon));
    ratio_scan(d_g, field, annular_constant(eta, r), "annular_bound", move |g| g >= lo && g <= hi)
}

/// A point at distance within `[r/8, 8r]` of both `p` and `q`, nearest to
/// distance `4r` from `p`.
pub fn annulus_witness(d_g: &FiniteMetricSpace, p: PointId, q: PointId, r: f64) -> Result<PointId> {
    let n = d_g.len();
    if p.0 >= n || q.0 >= n {
        return Err(Error::domain("point out of range"));
    }
    if !(r > 0.0) || d_g.dist(p.0, q.0) >= r {
        return Err(Error::domain(format!("need 0 < d_g(p,q) < r, got d_g = {} and r = {r}", d_g.dist(p.0, q.0))));
    }
    let (lo, hi) = (r / 8.0, 8.0 * r);
    let inside = |v: f64| v >= lo && v <= hi;
    (0..n)
        .filter(|&s| inside(d_g.dist(p.0, s)) && inside(d_g.dist(q.0, s)))
        .min_by(|&a, &b| {
            let (da, db) = ((d_g.dist(p.0, a) - 4.0 * r).abs(), (d_g.dist(p.0, b) - 4.0 * r).abs());
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .map(PointId)
        .ok_or_else(|| Error::Resolution(format!("no point in the annulus [{lo}, {hi}] around {} and {}", p.0, q.0)))
}

/// A conformally rescaled mesh metric together with its edge weights.
#[derive(Clone, Debug)]
pub struct RescaledMetric {
    pub metric: FiniteMetricSpace,
    pub edge_weights: Vec<f64>,
    pub factor: Vec<f64>,
}

pub fn rescale(mesh: &MeshManifold, factor: Vec<f64>, label: &str) -> Result<RescaledMetric> {
    let weight = ConformalWeight::new(factor)?;
    let edge_weights = rescaled_edge_weights(mesh, &weight)?;
    let metric = rescale_metric(mesh, &weight)?.with_label(label);
    Ok(RescaledMetric { metric, edge_weights, factor: weight.values().to_vec() })
}

/// `d_ε`: the mesh metric rescaled by the raw field.
pub fn build_d_epsilon(mesh: &MeshManifold, field: &DistortionField) -> Result<RescaledMetric> {
    rescale(mesh, field.values.clone(), "d_eps")
}

/// `ρ_ε`: the mesh metric rescaled by `4C·λ̃`.
pub fn build_rho_epsilon(mesh: &MeshManifold, field: &DistortionField, c: f64) -> Result<RescaledMetric> {
    let smoothed = field
        .smoothed
        .as_ref()
        .ok_or_else(|| Error::domain("field has no smoothed values"))?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::domain(format!("C must be a finite value of at least 1, got {c}")));
    }
    rescale(mesh, smoothed.iter().map(|v| 4.0 * c * v).collect(), "rho_eps")
}

/// `L = max{1, 8C²η(2)}`.
pub fn adjacency_constant(c: f64, eta: &dyn Fn(f64) -> f64) -> f64 {
    (8.0 * c * c * eta(2.0)).max(1.0)
}

/// `L⁻¹ρ_ε ≤ d ≤ ρ_ε` on pairs with `ε/2 ≤ d_g < ε`.
pub fn verify_adjacency_inequality(
    d_g: &FiniteMetricSpace,
    d: &FiniteMetricSpace,
    rho: &FiniteMetricSpace,
    epsilon: f64,
    c: f64,
    eta: &dyn Fn(f64) -> f64,
) -> Result<BoundCheck> {
    check_pair(d_g, d)?;
    check_pair(d_g, rho)?;
    let l = adjacency_constant(c, eta);
    let tally = scan_pairs(d_g.len(), |p, q, t| {
        let g = d_g.dist(p, q);
        if g < 0.5 * epsilon || g >= epsilon {
            return;
        }
        let (v, r) = (d.dist(p, q), rho.dist(p, q));
        t.record((p, q), v * l / r, r / v, (r / v).max(v / r));
    });
    Ok(tally.finish("adjacency_inequality", l))
}

/// `C⁻¹λ(p)d_g ≤ d_ε ≤ Cλ(p)d_g` on pairs inside `B(p, Rε)` for each
/// center `p`. Each ball is thinned to at most `max_points` points.
pub fn verify_local_comparison(
    d_g: &FiniteMetricSpace,
    d_eps: &FiniteMetricSpace,
    field: &DistortionField,
    centers: &[usize],
    r: f64,
    c: f64,
    max_points: usize,
) -> Result<BoundCheck> {
    check_pair(d_g, d_eps)?;
    let limit = r * field.epsilon;
    let tally = centers
        .par_iter()
        .map(|&p| {
            let mut t = Tally::new();
            let ball: Vec<usize> = (0..d_g.len()).filter(|&q| d_g.dist(p, q) < limit).collect();
            let stride = ball.len().div_ceil(max_points.max(2)).max(1);
            let pts: Vec<usize> = ball.into_iter().step_by(stride).collect();
            let lam = field.values[p];
            for (i, &q) in pts.iter().enumerate() {
                for &s in &pts[i + 1..] {
                    let base = lam * d_g.dist(q, s);
                    let v = d_eps.dist(q, s);
                    let ratio = (v / base).max(base / v);
                    t.record((q, s), c * v / base, c * base / v, ratio);
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge);
    Ok(tally.finish("local_comparison", c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub points: Vec<usize>,
    pub shortest_link: f64,
    pub longest_link: f64,
    /// How far the shortest link falls below `ε/2`, zero if it does not.
    pub slack: f64,
}

/// Splits `path` at midpoints until every link has `d_g < ε`.
pub fn chain_along(d_g: &FiniteMetricSpace, path: &[usize], epsilon: f64) -> Result<Chain> {
    let (p, q) = (path[0], *path.last().expect("non-empty path"));
    if d_g.dist(p, q) < 0.5 * epsilon {
        return Err(Error::domain(format!("d_g({p},{q}) = {} is below ε/2", d_g.dist(p, q))));
    }
    let mut cuts = vec![0];
    let mut stack = vec![(0, path.len() - 1)];
    let mut done = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let (a, b) = (path[lo], path[hi]);
        if d_g.dist(a, b) < epsilon {
            done.push(hi);
            continue;
        }
        if hi - lo < 2 {
            return Err(Error::Resolution(format!(
                "mesh edge ({a},{b}) of length {} is not below ε = {epsilon}",
                d_g.dist(a, b)
            )));
        }
        let mid = (lo + 1..hi)
            .min_by(|&x, &y| {
                let gap = |m: usize| (d_g.dist(a, path[m]) - d_g.dist(path[m], b)).abs();
                gap(x).total_cmp(&gap(y)).then(x.cmp(&y))
            })
            .expect("interior vertex");
        stack.push((mid, hi));
        stack.push((lo, mid));
    }
    cuts.extend(done);
    let points: Vec<usize> = cuts.iter().map(|&i| path[i]).collect();
    let links: Vec<f64> = points.windows(2).map(|w| d_g.dist(w[0], w[1])).collect();
    let shortest_link = links.iter().copied().fold(f64::INFINITY, f64::min);
    let longest_link = links.iter().copied().fold(0.0, f64::max);
    Ok(Chain { points, shortest_link, longest_link, slack: (0.5 * epsilon - shortest_link).max(0.0) })
}

/// Chain between `p` and `q` along a shortest path for `edge_weights`.
pub fn geodesic_chain(
    mesh: &MeshManifold,
    edge_weights: &[f64],
    d_g: &FiniteMetricSpace,
    p: PointId,
    q: PointId,
    epsilon: f64,
) -> Result<Chain> {
    let (_, pred) = shortest_path_tree(mesh, edge_weights, p.0);
    let path = path_from_tree(&pred, p.0, q.0)?;
    chain_along(d_g, &path, epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    /// `d ≤ ρ_ε` on every pair of net points.
    pub domination: BoundCheck,
    /// `d(p,q) ≤ Σ ρ_ε(links) ≤ ρ_ε(p,q)` along executed chains.
    pub chains: BoundCheck,
    /// Largest shortfall of a link below `ε/2`.
    #[serde(with = "crate::extended")]
    pub max_slack: f64,
    /// Allowed shortfall (one mesh scale).
    #[serde(with = "crate::extended")]
    pub slack_limit: f64,
    pub ok: bool,
}

/// Runs the chain argument from up to `max_sources` net points to every
/// other net point at geodesic distance at least `ε/2`.
pub fn verify_chain_argument(
    mesh: &MeshManifold,
    rho: &RescaledMetric,
    d_g: &FiniteMetricSpace,
    d: &FiniteMetricSpace,
    net: &[usize],
    epsilon: f64,
    max_sources: usize,
) -> Result<ChainCheck> {
    check_pair(d_g, d)?;
    let rho_m = &rho.metric;
    let mut dom = Tally::new();
    for (i, &a) in net.iter().enumerate() {
        for &b in &net[i + 1..] {
            let (v, r) = (d.dist(a, b), rho_m.dist(a, b));
            dom.record((a, b), f64::INFINITY, r / v, v / r);
        }
    }
    let stride = net.len().div_ceil(max_sources.max(1)).max(1);
    let sources: Vec<usize> = net.iter().copied().step_by(stride).collect();
    let parts: Vec<Result<(Tally, f64)>> = sources
        .par_iter()
        .map(|&a| {
            let (_, pred) = shortest_path_tree(mesh, &rho.edge_weights, a);
            let mut t = Tally::new();
            let mut slack: f64 = 0.0;
            for &b in net {
                if b == a || d_g.dist(a, b) < 0.5 * epsilon {
                    continue;
                }
                let path = path_from_tree(&pred, a, b)?;
                let chain = chain_along(d_g, &path, epsilon)?;
                slack = slack.max(chain.slack);
                let links = chain.points.windows(2);
                let sum_d: f64 = links.clone().map(|w| d.dist(w[0], w[1])).sum();
                let sum_rho: f64 = links.map(|w| rho_m.dist(w[0], w[1])).sum();
                let total = rho_m.dist(a, b).max(sum_rho);
                // triangle step, then link domination against the path length
                let lower = sum_d / d.dist(a, b);
                t.record((a, b), lower, total / sum_d, sum_d / total);
            }
            Ok((t, slack))
        })
        .collect();
    let mut chains = Tally::new();
    let mut max_slack: f64 = 0.0;
    for part in parts {
        let (t, s) = part?;
        chains = chains.merge(t);
        max_slack = max_slack.max(s);
    }
    let domination = dom.finish("net_domination", 1.0);
    let chains = chains.finish("chain_argument", 1.0);
    let slack_limit = mesh.mesh_scale;
    let ok = domination.violations == 0 && chains.ok && max_slack <= slack_limit;
    Ok(ChainCheck { domination, chains, max_slack, slack_limit, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, geodesic_metric, MeshSpec};
    use std::f64::consts::PI;

    fn circle(n: usize, c: f64) -> (MeshManifold, FiniteMetricSpace) {
        let m = build_mesh(MeshSpec::circle(n, c)).unwrap();
        let g = geodesic_metric(&m).unwrap();
        (m, g)
    }

    #[test]
    fn lambda_of_identity_and_scaling() {
        let (_, g) = circle(64, 8.0);
        let f = compute_lambda(&g, &g, 1.0).unwrap();
        assert!(f.values.iter().all(|&v| v == 1.0));
        let f = compute_lambda(&g, &g, 1.1).unwrap();
        assert!(f.values.iter().all(|&v| v <= 1.0 && v > 0.9));
        let two = g.scaled(2.0).unwrap();
        let f = compute_lambda(&g, &two, 1.0).unwrap();
        assert!(f.values.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn snowflake_lambda_within_granularity() {
        let (m, g) = circle(1000, 2.0 * PI);
        let s = g.map("s", f64::sqrt).unwrap();
        let eps = 0.1;
        let f = compute_lambda(&g, &s, eps).unwrap();
        let h = m.mesh_scale;
        let analytic = eps.powf(-0.5);
        assert!((analytic - 3.1623).abs() < 1e-4);
        for &v in &f.values {
            assert!(v <= analytic * (1.0 + 1e-9));
            assert!(v >= (eps - h).sqrt() / eps);
        }
    }

    #[test]
    fn coarse_mesh_is_a_resolution_error() {
        let (_, g) = circle(8, 8.0);
        assert!(matches!(compute_lambda(&g, &g, 0.5), Err(Error::Resolution(_))));
    }

    #[test]
    fn smoothing_examples() {
        let (m, g) = circle(4, 4.0);
        let mut f = compute_lambda(&g, &g, 1.0).unwrap();
        assert_eq!(smooth_lambda(&f, &m, 0).unwrap().smoothed.unwrap(), f.values);
        assert_eq!(smooth_lambda(&f, &m, 5).unwrap().smoothed.unwrap(), f.values);
        f.values = vec![1.0, 3.0, 1.0, 3.0];
        assert_eq!(smooth_lambda(&f, &m, 1).unwrap().smoothed.unwrap(), vec![2.0; 4]);
        f.values = vec![1.0, 10.0, 1.0, 10.0];
        let s = smooth_lambda(&f, &m, 1).unwrap().smoothed.unwrap();
        assert_eq!(s, vec![2.0, 5.5, 2.0, 5.5]);
    }

    #[test]
    fn sphere_bound_examples() {
        let (_, g) = circle(200, 1.0);
        let eps = 0.05;
        let f = compute_lambda(&g, &g, eps).unwrap();
        let check = verify_sphere_bound(&g, &g, &f, &|t| t).unwrap();
        assert!(check.upper_margin >= 1.0);
        assert!(check.ok);

        let s = g.map("s", f64::sqrt).unwrap();
        let f = compute_lambda(&g, &s, eps).unwrap();
        let check = verify_sphere_bound(&g, &s, &f, &|t: f64| t.sqrt()).unwrap();
        assert!(check.lower_margin >= 1.0 - 1e-12, "{check:?}");
        assert!(check.upper_margin >= 1.0 - 1e-12, "{check:?}");
        assert_eq!(check.violations, 0);
    }

    #[test]
    fn ball_bound_examples() {
        assert_eq!(ball_constant(&|t| t, 1.0), 4096.0);
        let (_, g) = circle(200, 1.0);
        let s = g.map("s", f64::sqrt).unwrap();
        let f = compute_lambda(&g, &s, 0.05).unwrap();
        let check = verify_ball_bound(&g, &f, 2.0, &|t: f64| t.sqrt().max(t * t)).unwrap();
        assert!(check.ok);
        assert!(check.observed < 1.0 + 1e-9, "{check:?}");
        let annular = verify_annular_bound(&g, &f, 2.0, &|t: f64| t.sqrt().max(t * t)).unwrap();
        assert!(annular.ok);
        assert!(verify_ball_bound(&g, &f, 0.5, &|t| t).is_err());
    }

    #[test]
    fn annulus_witness_examples() {
        let (_, g) = circle(100, 100.0);
        let s = annulus_witness(&g, PointId(0), PointId(0), 1.0).unwrap();
        assert_eq!(s, PointId(4));
        assert_eq!(g.dist(0, s.0), 4.0);
        let s = annulus_witness(&g, PointId(10), PointId(10), 2.0).unwrap();
        let v = g.dist(10, s.0);
        assert!((0.25..=16.0).contains(&v));
        assert!(annulus_witness(&g, PointId(0), PointId(5), 1.0).is_err());
    }

    #[test]
    fn chain_examples() {
        let (m, g) = circle(16, 4.0);
        let w = m.edge_weights();
        let c = geodesic_chain(&m, &w, &g, PointId(0), PointId(4), 0.5).unwrap();
        assert_eq!(c.points, vec![0, 1, 2, 3, 4]);
        assert_eq!((c.shortest_link, c.longest_link, c.slack), (0.25, 0.25, 0.0));

        let c = geodesic_chain(&m, &w, &g, PointId(0), PointId(3), 1.0).unwrap();
        assert_eq!(c.points, vec![0, 3]);

        let c = geodesic_chain(&m, &w, &g, PointId(0), PointId(8), 1.0).unwrap();
        assert_eq!(c.points.len(), 5);
        assert!(c.points.windows(2).all(|p| g.dist(p[0], p[1]) == 0.5));

        assert!(geodesic_chain(&m, &w, &g, PointId(0), PointId(1), 1.0).is_err());
        assert!(matches!(
            geodesic_chain(&m, &w, &g, PointId(0), PointId(2), 0.2),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn rho_and_adjacency() {
        let (m, g) = circle(64, 8.0);
        let f = compute_lambda(&g, &g, 1.0).unwrap();
        assert!(build_rho_epsilon(&m, &f, 1.0).is_err());
        let f = smooth_lambda(&f, &m, 1).unwrap();
        let rho = build_rho_epsilon(&m, &f, 1.0).unwrap();
        for (a, b) in rho.metric.raw().iter().zip(g.raw()) {
            assert_eq!(*a, 4.0 * b);
        }
        assert!(build_rho_epsilon(&m, &f, 0.5).is_err());

        let check = verify_adjacency_inequality(&g, &g, &rho.metric, 1.0, 1.0, &|t| t).unwrap();
        assert_eq!(check.constant, 16.0);
        assert!(check.upper_margin >= 4.0);
        assert!(check.ok);
        assert_eq!(adjacency_constant(0.1, &|t| t), 1.0);
    }

    #[test]
    fn chain_argument_on_a_snowflake() {
        let (m, g) = circle(400, 1.0);
        let s = g.map("s", f64::sqrt).unwrap();
        let eps = 0.1;
        let eta = |t: f64| t.sqrt().max(t * t);
        let f = smooth_lambda(&compute_lambda(&g, &s, eps).unwrap(), &m, 1).unwrap();
        let c = comparison_constant(&eta, 2.0);
        let rho = build_rho_epsilon(&m, &f, c).unwrap();
        let net: Vec<usize> = (0..400).step_by(20).collect();
        let check = verify_chain_argument(&m, &rho, &g, &s, &net, eps, 8).unwrap();
        assert!(check.ok, "{check:?}");
        assert_eq!(check.domination.violations, 0);

        let d_eps = build_d_epsilon(&m, &f).unwrap();
        let lc = verify_local_comparison(&g, &d_eps.metric, &f, &net, 2.0, c, 40).unwrap();
        assert!(lc.ok, "{lc:?}");
    }

    #[test]
    fn continuity_surrogate_on_a_conformal_target() {
        let gap = |n: usize| {
            let m = build_mesh(MeshSpec::circle(n, 1.0)).unwrap();
            let g = geodesic_metric(&m).unwrap();
            let w: Vec<f64> = (0..n).map(|v| 1.0 + 0.5 * (1.0 + m.height(v))).collect();
            let d = rescale(&m, w, "d").unwrap().metric;
            max_adjacent_gap(&compute_lambda(&g, &d, 0.1).unwrap(), &m)
        };
        let (coarse, fine) = (gap(200), gap(800));
        assert!(fine <= 0.5 * coarse * (1.0 + 1e-6), "{coarse} {fine}");
    }
}
