//! Mesh samplings of the circle, the flat torus and the round sphere.
//!
//! A mesh is a weighted graph whose shortest-path metric stands in for the
//! Riemannian distance. Conformal rescaling multiplies each edge by the mean
//! of its endpoint weights and re-runs shortest paths.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{default_names, FiniteMetricSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Circle,
    Torus,
    Sphere,
}

impl MeshKind {
    pub fn dim(self) -> usize {
        match self {
            MeshKind::Circle => 1,
            MeshKind::Torus | MeshKind::Sphere => 2,
        }
    }
}

/// What to build.
///
/// `resolution` is the vertex count (circle), grid side (torus) or
/// subdivision level (sphere). `size` is the circumference, the torus side
/// length, or the sphere radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub kind: MeshKind,
    pub resolution: usize,
    #[serde(default = "default_size")]
    pub size: f64,
}

fn default_size() -> f64 {
    1.0
}

impl MeshSpec {
    pub fn circle(resolution: usize, circumference: f64) -> Self {
        MeshSpec { kind: MeshKind::Circle, resolution, size: circumference }
    }

    pub fn torus(grid: usize, side: f64) -> Self {
        MeshSpec { kind: MeshKind::Torus, resolution: grid, size: side }
    }

    pub fn sphere(level: usize, radius: f64) -> Self {
        MeshSpec { kind: MeshKind::Sphere, resolution: level, size: radius }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct MeshManifold {
    pub spec: MeshSpec,
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<Edge>,
    pub mesh_scale: f64,
    /// Offsets into `adj` (CSR layout), one slot per vertex plus one.
    offsets: Vec<usize>,
    /// `(neighbor, edge index)` pairs.
    adj: Vec<(usize, usize)>,
}

impl MeshManifold {
    /// `scale` is the sampling resolution; `None` takes the longest edge.
    fn assemble(spec: MeshSpec, vertices: Vec<Vec<f64>>, edges: Vec<Edge>, scale: Option<f64>) -> Result<Self> {
        let n = vertices.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            if e.a >= n || e.b >= n || e.a == e.b {
                return Err(Error::malformed(format!("bad edge ({}, {})", e.a, e.b)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::malformed(format!("edge ({}, {}) has weight {}", e.a, e.b, e.weight)));
            }
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = vec![0; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0, 0); offsets[n]];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, k);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, k);
            fill[e.b] += 1;
        }
        let mesh_scale = scale.unwrap_or_else(|| edges.iter().map(|e| e.weight).fold(0.0, f64::max));
        Ok(MeshManifold { spec, vertices, edges, mesh_scale, offsets, adj })
    }

    pub fn kind(&self) -> MeshKind {
        self.spec.kind
    }

    pub fn dim(&self) -> usize {
        self.spec.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[self.offsets[v]..self.offsets[v + 1]].iter().map(|&(u, _)| u)
    }

    /// Length (circle), area (torus, sphere) of the underlying manifold.
    pub fn total_volume(&self) -> f64 {
        let s = self.spec.size;
        match self.spec.kind {
            MeshKind::Circle => s,
            MeshKind::Torus => s * s,
            MeshKind::Sphere => 4.0 * PI * s * s,
        }
    }

    pub fn edge_weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.len()
    }

    /// Distance in the analytic model: chord length for the circle and the
    /// sphere, wrapped flat distance for the torus.
    pub fn ambient_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.vertices[i], &self.vertices[j]);
        match self.spec.kind {
            MeshKind::Torus => {
                let side = self.spec.size;
                a.iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let d = (x - y).abs() % side;
                        d.min(side - d).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            _ => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Analytic geodesic distance between two vertices.
    pub fn analytic_geodesic(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.vertices[i], &self.vertices[j]);
        match self.spec.kind {
            MeshKind::Circle => {
                let r = self.spec.size / (2.0 * PI);
                r * angle_between(a, b)
            }
            MeshKind::Sphere => self.spec.size * angle_between(a, b),
            MeshKind::Torus => self.ambient_distance(i, j),
        }
    }

    /// A coordinate in `[-1, 1]` used to shape smooth conformal weights.
    pub fn height(&self, v: usize) -> f64 {
        let p = &self.vertices[v];
        match self.spec.kind {
            MeshKind::Circle => p[1] / (self.spec.size / (2.0 * PI)),
            MeshKind::Sphere => p[2] / self.spec.size,
            MeshKind::Torus => (2.0 * PI * p[0] / self.spec.size).sin(),
        }
        .clamp(-1.0, 1.0)
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cross = match a.len() {
        2 => (a[0] * b[1] - a[1] * b[0]).abs(),
        _ => {
            let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        }
    };
    cross.atan2(dot)
}

pub fn build_mesh(spec: MeshSpec) -> Result<MeshManifold> {
    if !(spec.size > 0.0 && spec.size.is_finite()) {
        return Err(Error::Configuration(format!("mesh size must be positive, got {}", spec.size)));
    }
    match spec.kind {
        MeshKind::Circle => build_circle(spec),
        MeshKind::Torus => build_torus(spec),
        MeshKind::Sphere => build_sphere(spec),
    }
}

fn build_circle(spec: MeshSpec) -> Result<MeshManifold> {
    let n = spec.resolution;
    if n < 3 {
        return Err(Error::Configuration(format!("circle needs at least 3 vertices, got {n}")));
    }
    let radius = spec.size / (2.0 * PI);
    let step = spec.size / n as f64;
    let vertices = (0..n)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / n as f64;
            vec![radius * theta.cos(), radius * theta.sin()]
        })
        .collect();
    let edges = (0..n).map(|i| Edge { a: i, b: (i + 1) % n, weight: step }).collect();
    MeshManifold::assemble(spec, vertices, edges, None)
}

fn build_torus(spec: MeshSpec) -> Result<MeshManifold> {
    let g = spec.resolution;
    if g < 3 {
        return Err(Error::Configuration(format!("torus grid must be at least 3x3, got {g}x{g}")));
    }
    let h = spec.size / g as f64;
    let id = |i: usize, j: usize| (i % g) * g + (j % g);
    let mut vertices = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            vertices.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    let diag = h * std::f64::consts::SQRT_2;
    let mut edges = Vec::with_capacity(4 * g * g);
    for i in 0..g {
        for j in 0..g {
            let v = id(i, j);
            edges.push(Edge { a: v, b: id(i + 1, j), weight: h });
            edges.push(Edge { a: v, b: id(i, j + 1), weight: h });
            edges.push(Edge { a: v, b: id(i + 1, j + 1), weight: diag });
            edges.push(Edge { a: v, b: id(i + 1, j + g - 1), weight: diag });
        }
    }
    MeshManifold::assemble(spec, vertices, edges, None)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Connects every vertex to all vertices within `hops` steps of the base
/// graph, so the shortest-path anisotropy shrinks as the mesh refines.
fn widen_stencil(n: usize, base: &BTreeSet<(usize, usize)>, hops: usize) -> BTreeSet<(usize, usize)> {
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b) in base {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut out = BTreeSet::new();
    let mut depth = vec![usize::MAX; n];
    for src in 0..n {
        let mut frontier = vec![src];
        let mut touched = vec![src];
        depth[src] = 0;
        for h in 1..=hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &nbrs[u] {
                    if depth[v] == usize::MAX {
                        depth[v] = h;
                        touched.push(v);
                        next.push(v);
                        if src < v {
                            out.insert((src, v));
                        }
                    }
                }
            }
            frontier = next;
        }
        for v in touched {
            depth[v] = usize::MAX;
        }
    }
    out
}

/// Icosahedron with vertices at both poles, then midpoint subdivision
/// projected back to the sphere.
fn build_sphere(spec: MeshSpec) -> Result<MeshManifold> {
    let level = spec.resolution;
    if level < 1 {
        return Err(Error::Configuration("sphere needs at least one subdivision level".into()));
    }
    let z = 1.0 / 5f64.sqrt();
    let rho = 2.0 / 5f64.sqrt();
    let mut verts: Vec<[f64; 3]> = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let t = 2.0 * PI * k as f64 / 5.0;
        verts.push([rho * t.cos(), rho * t.sin(), z]);
    }
    for k in 0..5 {
        let t = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        verts.push([rho * t.cos(), rho * t.sin(), -z]);
    }
    verts.push([0.0, 0.0, -1.0]);

    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(20);
    for k in 0..5 {
        let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
        let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
        faces.push([0, u0, u1]);
        faces.push([u0, l0, u1]);
        faces.push([u1, l0, l1]);
        faces.push([11, l1, l0]);
    }

    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let r = spec.size;
    let mut seen = BTreeSet::new();
    for &[a, b, c] in &faces {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let face_edge = seen.iter().map(|&(a, b)| r * angle_between(&verts[a], &verts[b])).fold(0.0, f64::max);
    let seen = widen_stencil(verts.len(), &seen, level + 1);
    let edges = seen
        .into_iter()
        .map(|(a, b)| Edge { a, b, weight: r * angle_between(&verts[a], &verts[b]) })
        .collect();
    let vertices = verts.iter().map(|p| p.iter().map(|x| x * r).collect()).collect();
    MeshManifold::assemble(spec, vertices, edges, Some(face_edge))
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths. Returns distances and predecessors
/// (`usize::MAX` for the source and unreachable vertices).
pub fn shortest_path_tree(mesh: &MeshManifold, weights: &[f64], source: usize) -> (Vec<f64>, Vec<usize>) {
    let n = mesh.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { cost: 0.0, node: source });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, e) in &mesh.adj[mesh.offsets[node]..mesh.offsets[node + 1]] {
            let c = cost + weights[e];
            if c < dist[next] {
                dist[next] = c;
                pred[next] = node;
                heap.push(Frontier { cost: c, node: next });
            }
        }
    }
    (dist, pred)
}

/// Vertex sequence of a shortest path from `from` to `to`, both included.
pub fn shortest_path(mesh: &MeshManifold, weights: &[f64], from: usize, to: usize) -> Result<Vec<usize>> {
    let (_, pred) = shortest_path_tree(mesh, weights, from);
    path_from_tree(&pred, from, to)
}

pub fn path_from_tree(pred: &[usize], from: usize, to: usize) -> Result<Vec<usize>> {
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = pred[v];
        if v == usize::MAX {
            return Err(Error::domain(format!("no path from {from} to {to}")));
        }
        path.push(v);
    }
    path.reverse();
    Ok(path)
}

/// All-pairs shortest paths over `weights`, one Dijkstra per source.
/// The table is symmetrized by taking the smaller of the two directed sums.
fn all_pairs(mesh: &MeshManifold, weights: &[f64], label: String) -> Result<FiniteMetricSpace> {
    let n = mesh.len();
    if !mesh.is_connected() {
        return Err(Error::domain("mesh is disconnected"));
    }
    let mut table = vec![0.0; n * n];
    table.par_chunks_mut(n).enumerate().for_each(|(src, row)| {
        let (d, _) = shortest_path_tree(mesh, weights, src);
        row.copy_from_slice(&d);
    });
    for i in 0..n {
        for j in (i + 1)..n {
            let m = table[i * n + j].min(table[j * n + i]);
            table[i * n + j] = m;
            table[j * n + i] = m;
        }
    }
    Ok(FiniteMetricSpace::from_dense(label, default_names(n), table))
}

/// Shortest-path metric of the mesh, standing in for `d_g`.
pub fn geodesic_metric(mesh: &MeshManifold) -> Result<FiniteMetricSpace> {
    all_pairs(mesh, &mesh.edge_weights(), format!("{:?}-geodesic", mesh.kind()).to_lowercase())
}

/// Positive per-vertex conformal factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalWeight {
    values: Vec<f64>,
}

impl ConformalWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("conformal weight at vertex {i} is {v}")));
        }
        Ok(ConformalWeight { values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// Edge weights after conformal rescaling (trapezoid rule on each edge).
pub fn rescaled_edge_weights(mesh: &MeshManifold, weight: &ConformalWeight) -> Result<Vec<f64>> {
    if weight.values.len() != mesh.len() {
        return Err(Error::domain(format!(
            "weight has {} values for {} vertices",
            weight.values.len(),
            mesh.len()
        )));
    }
    let w = &weight.values;
    Ok(mesh.edges.iter().map(|e| e.weight * 0.5 * (w[e.a] + w[e.b])).collect())
}

pub fn rescale_metric(mesh: &MeshManifold, weight: &ConformalWeight) -> Result<FiniteMetricSpace> {
    let weights = rescaled_edge_weights(mesh, weight)?;
    all_pairs(mesh, &weights, "rescaled".into())
}

/// Recipe for the target metric `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    Identity,
    /// `d = d_g^alpha`.
    Snowflake { alpha: f64 },
    /// `d = factor * d_g`.
    Scaled { factor: f64 },
    /// Smooth conformal weight ranging over `[low, high]`.
    Conformal { low: f64, high: f64 },
    /// Conformal weight `(r / radius)^(alpha - 1)` inside the geodesic ball
    /// of `radius` around `center`, and `1` outside: a snowflake near the
    /// center only.
    QsPower { center: usize, radius: f64, alpha: f64 },
}

/// The conformal weight for the weight-based target recipes.
pub fn target_weight(mesh: &MeshManifold, base: &FiniteMetricSpace, spec: &TargetSpec) -> Result<Option<ConformalWeight>> {
    match *spec {
        TargetSpec::Conformal { low, high } => {
            if !(low > 0.0 && high >= low) {
                return Err(Error::domain(format!("conformal range [{low}, {high}] is invalid")));
            }
            let w = (0..mesh.len()).map(|v| low + (high - low) * 0.5 * (1.0 + mesh.height(v))).collect();
            ConformalWeight::new(w).map(Some)
        }
        TargetSpec::QsPower { center, radius, alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::domain(format!("qs-power exponent must lie in (0, 1], got {alpha}")));
            }
            if center >= mesh.len() || !(radius > 0.0) {
                return Err(Error::domain("qs-power center or radius out of range"));
            }
            let floor = mesh.mesh_scale;
            let w = base
                .row(center)
                .iter()
                .map(|&r| if r >= radius { 1.0 } else { (r.max(floor) / radius).powf(alpha - 1.0) })
                .collect();
            ConformalWeight::new(w).map(Some)
        }
        _ => Ok(None),
    }
}

/// Builds the target metric `d` from the geodesic base metric.
pub fn make_test_metric(mesh: &MeshManifold, base: &FiniteMetricSpace, spec: &TargetSpec) -> Result<FiniteMetricSpace> {
    match *spec {
        TargetSpec::Identity => Ok(base.clone().with_label("target")),
        TargetSpec::Snowflake { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::domain(format!("snowflake exponent must lie in (0, 1], got {alpha}")));
            }
            base.map("snowflake", |v| v.powf(alpha))
        }
        TargetSpec::Scaled { factor } => {
            if !(factor >= 1.0 && factor.is_finite()) {
                return Err(Error::domain(format!("scale factor must be at least 1, got {factor}")));
            }
            base.map("scaled", |v| factor * v)
        }
        TargetSpec::Conformal { .. } | TargetSpec::QsPower { .. } => {
            let w = target_weight(mesh, base, spec)?.expect("weight recipe");
            Ok(rescale_metric(mesh, &w)?.with_label("target"))
        }
    }
}

/// Largest bi-Lipschitz constant between mesh and ambient distances on the
/// balls `B(c, r)`, over the given centers.
pub fn chart_constant(mesh: &MeshManifold, metric: &FiniteMetricSpace, centers: &[usize], r: f64) -> f64 {
    centers
        .par_iter()
        .map(|&c| {
            let ball: Vec<usize> = (0..mesh.len()).filter(|&q| metric.dist(c, q) < r).collect();
            let mut worst: f64 = 1.0;
            for (k, &q) in ball.iter().enumerate() {
                for &s in &ball[k + 1..] {
                    let (a, b) = (metric.dist(q, s), mesh.ambient_distance(q, s));
                    worst = worst.max(a / b).max(b / a);
                }
            }
            worst
        })
        .reduce(|| 1.0, f64::max)
}

/// Counts pairs in `B(c, r)` whose shortest path leaves `B(c, 2r)`.
pub fn convexity_violations(mesh: &MeshManifold, metric: &FiniteMetricSpace, center: usize, r: f64) -> usize {
    let weights = mesh.edge_weights();
    let ball: Vec<usize> = (0..mesh.len()).filter(|&q| metric.dist(center, q) < r).collect();
    let mut bad = 0;
    for &q in &ball {
        let (_, pred) = shortest_path_tree(mesh, &weights, q);
        for &s in &ball {
            if s <= q {
                continue;
            }
            let path = path_from_tree(&pred, q, s).expect("connected mesh");
            if path.iter().any(|&v| metric.dist(center, v) >= 2.0 * r) {
                bad += 1;
            }
        }
    }
    bad
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub kind: MeshKind,
    pub dim: usize,
    pub resolution: usize,
    pub size: f64,
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
    /// Absent in older files; the longest edge is used then.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_scale: Option<f64>,
}

impl MeshManifold {
    pub fn to_json(&self) -> String {
        let file = MeshFile {
            kind: self.spec.kind,
            dim: self.dim(),
            resolution: self.spec.resolution,
            size: self.spec.size,
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| (e.a, e.b, e.weight)).collect(),
            mesh_scale: Some(self.mesh_scale),
        };
        serde_json::to_string_pretty(&file).expect("mesh serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: MeshFile = serde_json::from_str(text)?;
        if f.dim != f.kind.dim() {
            return Err(Error::malformed(format!("dim {} does not match kind {:?}", f.dim, f.kind)));
        }
        let spec = MeshSpec { kind: f.kind, resolution: f.resolution, size: f.size };
        let edges = f.edges.into_iter().map(|(a, b, weight)| Edge { a, b, weight }).collect();
        Self::assemble(spec, f.vertices, edges, f.mesh_scale)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_of_four() {
        let m = build_mesh(MeshSpec::circle(4, 4.0)).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.edges.iter().all(|e| e.weight == 1.0));
        assert_eq!(m.mesh_scale, 1.0);
    }

    #[test]
    fn circle_edges_are_uniform() {
        let m = build_mesh(MeshSpec::circle(7, 3.5)).unwrap();
        assert!(m.edges.iter().all(|e| e.weight == 0.5));
        for e in &m.edges {
            let exact = m.analytic_geodesic(e.a, e.b);
            assert!((e.weight - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn sphere_vertex_counts() {
        for k in 1..=4 {
            let m = build_mesh(MeshSpec::sphere(k, 1.0)).unwrap();
            assert_eq!(m.len(), 10 * 4usize.pow(k as u32) + 2);
            assert!(m.is_connected());
        }
    }

    #[test]
    fn sphere_scale_is_the_face_edge_not_the_stencil() {
        let m = build_mesh(MeshSpec::sphere(3, 1.0)).unwrap();
        let nearest = (0..m.len())
            .map(|v| m.neighbors(v).map(|u| m.analytic_geodesic(u, v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let longest = m.edges.iter().map(|e| e.weight).fold(0.0, f64::max);
        assert!(m.mesh_scale >= nearest && m.mesh_scale < longest / 2.0, "{} {nearest} {longest}", m.mesh_scale);
        let back = MeshManifold::from_json(&m.to_json()).unwrap();
        assert_eq!(back.mesh_scale, m.mesh_scale);
    }

    #[test]
    fn torus_edges_match_flat_geodesics() {
        let m = build_mesh(MeshSpec::torus(5, 1.0)).unwrap();
        assert_eq!(m.len(), 25);
        for e in &m.edges {
            let exact = m.analytic_geodesic(e.a, e.b);
            assert!((e.weight - exact).abs() <= 1e-12 * exact, "{e:?} vs {exact}");
        }
    }

    #[test]
    fn resolution_minimums() {
        assert!(matches!(build_mesh(MeshSpec::circle(2, 1.0)), Err(Error::Configuration(_))));
        assert!(matches!(build_mesh(MeshSpec::torus(2, 1.0)), Err(Error::Configuration(_))));
        assert!(matches!(build_mesh(MeshSpec::sphere(0, 1.0)), Err(Error::Configuration(_))));
    }

    #[test]
    fn circle_geodesics() {
        let m = build_mesh(MeshSpec::circle(8, 8.0)).unwrap();
        let d = geodesic_metric(&m).unwrap();
        assert_eq!(d.dist(0, 4), 4.0);
        assert_eq!(d.dist(0, 1), 1.0);
        assert_eq!(d.dist(1, 7), 2.0);
    }

    #[test]
    fn icosphere_error_shrinks_with_level() {
        let worst = |k: usize| {
            let m = build_mesh(MeshSpec::sphere(k, 1.0)).unwrap();
            let d = geodesic_metric(&m).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..m.len() {
                for j in (i + 1)..m.len() {
                    let a = m.analytic_geodesic(i, j);
                    worst = worst.max((d.dist(i, j) - a).abs() / a);
                }
            }
            worst
        };
        let errs: Vec<f64> = (2..=4).map(worst).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn sphere_pole_to_pole() {
        let m = build_mesh(MeshSpec::sphere(4, 1.0)).unwrap();
        let d = geodesic_metric(&m).unwrap();
        // vertex 0 is the north pole, vertex 11 the south pole
        let err = (d.dist(0, 11) - PI).abs() / PI;
        assert!(err < 0.03, "relative error {err}");
    }

    #[test]
    fn rescale_examples() {
        let m = build_mesh(MeshSpec::circle(8, 8.0)).unwrap();
        let g = geodesic_metric(&m).unwrap();
        let one = rescale_metric(&m, &ConformalWeight::constant(8, 1.0).unwrap()).unwrap();
        assert_eq!(one.raw(), g.raw());
        let three = rescale_metric(&m, &ConformalWeight::constant(8, 3.0).unwrap()).unwrap();
        assert_eq!(three.dist(0, 4), 12.0);

        let m = build_mesh(MeshSpec::circle(4, 4.0)).unwrap();
        let w = ConformalWeight::new(vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(rescaled_edge_weights(&m, &w).unwrap(), vec![1.0, 2.0, 3.0, 2.0]);
        assert_eq!(rescale_metric(&m, &w).unwrap().dist(0, 2), 3.0);
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(ConformalWeight::new(vec![1.0, 0.0]).is_err());
        assert!(ConformalWeight::new(vec![1.0, f64::NAN]).is_err());
        let m = build_mesh(MeshSpec::circle(4, 4.0)).unwrap();
        let short = ConformalWeight::new(vec![1.0; 3]).unwrap();
        assert!(rescale_metric(&m, &short).is_err());
    }

    #[test]
    fn test_metric_recipes() {
        let m = build_mesh(MeshSpec::circle(100, 2.0 * PI)).unwrap();
        let g = geodesic_metric(&m).unwrap();
        let same = make_test_metric(&m, &g, &TargetSpec::Snowflake { alpha: 1.0 }).unwrap();
        assert_eq!(same.raw(), g.raw());
        let snow = make_test_metric(&m, &g, &TargetSpec::Snowflake { alpha: 0.5 }).unwrap();
        assert!((snow.dist(0, 1) - 0.2507).abs() < 1e-4);
        let doubled = make_test_metric(&m, &g, &TargetSpec::Scaled { factor: 2.0 }).unwrap();
        assert_eq!(doubled.dist(3, 40), 2.0 * g.dist(3, 40));
        assert!(make_test_metric(&m, &g, &TargetSpec::Snowflake { alpha: 1.5 }).is_err());
        assert!(make_test_metric(&m, &g, &TargetSpec::Scaled { factor: 0.5 }).is_err());
    }

    #[test]
    fn qs_power_weight_is_one_outside_region() {
        let m = build_mesh(MeshSpec::circle(200, 1.0)).unwrap();
        let g = geodesic_metric(&m).unwrap();
        let spec = TargetSpec::QsPower { center: 0, radius: 0.2, alpha: 0.5 };
        let w = target_weight(&m, &g, &spec).unwrap().unwrap();
        assert_eq!(w.values()[100], 1.0);
        assert!(w.values()[1] > 1.0);
        let d = make_test_metric(&m, &g, &spec).unwrap();
        assert!(d.check_axioms(d.tolerance()).is_valid());
    }

    #[test]
    fn mesh_file_round_trip() {
        let m = build_mesh(MeshSpec::torus(4, 2.0)).unwrap();
        let back = MeshManifold::from_json(&m.to_json()).unwrap();
        assert_eq!(back.edges, m.edges);
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.mesh_scale, m.mesh_scale);
    }
}
