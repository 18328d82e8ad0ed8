//! ε-nets and the graph-indexed ball covers built from them.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, PointId};

/// An ε-separated, ε-dense subset of a host space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub members: Vec<PointId>,
    pub epsilon: f64,
}

impl Net {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().map(|p| p.0).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    #[default]
    Input,
    Seeded(u64),
}

/// Greedy maximal ε-separated set: scan points in order, keep each point
/// not already within `< epsilon` of a kept one.
pub fn greedy_net(space: &FiniteMetricSpace, epsilon: f64, order: ScanOrder) -> Result<Net> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("net scale must be positive, got {epsilon}")));
    }
    let n = space.len();
    let mut scan: Vec<usize> = (0..n).collect();
    if let ScanOrder::Seeded(seed) = order {
        scan.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut covered = vec![false; n];
    let mut members = Vec::new();
    for p in scan {
        if covered[p] {
            continue;
        }
        members.push(PointId(p));
        for (q, &d) in space.row(p).iter().enumerate() {
            if d < epsilon {
                covered[q] = true;
            }
        }
    }
    Ok(Net { members, epsilon })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetVerdict {
    /// First host point with no member strictly within ε.
    pub density_witness: Option<usize>,
    /// First member pair closer than ε.
    pub separation_witness: Option<(usize, usize)>,
}

impl NetVerdict {
    pub fn is_ok(&self) -> bool {
        self.density_witness.is_none() && self.separation_witness.is_none()
    }
}

pub fn verify_net(space: &FiniteMetricSpace, subset: &[PointId], epsilon: f64) -> Result<NetVerdict> {
    if subset.is_empty() {
        return Err(Error::domain("net candidate is empty"));
    }
    let mut verdict = NetVerdict::default();
    'outer: for (a, p) in subset.iter().enumerate() {
        for q in &subset[a + 1..] {
            if space.dist(p.0, q.0) < epsilon {
                verdict.separation_witness = Some((p.0, q.0));
                break 'outer;
            }
        }
    }
    verdict.density_witness = (0..space.len()).find(|&x| subset.iter().all(|s| space.dist(x, s.0) >= epsilon));
    Ok(verdict)
}

/// Verdict for one of the four approximation conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub ok: bool,
    pub witness: Option<Vec<usize>>,
}

impl ConditionVerdict {
    fn pass() -> Self {
        ConditionVerdict { ok: true, witness: None }
    }

    fn fail(witness: Vec<usize>) -> Self {
        ConditionVerdict { ok: false, witness: Some(witness) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub k: usize,
    pub a1: ConditionVerdict,
    pub a2: ConditionVerdict,
    pub a3: ConditionVerdict,
    pub a4: ConditionVerdict,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.a1.ok && self.a2.ok && self.a3.ok && self.a4.ok
    }
}

/// Per-condition requirements on `K`, computed once per graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ConditionProfile {
    max_valence: usize,
    valence_witness: usize,
    /// `(center, point)` violating the ball nesting, if any.
    nesting_failure: Option<Vec<usize>>,
    /// Edge whose cover sets do not meet, even one sample spacing out.
    edge_without_overlap: Option<Vec<usize>>,
    /// Largest hop count over pairs with meeting cover sets (`u32::MAX` if disconnected).
    max_overlap_hops: u32,
    overlap_witness: Vec<usize>,
    /// Smallest `K` for which the neighborhood of every cover set lies in its K-star.
    star_requirement: u32,
    star_witness: Vec<usize>,
}

/// The quadruple (graph, centers, radii, cover) built from a net.
///
/// Vertex `i` of the graph is `vertices[i]`; centers are the members
/// themselves, every radius is `epsilon`, and `cover[i]` is the open
/// ε-ball around `vertices[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationGraph {
    pub vertices: Vec<PointId>,
    pub epsilon: f64,
    pub adjacency: Vec<Vec<usize>>,
    pub cover: Vec<Vec<PointId>>,
    /// Combinatorial distances, `u32::MAX` when unreachable.
    pub hops: Vec<Vec<u32>>,
    pub k_observed: Option<usize>,
    profile: ConditionProfile,
}

impl ApproximationGraph {
    pub fn radius(&self, _v: usize) -> f64 {
        self.epsilon
    }

    pub fn max_valence(&self) -> usize {
        self.profile.max_valence
    }

    pub fn vertex_of(&self, p: PointId) -> Result<usize> {
        self.vertices
            .iter()
            .position(|&v| v == p)
            .ok_or_else(|| Error::domain(format!("point {} is not a graph vertex", p.0)))
    }
}

fn hop_table(adjacency: &[Vec<usize>]) -> Vec<Vec<u32>> {
    let m = adjacency.len();
    (0..m)
        .into_par_iter()
        .map(|src| {
            let mut hops = vec![u32::MAX; m];
            hops[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(v) = queue.pop_front() {
                for &u in &adjacency[v] {
                    if hops[u] == u32::MAX {
                        hops[u] = hops[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
            hops
        })
        .collect()
}

/// Largest distance from a point to its nearest other point.
pub fn sample_spacing(space: &FiniteMetricSpace) -> f64 {
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            let row = space.row(x);
            row.iter().enumerate().filter(|&(y, _)| y != x).map(|(_, &v)| v).fold(f64::INFINITY, f64::min)
        })
        .filter(|v| v.is_finite())
        .reduce(|| 0.0, f64::max)
}

/// Builds the graph with an edge between members closer than `2ε` and
/// computes the smallest `K` satisfying all four conditions.
pub fn build_approximation(space: &FiniteMetricSpace, net: &Net) -> Result<ApproximationGraph> {
    if net.is_empty() {
        return Err(Error::domain("cannot build an approximation from an empty net"));
    }
    let eps = net.epsilon;
    let members = &net.members;
    let m = members.len();
    let n = space.len();

    let adjacency: Vec<Vec<usize>> = (0..m)
        .map(|a| (0..m).filter(|&b| b != a && space.dist(members[a].0, members[b].0) < 2.0 * eps).collect())
        .collect();
    let cover: Vec<Vec<PointId>> = members
        .iter()
        .map(|s| (0..n).filter(|&x| space.dist(s.0, x) < eps).map(PointId).collect())
        .collect();
    let hops = hop_table(&adjacency);

    let (valence_witness, max_valence) =
        adjacency.iter().map(Vec::len).enumerate().max_by_key(|&(_, d)| d).unwrap_or((0, 0));

    // Nesting: B(p, r) ⊂ U ⊂ B(p, L r) with L = 1.
    let mut nesting_failure = None;
    for (a, s) in members.iter().enumerate() {
        let inner = (0..n).filter(|&x| space.dist(s.0, x) < eps).count();
        if let Some(x) = cover[a].iter().find(|x| space.dist(s.0, x.0) >= eps) {
            nesting_failure = Some(vec![s.0, x.0]);
            break;
        }
        if inner != cover[a].len() {
            nesting_failure = Some(vec![s.0]);
            break;
        }
    }

    let overlaps = |a: usize, b: usize| -> bool {
        let sb = members[b].0;
        cover[a].iter().any(|x| space.dist(sb, x.0) < eps)
    };
    // Balls around members closer than 2ε meet in the underlying manifold;
    // on the sample the shared point may sit up to one spacing further out.
    let spacing = sample_spacing(space);
    let meet_resolved = |a: usize, b: usize| -> bool {
        let (sa, sb) = (members[a].0, members[b].0);
        (0..n).any(|x| space.dist(sa, x) < eps + spacing && space.dist(sb, x) < eps + spacing)
    };

    let mut edge_without_overlap = None;
    let mut max_overlap_hops = 0;
    let mut overlap_witness = vec![];
    for a in 0..m {
        for b in (a + 1)..m {
            if space.dist(members[a].0, members[b].0) >= 2.0 * eps {
                continue;
            }
            let meet = overlaps(a, b);
            if !meet && edge_without_overlap.is_none() && !meet_resolved(a, b) {
                edge_without_overlap = Some(vec![members[a].0, members[b].0]);
            }
            if meet && hops[a][b] > max_overlap_hops {
                max_overlap_hops = hops[a][b];
                overlap_witness = vec![members[a].0, members[b].0];
            }
        }
    }

    // Star coverage: every x within ε of U_v must lie in some U_u with
    // hop(u, v) < K; record the smallest such K per (v, x).
    let star: Vec<(u32, Vec<usize>)> = (0..m)
        .into_par_iter()
        .map(|a| {
            let sv = members[a].0;
            let mut need = 1u32;
            let mut witness = vec![sv];
            for x in 0..n {
                if space.dist(sv, x) >= 2.0 * eps + space.tolerance() {
                    continue;
                }
                if !cover[a].iter().any(|y| space.dist(x, y.0) < eps) {
                    continue;
                }
                let best = (0..m)
                    .filter(|&b| space.dist(members[b].0, x) < eps)
                    .map(|b| hops[a][b])
                    .min()
                    .unwrap_or(u32::MAX);
                let k = best.saturating_add(1);
                if k > need {
                    need = k;
                    witness = vec![sv, x];
                }
            }
            (need, witness)
        })
        .collect();
    let (star_requirement, star_witness) =
        star.into_iter().max_by_key(|(k, _)| *k).unwrap_or((1, vec![]));

    let profile = ConditionProfile {
        max_valence,
        valence_witness: members[valence_witness].0,
        nesting_failure,
        edge_without_overlap,
        max_overlap_hops,
        overlap_witness,
        star_requirement,
        star_witness,
    };
    let mut approx = ApproximationGraph {
        vertices: members.clone(),
        epsilon: eps,
        adjacency,
        cover,
        hops,
        k_observed: None,
        profile,
    };
    approx.k_observed = (1..=m + 1).find(|&k| verify_conditions(&approx, k).all_ok());
    Ok(approx)
}

/// Checks the four conditions at a given `K` (with `L = 1`).
///
/// (A1) valence at most `K`; (A2) ball nesting; (A3) edges have meeting
/// cover sets and meeting cover sets are fewer than `K` hops apart;
/// (A4) the ε-neighborhood of each cover set lies in the K-star.
pub fn verify_conditions(approx: &ApproximationGraph, k: usize) -> ConditionReport {
    let p = &approx.profile;
    let a1 = if p.max_valence <= k {
        ConditionVerdict::pass()
    } else {
        ConditionVerdict::fail(vec![p.valence_witness])
    };
    let a2 = match &p.nesting_failure {
        None => ConditionVerdict::pass(),
        Some(w) => ConditionVerdict::fail(w.clone()),
    };
    let a3 = if let Some(w) = &p.edge_without_overlap {
        ConditionVerdict::fail(w.clone())
    } else if (p.max_overlap_hops as u64) < k as u64 {
        ConditionVerdict::pass()
    } else {
        ConditionVerdict::fail(p.overlap_witness.clone())
    };
    let a4 = if (p.star_requirement as u64) <= k as u64 {
        ConditionVerdict::pass()
    } else {
        ConditionVerdict::fail(p.star_witness.clone())
    };
    ConditionReport { k, a1, a2, a3, a4 }
}

/// Union of the cover sets of vertices fewer than `k` hops from `vertex`.
pub fn k_star(approx: &ApproximationGraph, vertex: PointId, k: usize) -> Result<Vec<PointId>> {
    if k < 1 {
        return Err(Error::domain("K must be at least 1"));
    }
    let v = approx.vertex_of(vertex)?;
    let mut out: Vec<PointId> = approx.hops[v]
        .iter()
        .enumerate()
        .filter(|&(_, &h)| (h as u64) < k as u64)
        .flat_map(|(u, _)| approx.cover[u].iter().copied())
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Measured volume-comparison constant: the smallest `M` with
/// `M⁻¹ rⁿ ≤ vol B(p, r) ≤ M rⁿ` over all points and the given radii, with
/// ball volume estimated as point count times the mean cell volume.
pub fn volume_ratio_constant(space: &FiniteMetricSpace, dim: usize, total_volume: f64, radii: &[f64]) -> f64 {
    let n = space.len();
    let cell = total_volume / n as f64;
    (0..n)
        .into_par_iter()
        .map(|p| {
            let row = space.row(p);
            radii
                .iter()
                .map(|&r| {
                    let vol = row.iter().filter(|&&d| d < r).count() as f64 * cell;
                    let model = r.powi(dim as i32);
                    (vol / model).max(model / vol)
                })
                .fold(1.0, f64::max)
        })
        .reduce(|| 1.0, f64::max)
}

/// The radii at which the valence argument measures ball volumes.
pub fn valence_radii(epsilon: f64) -> [f64; 3] {
    [epsilon / 2.0, 3.0 * epsilon, 4.0 * epsilon]
}

/// `8ⁿ M²`, the valence bound from the volume argument.
pub fn valence_bound(dim: usize, m: f64) -> f64 {
    8f64.powi(dim as i32) * m * m
}
