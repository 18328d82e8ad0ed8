//! Gluing a small metric on a subset into an ambient metric.
//!
//! The glued distance between `x` and `y` is the ambient distance, or a
//! single detour `ρ(x,p) + d(p,q) + ρ(q,y)` through the subset, whichever is
//! shorter.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, PointId};

#[derive(Clone, Debug)]
pub struct GluedMetric {
    pub ambient: FiniteMetricSpace,
    pub shortcut_set: Vec<PointId>,
    /// Metric on the shortcut set, indexed like `shortcut_set`.
    pub shortcut_dist: FiniteMetricSpace,
    pub result: FiniteMetricSpace,
    /// Pairs where `d` exceeded `ρ` within tolerance and was clamped.
    pub clamped: usize,
}

/// Builds the glued metric from `ambient` (ρ) and `d_on_s` on `subset`.
///
/// Fails if `d > ρ` anywhere on the subset beyond the ambient tolerance.
pub fn glue(ambient: &FiniteMetricSpace, subset: &[PointId], d_on_s: &FiniteMetricSpace) -> Result<GluedMetric> {
    let n = ambient.len();
    let m = subset.len();
    if d_on_s.len() != m {
        return Err(Error::domain(format!("shortcut metric has {} points for a {m}-point subset", d_on_s.len())));
    }
    if let Some(p) = subset.iter().find(|p| p.0 >= n) {
        return Err(Error::domain(format!("subset point {} out of range", p.0)));
    }
    let tol = ambient.tolerance();

    let mut shortcut = vec![0.0; m * m];
    let mut clamped = 0;
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let (d, rho) = (d_on_s.dist(a, b), ambient.dist(subset[a].0, subset[b].0));
            if d > rho + tol {
                return Err(Error::Precondition {
                    message: format!("shortcut distance {d} exceeds ambient distance {rho}"),
                    witness: vec![subset[a].0, subset[b].0],
                });
            }
            shortcut[a * m + b] = if d > rho {
                clamped += 1;
                rho
            } else {
                d
            };
        }
    }
    if clamped > 0 {
        warn!("clamped {} shortcut entries exceeding the ambient metric within tolerance", clamped / 2);
    }

    // Stage one: entry[x][q] = min_p ρ(x,p) + d(p,q).
    let entry: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let row = ambient.row(x);
            let shortcut = &shortcut;
            (0..m).map(move |q| {
                (0..m).map(|p| row[subset[p].0] + shortcut[p * m + q]).fold(f64::INFINITY, f64::min)
            })
        })
        .collect();

    // Stage two: ρ̃(x,y) = min(ρ(x,y), min_q entry[x][q] + ρ(q,y)).
    let mut table = vec![0.0; n * n];
    table.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
        let ex = &entry[x * m..(x + 1) * m];
        for (y, slot) in out.iter_mut().enumerate() {
            if x == y {
                *slot = 0.0;
                continue;
            }
            let mut best = ambient.dist(x, y);
            for (q, &e) in ex.iter().enumerate() {
                let via = e + ambient.dist(subset[q].0, y);
                if via < best {
                    best = via;
                }
            }
            *slot = best;
        }
    });
    for x in 0..n {
        for y in (x + 1)..n {
            let v = table[x * n + y].min(table[y * n + x]);
            table[x * n + y] = v;
            table[y * n + x] = v;
        }
    }
    let shortcut_dist = FiniteMetricSpace::from_dense(
        d_on_s.label().to_string(),
        d_on_s.points().to_vec(),
        shortcut,
    );
    let result = FiniteMetricSpace::from_dense("glued", ambient.points().to_vec(), table);
    Ok(GluedMetric { ambient: ambient.clone(), shortcut_set: subset.to_vec(), shortcut_dist, result, clamped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalIsometryVerdict {
    pub ok: bool,
    /// Smallest shortcut distance between distinct subset points. Pairs with
    /// ambient distance below it can never be shortened.
    pub separation: f64,
    /// Largest `r` with `ρ(x,y) < r ⇒ ρ̃(x,y) = ρ(x,y)`, by full scan.
    /// Differences within the ambient tolerance count as equal.
    pub observed_radius: f64,
    pub changed_pairs: usize,
    pub witness: Option<(usize, usize)>,
}

pub fn verify_local_isometry(glued: &GluedMetric, gap_threshold: f64) -> LocalIsometryVerdict {
    let rho = &glued.ambient;
    let res = &glued.result;
    let n = rho.len();
    let m = glued.shortcut_dist.len();
    let mut separation = f64::INFINITY;
    for a in 0..m {
        for b in (a + 1)..m {
            separation = separation.min(glued.shortcut_dist.dist(a, b));
        }
    }
    if separation.is_infinite() {
        separation = rho.diameter();
    }
    let tol = rho.tolerance();
    let mut observed = f64::INFINITY;
    let mut witness = None;
    let mut changed = 0;
    for x in 0..n {
        for y in (x + 1)..n {
            let r = rho.dist(x, y);
            if res.dist(x, y) < r - tol {
                changed += 1;
                if r < observed {
                    observed = r;
                    witness = Some((x, y));
                }
            }
        }
    }
    if observed.is_infinite() {
        observed = rho.diameter();
    }
    LocalIsometryVerdict { ok: observed >= gap_threshold, separation, observed_radius: observed, changed_pairs: changed, witness }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLipschitzVerdict {
    pub ok: bool,
    pub lipschitz: f64,
    /// Largest `ρ / ρ̃` over all pairs.
    pub worst_ratio: f64,
    pub witness: Option<(usize, usize)>,
}

/// Checks `L⁻¹ρ ≤ ρ̃ ≤ ρ` on every pair.
pub fn verify_bilipschitz_comparison(glued: &GluedMetric, lipschitz: f64) -> Result<BiLipschitzVerdict> {
    if !(lipschitz >= 1.0) {
        return Err(Error::domain(format!("Lipschitz constant must be at least 1, got {lipschitz}")));
    }
    let rho = &glued.ambient;
    let res = &glued.result;
    let n = rho.len();
    let mut worst: f64 = 1.0;
    let mut witness = None;
    let mut above = false;
    for x in 0..n {
        for y in (x + 1)..n {
            let (r, g) = (rho.dist(x, y), res.dist(x, y));
            if g > r {
                above = true;
                witness.get_or_insert((x, y));
            }
            let ratio = r / g;
            if ratio > worst {
                worst = ratio;
                if !above {
                    witness = Some((x, y));
                }
            }
        }
    }
    let ok = !above && worst <= lipschitz * (1.0 + 1e-12);
    Ok(BiLipschitzVerdict { ok, lipschitz, worst_ratio: worst, witness: if ok { None } else { witness } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::default_names;

    fn pair(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::line(&[0.0, d]).unwrap()
    }

    fn ids(v: &[usize]) -> Vec<PointId> {
        v.iter().map(|&i| PointId(i)).collect()
    }

    #[test]
    fn two_point_shortcut() {
        let rho = pair(10.0);
        let g = glue(&rho, &ids(&[0, 1]), &pair(3.0)).unwrap();
        assert_eq!(g.result.dist(0, 1), 3.0);

        let v = verify_bilipschitz_comparison(&g, 10.0 / 3.0).unwrap();
        assert!(v.ok);
        assert_eq!(v.worst_ratio, 10.0 / 3.0);
        let v = verify_bilipschitz_comparison(&g, 3.0).unwrap();
        assert!(!v.ok);
        assert_eq!(v.witness, Some((0, 1)));
    }

    #[test]
    fn equal_shortcut_changes_nothing() {
        let rho = FiniteMetricSpace::line(&[0.0, 1.0, 4.0, 9.0]).unwrap();
        let s = ids(&[1, 3]);
        let d = rho.restrict(&s).unwrap();
        let g = glue(&rho, &s, &d).unwrap();
        assert_eq!(g.result.raw(), rho.raw());
        let v = verify_local_isometry(&g, 1.0);
        assert_eq!(v.observed_radius, rho.diameter());
        assert_eq!(v.changed_pairs, 0);
        let b = verify_bilipschitz_comparison(&g, 1.0).unwrap();
        assert!(b.ok);
        assert_eq!(b.worst_ratio, 1.0);
    }

    #[test]
    fn three_point_line() {
        let rho = FiniteMetricSpace::line(&[0.0, 5.0, 10.0]).unwrap();
        let g = glue(&rho, &ids(&[0, 2]), &pair(3.0)).unwrap();
        assert_eq!(g.result.dist(0, 2), 3.0);
        assert_eq!(g.result.dist(0, 1), 5.0);
        assert_eq!(g.result.dist(1, 2), 5.0);
        assert!(g.result.check_axioms(0.0).is_valid());

        let v = verify_local_isometry(&g, 3.0);
        assert_eq!(v.separation, 3.0);
        assert_eq!(v.observed_radius, 10.0);
        assert_eq!(v.witness, Some((0, 2)));
        assert!(v.ok);
    }

    #[test]
    fn shortcut_longer_than_ambient_is_rejected() {
        let rho = pair(1.0);
        match glue(&rho, &ids(&[0, 1]), &pair(2.0)) {
            Err(Error::Precondition { witness, .. }) => assert_eq!(witness, vec![0, 1]),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn excess_within_tolerance_is_clamped() {
        let rho = pair(1.0);
        let g = glue(&rho, &ids(&[0, 1]), &pair(1.0 + 1e-12)).unwrap();
        assert_eq!(g.clamped, 2);
        assert_eq!(g.result.dist(0, 1), 1.0);
    }

    #[test]
    fn matches_direct_formula() {
        let raw = FiniteMetricSpace::from_fn("r", 6, |i, j| ((3 * (i + j)) % 5 + 1) as f64).unwrap();
        let rho = crate::metric::path_metric_closure(&raw);
        let s = ids(&[0, 2, 5]);
        let d = FiniteMetricSpace::new(
            "d",
            default_names(3),
            vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 1.0], vec![0.5, 1.0, 0.0]],
        )
        .unwrap();
        let g = glue(&rho, &s, &d).unwrap();
        for x in 0..6 {
            for y in 0..6 {
                let mut best = rho.dist(x, y);
                for (a, p) in s.iter().enumerate() {
                    for (b, q) in s.iter().enumerate() {
                        best = best.min(rho.dist(x, p.0) + d.dist(a, b) + rho.dist(q.0, y));
                    }
                }
                if x == y {
                    best = 0.0;
                }
                assert_eq!(g.result.dist(x, y), best, "({x},{y})");
            }
        }
    }
}
