//! Gromov–Hausdorff bounds between finite metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, PointId};

/// Largest space the exhaustive search accepts.
pub const BRUTEFORCE_LIMIT: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhMethod {
    Identity,
    Bruteforce,
    CommonNet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhBound {
    pub lower: f64,
    pub upper: f64,
    pub method: GhMethod,
}

/// `½ |diam a − diam b|`, a lower bound for any pair.
pub fn diameter_lower_bound(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> f64 {
    0.5 * (a.diameter() - b.diameter()).abs()
}

/// `½ max |a − b|` for two metrics on the same points.
pub fn gh_upper_identity(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Result<f64> {
    if !a.same_points(b) {
        return Err(Error::domain(format!("identity correspondence needs equal sizes ({} vs {})", a.len(), b.len())));
    }
    let worst = a.raw().iter().zip(b.raw()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(0.5 * worst)
}

pub fn identity_bound(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Result<GhBound> {
    Ok(GhBound { lower: diameter_lower_bound(a, b), upper: gh_upper_identity(a, b)?, method: GhMethod::Identity })
}

struct Search<'a> {
    a: &'a FiniteMetricSpace,
    b: &'a FiniteMetricSpace,
    pairs: Vec<(usize, usize)>,
    covered: Vec<usize>,
    best: f64,
}

impl Search<'_> {
    fn cost(&self, x: usize, y: usize) -> f64 {
        self.pairs.iter().map(|&(u, v)| (self.a.dist(x, u) - self.b.dist(y, v)).abs()).fold(0.0, f64::max)
    }

    fn push(&mut self, x: usize, y: usize) {
        self.pairs.push((x, y));
        self.covered[y] += 1;
    }

    fn pop(&mut self) {
        let (_, y) = self.pairs.pop().expect("non-empty relation");
        self.covered[y] -= 1;
    }

    /// Assign images of `a`'s points first, then preimages of uncovered `b` points.
    fn run(&mut self, step: usize, current: f64) {
        if current >= self.best {
            return;
        }
        let (n, m) = (self.a.len(), self.b.len());
        if step < n {
            for y in 0..m {
                let c = current.max(self.cost(step, y));
                if c < self.best {
                    self.push(step, y);
                    self.run(step + 1, c);
                    self.pop();
                }
            }
            return;
        }
        let Some(y) = (0..m).find(|&y| self.covered[y] == 0) else {
            self.best = current;
            return;
        };
        for x in 0..n {
            let c = current.max(self.cost(x, y));
            if c < self.best {
                self.push(x, y);
                self.run(step, c);
                self.pop();
            }
        }
    }
}

/// Exact distance by branch and bound over correspondences.
pub fn gh_bruteforce(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Result<GhBound> {
    let size = a.len().max(b.len());
    if size > BRUTEFORCE_LIMIT {
        return Err(Error::Refused(format!(
            "exhaustive search limited to {BRUTEFORCE_LIMIT} points, got {size}"
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("empty space"));
    }
    let mut best = a.diameter().max(b.diameter()) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    if a.same_points(b) {
        best = best.min(2.0 * gh_upper_identity(a, b)? * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    }
    let mut search = Search { a, b, pairs: Vec::new(), covered: vec![0; b.len()], best };
    search.run(0, 0.0);
    let value = 0.5 * search.best;
    Ok(GhBound { lower: value, upper: value, method: GhMethod::Bruteforce })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonNetBound {
    /// Density multiple: the net is within `μ·ε` of every point of both spaces.
    pub mu: f64,
    pub epsilon: f64,
    pub density_a: f64,
    pub density_b: f64,
    /// `½ max |a − b|` restricted to the net.
    pub net_distortion: f64,
    pub bound: GhBound,
}

fn covering_radius(space: &FiniteMetricSpace, net: &[PointId]) -> f64 {
    (0..space.len())
        .map(|x| net.iter().map(|p| space.dist(x, p.0)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Bound through a set that is dense in both metrics.
///
/// Upper bound `2·μ·ε + ½ max_net |a − b|`. With `mu` given, density is
/// checked against it; otherwise `μ` is measured.
pub fn gh_via_common_net(
    a: &FiniteMetricSpace,
    b: &FiniteMetricSpace,
    net: &[PointId],
    epsilon: f64,
    mu: Option<f64>,
) -> Result<CommonNetBound> {
    if !a.same_points(b) {
        return Err(Error::domain("common-net bound needs both metrics on the same points"));
    }
    if net.is_empty() {
        return Err(Error::domain("empty net"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if let Some(p) = net.iter().find(|p| p.0 >= a.len()) {
        return Err(Error::domain(format!("net point {} out of range", p.0)));
    }
    let (ha, hb) = (covering_radius(a, net), covering_radius(b, net));
    let measured = ha.max(hb) / epsilon;
    let mu = match mu {
        Some(mu) => {
            for (name, h) in [(a.label(), ha), (b.label(), hb)] {
                if h > mu * epsilon * (1.0 + 1e-12) {
                    return Err(Error::Precondition {
                        message: format!("net is not {mu}·ε-dense in {name}: gap {h}"),
                        witness: vec![],
                    });
                }
            }
            mu
        }
        None => measured,
    };
    let net_a = a.restrict(net)?;
    let net_b = b.restrict(net)?;
    let net_distortion = gh_upper_identity(&net_a, &net_b)?;
    let upper = 2.0 * mu * epsilon + net_distortion;
    Ok(CommonNetBound {
        mu,
        epsilon,
        density_a: ha,
        density_b: hb,
        net_distortion,
        bound: GhBound { lower: diameter_lower_bound(a, b), upper, method: GhMethod::CommonNet },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_spaces_are_at_zero() {
        let a = FiniteMetricSpace::line(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(gh_upper_identity(&a, &a).unwrap(), 0.0);
        assert_eq!(gh_bruteforce(&a, &a).unwrap().upper, 0.0);
    }

    #[test]
    fn scaled_space_identity_bound() {
        let a = FiniteMetricSpace::line(&[0.0, 1.0, 3.0]).unwrap();
        let b = a.scaled(2.0).unwrap();
        assert_eq!(gh_upper_identity(&a, &b).unwrap(), 1.5);
        let exact = gh_bruteforce(&a, &b).unwrap();
        assert!(exact.upper <= 1.5);
        assert!(exact.upper >= diameter_lower_bound(&a, &b));
    }

    #[test]
    fn point_against_segment() {
        let a = FiniteMetricSpace::line(&[0.0]).unwrap();
        let b = FiniteMetricSpace::line(&[0.0, 2.0]).unwrap();
        assert_eq!(gh_bruteforce(&a, &b).unwrap().upper, 1.0);
    }

    #[test]
    fn permuted_points_are_isometric() {
        let a = FiniteMetricSpace::line(&[0.0, 1.0, 3.0, 7.0]).unwrap();
        let b = FiniteMetricSpace::line(&[7.0, 3.0, 0.0, 1.0]).unwrap();
        assert!(gh_upper_identity(&a, &b).unwrap() > 0.0);
        assert_eq!(gh_bruteforce(&a, &b).unwrap().upper, 0.0);
    }

    #[test]
    fn equilateral_versus_path() {
        // exact value 1/2: sides 1,1,1 against 1,1,2
        let a = FiniteMetricSpace::from_fn("tri", 3, |_, _| 1.0).unwrap();
        let b = FiniteMetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(gh_bruteforce(&a, &b).unwrap().upper, 0.5);
    }

    #[test]
    fn refuses_large_inputs() {
        let a = FiniteMetricSpace::line(&(0..8).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert!(matches!(gh_bruteforce(&a, &a), Err(Error::Refused(_))));
    }

    #[test]
    fn common_net_bound_dominates_exact() {
        let a = FiniteMetricSpace::line(&[0.0, 0.4, 1.0, 1.3, 2.0]).unwrap();
        let b = a.map("b", |v| v * 1.1).unwrap();
        let net = [PointId(0), PointId(2), PointId(4)];
        let c = gh_via_common_net(&a, &b, &net, 0.5, None).unwrap();
        let exact = gh_bruteforce(&a, &b).unwrap();
        assert!(exact.upper <= c.bound.upper);
        assert!(c.mu * 0.5 >= c.density_a.max(c.density_b));
        assert!(gh_via_common_net(&a, &b, &net, 0.5, Some(0.1)).is_err());
    }
}
