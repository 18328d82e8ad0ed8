//! Finite metric spaces with dense distance tables.
//!
//! Every metric in the crate (geodesic, target, rescaled, glued) is carried by a
//! [`FiniteMetricSpace`] over a shared, positional point set. Spaces are
//! immutable once built.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for axiom checks, scaled by the space diameter.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Positional index of a point in its owning space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i)
    }
}

/// A finite point set with a symmetric, zero-diagonal distance table.
///
/// Construction validates the structural axioms (square, finite, symmetric,
/// zero diagonal, positive off-diagonal). The triangle inequality is checked
/// separately with [`check_metric_axioms`], since path closure accepts
/// tables that violate it.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    label: String,
    points: Vec<String>,
    dist: Vec<f64>,
    diameter: f64,
}

impl FiniteMetricSpace {
    pub fn new(label: impl Into<String>, points: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if points.len() != n {
            return Err(Error::malformed(format!(
                "{} point names for a {n}-row table",
                points.len()
            )));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::malformed(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            dist.extend_from_slice(row);
        }
        let space = FiniteMetricSpace::assemble(label.into(), points, dist);
        space.validate_structure()?;
        Ok(space)
    }

    /// Builds a space from a distance function with default point names.
    pub fn from_fn(label: impl Into<String>, n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dist[i * n + j] = f(i, j);
                }
            }
        }
        let space = FiniteMetricSpace::assemble(label.into(), default_names(n), dist);
        space.validate_structure()?;
        Ok(space)
    }

    /// Points on a line at the given positions, with `|x - y|` distances.
    pub fn line(positions: &[f64]) -> Result<Self> {
        Self::from_fn("line", positions.len(), |i, j| (positions[i] - positions[j]).abs())
    }

    /// Wraps a dense row-major table that the caller guarantees is structurally valid.
    pub(crate) fn from_dense(label: impl Into<String>, points: Vec<String>, dist: Vec<f64>) -> Self {
        debug_assert_eq!(points.len() * points.len(), dist.len());
        FiniteMetricSpace::assemble(label.into(), points, dist)
    }

    fn assemble(label: String, points: Vec<String>, dist: Vec<f64>) -> Self {
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        FiniteMetricSpace { label, points, dist, diameter }
    }

    fn validate_structure(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.dist(i, i) != 0.0 {
                return Err(Error::malformed(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (self.dist(i, j), self.dist(j, i));
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::malformed(format!("non-finite distance at ({i},{j})")));
                }
                if a != b {
                    return Err(Error::malformed(format!("asymmetric distance at ({i},{j}): {a} vs {b}")));
                }
                if a <= 0.0 {
                    return Err(Error::malformed(format!("nonpositive distance {a} at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.points.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Absolute tolerance used for axiom comparisons in this space.
    pub fn tolerance(&self) -> f64 {
        RELATIVE_TOLERANCE * self.diameter()
    }

    /// Applies `f` to every off-diagonal entry. The caller is responsible for
    /// `f` preserving positivity.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = self.len();
        let dist = self
            .dist
            .iter()
            .enumerate()
            .map(|(k, &v)| if k / n == k % n { 0.0 } else { f(v) })
            .collect();
        let space = FiniteMetricSpace::assemble(label.into(), self.points.clone(), dist);
        space.validate_structure()?;
        Ok(space)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain(format!("scale factor must be positive, got {factor}")));
        }
        self.map(format!("{}*{factor}", self.label), |v| factor * v)
    }

    /// The subspace on `subset`, in the given order.
    pub fn restrict(&self, subset: &[PointId]) -> Result<Self> {
        let n = self.len();
        if let Some(bad) = subset.iter().find(|p| p.0 >= n) {
            return Err(Error::domain(format!("point {} out of range", bad.0)));
        }
        let m = subset.len();
        let mut dist = vec![0.0; m * m];
        for (a, p) in subset.iter().enumerate() {
            for (b, q) in subset.iter().enumerate() {
                dist[a * m + b] = self.dist(p.0, q.0);
            }
        }
        let points = subset.iter().map(|p| self.points[p.0].clone()).collect();
        let space = FiniteMetricSpace::assemble(format!("{}|sub", self.label), points, dist);
        space.validate_structure()?;
        Ok(space)
    }

    pub fn same_points(&self, other: &FiniteMetricSpace) -> bool {
        self.len() == other.len()
    }

    pub fn check_axioms(&self, tolerance: f64) -> AxiomReport {
        scan_axioms(self.len(), |i, j| self.dist(i, j), tolerance)
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Nonzero diagonal or nonpositive off-diagonal entry.
    Identity,
    Symmetry,
    Triangle,
}

/// Worst violation of one axiom family.
///
/// Triangle witnesses are `[i, j, k]`, read as "`(i, j)` via `k`".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub identity: Option<Violation>,
    pub symmetry: Option<Violation>,
    pub triangle: Option<Violation>,
}

impl AxiomReport {
    pub fn is_valid(&self) -> bool {
        self.identity.is_none() && self.symmetry.is_none() && self.triangle.is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        [&self.identity, &self.symmetry, &self.triangle].into_iter().flatten()
    }
}

/// Checks the metric axioms on a raw table, reporting the worst violation per family.
pub fn check_metric_axioms(table: &[Vec<f64>], tolerance: f64) -> Result<AxiomReport> {
    let n = table.len();
    if let Some((i, row)) = table.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::malformed(format!("table is not square: row {i} has {} entries", row.len())));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::malformed("table contains non-finite entries"));
    }
    Ok(scan_axioms(n, |i, j| table[i][j], tolerance))
}

fn keep_worst(slot: &mut Option<Violation>, kind: ViolationKind, witness: &[usize], magnitude: f64) {
    if slot.as_ref().is_none_or(|v| magnitude > v.magnitude) {
        *slot = Some(Violation { kind, witness: witness.to_vec(), magnitude });
    }
}

fn scan_axioms(n: usize, d: impl Fn(usize, usize) -> f64, tol: f64) -> AxiomReport {
    let mut report = AxiomReport::default();
    for i in 0..n {
        let diag = d(i, i);
        if diag.abs() > tol {
            keep_worst(&mut report.identity, ViolationKind::Identity, &[i, i], diag.abs());
        }
        for j in 0..n {
            if i != j && d(i, j) <= 0.0 {
                keep_worst(&mut report.identity, ViolationKind::Identity, &[i, j], -d(i, j));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (d(i, j) - d(j, i)).abs();
            if gap > tol {
                keep_worst(&mut report.symmetry, ViolationKind::Symmetry, &[i, j], gap);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let direct = d(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let excess = direct - (d(i, k) + d(k, j));
                if excess > tol {
                    keep_worst(&mut report.triangle, ViolationKind::Triangle, &[i, j, k], excess);
                }
            }
        }
    }
    report
}

/// Replaces every distance by the cheapest chain sum (all-pairs relaxation).
///
/// Relaxation repeats until no entry changes, so the output satisfies the
/// triangle inequality exactly in floating point.
pub fn path_metric_closure(space: &FiniteMetricSpace) -> FiniteMetricSpace {
    let n = space.len();
    let mut d = space.raw().to_vec();
    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                for j in 0..n {
                    let via = dik + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    FiniteMetricSpace::from_dense(space.label().to_string(), space.points().to_vec(), d)
}

/// Open (`dist < r`) or closed (`dist <= r`) ball around `center`.
pub fn ball(space: &FiniteMetricSpace, center: PointId, r: f64, closed: bool) -> Result<Vec<PointId>> {
    if center.0 >= space.len() {
        return Err(Error::domain(format!("center {} out of range", center.0)));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius must be non-negative, got {r}")));
    }
    Ok(space
        .row(center.0)
        .iter()
        .enumerate()
        .filter(|&(_, &v)| if closed { v <= r } else { v < r })
        .map(|(i, _)| PointId(i))
        .collect())
}

/// `sup_{a in A} inf_{b in B} dist(a, b)`.
pub fn directed_hausdorff(space: &FiniteMetricSpace, a: &[PointId], b: &[PointId]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Hausdorff distance of an empty set"));
    }
    let n = space.len();
    if let Some(p) = a.iter().chain(b).find(|p| p.0 >= n) {
        return Err(Error::domain(format!("point {} out of range", p.0)));
    }
    Ok(a.iter()
        .map(|p| {
            let row = space.row(p.0);
            b.iter().map(|q| row[q.0]).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

pub fn hausdorff_distance(space: &FiniteMetricSpace, a: &[PointId], b: &[PointId]) -> Result<f64> {
    Ok(directed_hausdorff(space, a, b)?.max(directed_hausdorff(space, b, a)?))
}

/// On-disk form: `dist` holds the strict lower triangle, row by row
/// (row `i` has `i` entries).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricFile {
    pub label: String,
    pub points: Vec<String>,
    pub dist: Vec<Vec<f64>>,
}

impl From<&FiniteMetricSpace> for MetricFile {
    fn from(space: &FiniteMetricSpace) -> Self {
        MetricFile {
            label: space.label().to_string(),
            points: space.points().to_vec(),
            dist: (0..space.len()).map(|i| space.row(i)[..i].to_vec()).collect(),
        }
    }
}

impl TryFrom<MetricFile> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(file: MetricFile) -> Result<Self> {
        let n = file.points.len();
        if file.dist.len() != n {
            return Err(Error::malformed(format!("{} triangle rows for {n} points", file.dist.len())));
        }
        let mut dist = vec![0.0; n * n];
        for (i, row) in file.dist.iter().enumerate() {
            if row.len() != i {
                return Err(Error::malformed(format!("triangle row {i} has {} entries", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        let space = FiniteMetricSpace::assemble(file.label, file.points, dist);
        space.validate_structure()?;
        Ok(space)
    }
}

impl FiniteMetricSpace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MetricFile::from(self)).expect("metric file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MetricFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
