//! Empirical quasisymmetry moduli, bi-Lipschitz constants and Hölder bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

/// Spaces up to this size are scanned over every triple.
pub const EXHAUSTIVE_LIMIT: usize = 60;
/// Random triples drawn for larger spaces.
pub const SAMPLED_TRIPLES: usize = 200_000;

/// One sampled triple `(p, q, s)` with `t = src(p,q)/src(q,s)` and
/// `q = tgt(p,q)/tgt(q,s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub t: f64,
    pub q: f64,
    pub triple: [u32; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TripleSampling {
    Exhaustive,
    /// `count` seeded random triples plus every triple among `extra`.
    Sampled { seed: u64, count: usize, extra: Vec<usize> },
}

impl TripleSampling {
    /// Exhaustive for small spaces, otherwise the default sampled scan.
    pub fn auto(n: usize, seed: u64, extra: Vec<usize>) -> Self {
        if n <= EXHAUSTIVE_LIMIT {
            TripleSampling::Exhaustive
        } else {
            TripleSampling::Sampled { seed, count: SAMPLED_TRIPLES, extra }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuotientSet {
    pub quotients: Vec<Quotient>,
    pub scanned: usize,
    /// Triples dropped for a zero denominator.
    pub skipped: usize,
}

fn quotient(src: &FiniteMetricSpace, tgt: &FiniteMetricSpace, p: usize, q: usize, s: usize) -> Option<Quotient> {
    let (a, b) = (src.dist(q, s), tgt.dist(q, s));
    if a == 0.0 || b == 0.0 {
        return None;
    }
    Some(Quotient { t: src.dist(p, q) / a, q: tgt.dist(p, q) / b, triple: [p as u32, q as u32, s as u32] })
}

/// Visits the sampled triples in parallel blocks. Each block is folded with
/// `fold` and the block results are returned in a deterministic order.
fn scan_triples<T: Send>(
    n: usize,
    sampling: &TripleSampling,
    fold: impl Fn(&mut dyn Iterator<Item = (usize, usize, usize)>) -> T + Sync,
) -> Vec<T> {
    let all_over = |points: Vec<usize>| -> Vec<T> {
        let pts = &points;
        pts.par_iter()
            .map(|&p| {
                let mut it = pts
                    .iter()
                    .flat_map(move |&q| pts.iter().map(move |&s| (p, q, s)))
                    .filter(|&(p, q, s)| q != p && q != s);
                fold(&mut it)
            })
            .collect()
    };
    match sampling {
        TripleSampling::Exhaustive => all_over((0..n).collect()),
        TripleSampling::Sampled { seed, count, extra } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut random = Vec::with_capacity(*count);
            if n >= 2 {
                while random.len() < *count {
                    let (p, q, s) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                    if q != p && q != s {
                        random.push((p, q, s));
                    }
                }
            }
            let mut out: Vec<T> = random.par_chunks(8192).map(|c| fold(&mut c.iter().copied())).collect();
            let mut extra = extra.clone();
            extra.sort_unstable();
            extra.dedup();
            out.extend(all_over(extra));
            out
        }
    }
}

fn collect(src: &FiniteMetricSpace, tgt: &FiniteMetricSpace, it: &mut dyn Iterator<Item = (usize, usize, usize)>) -> QuotientSet {
    let mut set = QuotientSet::default();
    for (p, q, s) in it {
        set.scanned += 1;
        match quotient(src, tgt, p, q, s) {
            Some(x) => set.quotients.push(x),
            None => set.skipped += 1,
        }
    }
    set
}

fn check_pair(source: &FiniteMetricSpace, target: &FiniteMetricSpace) -> Result<()> {
    if !source.same_points(target) {
        return Err(Error::domain(format!(
            "metrics live on different point sets ({} vs {} points)",
            source.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Every sampled quotient pair.
pub fn qs_quotients(source: &FiniteMetricSpace, target: &FiniteMetricSpace, sampling: &TripleSampling) -> Result<QuotientSet> {
    check_pair(source, target)?;
    let parts = scan_triples(source.len(), sampling, |it| collect(source, target, it));
    let mut out = QuotientSet::default();
    for part in parts {
        out.scanned += part.scanned;
        out.skipped += part.skipped;
        out.quotients.extend(part.quotients);
    }
    Ok(out)
}

/// Keeps only quotients not dominated by another with smaller-or-equal `t`
/// and larger-or-equal `q`. For increasing moduli this is lossless: any
/// modulus above the front is above every quotient.
pub fn dominance_front(mut qs: Vec<Quotient>) -> Vec<Quotient> {
    qs.sort_by(|a, b| a.t.total_cmp(&b.t).then(b.q.total_cmp(&a.q)).then(a.triple.cmp(&b.triple)));
    let mut best = f64::NEG_INFINITY;
    qs.retain(|x| {
        if x.q > best {
            best = x.q;
            true
        } else {
            false
        }
    });
    qs
}

/// Like [`qs_quotients`] but reduced to the dominance front while scanning,
/// so large samples stay small in memory.
pub fn quotient_front(source: &FiniteMetricSpace, target: &FiniteMetricSpace, sampling: &TripleSampling) -> Result<QuotientSet> {
    check_pair(source, target)?;
    let parts = scan_triples(source.len(), sampling, |it| {
        let mut set = collect(source, target, it);
        set.quotients = dominance_front(set.quotients);
        set
    });
    let mut out = QuotientSet::default();
    let mut all = Vec::new();
    for part in parts {
        out.scanned += part.scanned;
        out.skipped += part.skipped;
        all.extend(part.quotients);
    }
    out.quotients = dominance_front(all);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusFamily {
    /// `η(t) = C · max(t^α, t^(1/α))`.
    PowerPair,
    /// `η(t) = C · t`.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    pub family: ModulusFamily,
    pub c: f64,
    pub alpha: f64,
    /// Triple attaining the tightest constraint.
    pub worst_triple: [usize; 3],
}

impl ModulusFit {
    pub fn identity() -> Self {
        ModulusFit { family: ModulusFamily::Linear, c: 1.0, alpha: 1.0, worst_triple: [0; 3] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.c * shape(self.family, self.alpha, t)
    }
}

fn shape(family: ModulusFamily, alpha: f64, t: f64) -> f64 {
    match family {
        ModulusFamily::Linear => t,
        ModulusFamily::PowerPair => t.powf(alpha).max(t.powf(1.0 / alpha)),
    }
}

fn log_shape(family: ModulusFamily, alpha: f64, log_t: f64) -> f64 {
    match family {
        ModulusFamily::Linear => log_t,
        ModulusFamily::PowerPair => (alpha * log_t).max(log_t / alpha),
    }
}

/// Exponent grid searched by the power-pair fit.
const ALPHA_STEPS: usize = 200;

/// Smallest `C ≥ 1` with `q ≤ η(t)` on every quotient. For the power-pair
/// family the exponent is the largest grid value attaining the minimal `C`.
pub fn fit_modulus(quotients: &[Quotient], family: ModulusFamily) -> Result<ModulusFit> {
    if quotients.is_empty() {
        return Err(Error::FitFailure("no quotients to fit".into()));
    }
    if let Some(x) = quotients.iter().find(|x| !(x.t > 0.0 && x.t.is_finite() && x.q >= 0.0 && x.q.is_finite())) {
        return Err(Error::FitFailure(format!("unbounded quotient {} at t = {} (triple {:?})", x.q, x.t, x.triple)));
    }
    let logs: Vec<(f64, f64)> = quotients.iter().map(|x| (x.t.ln(), x.q.ln())).collect();
    let log_c = |alpha: f64| -> f64 {
        logs.iter()
            .map(|&(lt, lq)| lq - log_shape(family, alpha, lt))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    };

    let alpha = match family {
        ModulusFamily::Linear => 1.0,
        ModulusFamily::PowerPair => {
            let grid: Vec<(f64, f64)> = (1..=ALPHA_STEPS)
                .into_par_iter()
                .map(|k| {
                    let a = k as f64 / ALPHA_STEPS as f64;
                    (a, log_c(a))
                })
                .collect();
            let best = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Err(Error::FitFailure("no exponent in the grid admits a finite constant".into()));
            }
            grid.iter().rev().find(|g| g.1 <= best + 1e-9).expect("grid minimum exists").0
        }
    };

    let mut c: f64 = 1.0;
    let mut worst = quotients[0].triple;
    for x in quotients {
        let need = x.q / shape(family, alpha, x.t);
        if need > c {
            c = need;
            worst = x.triple;
        }
    }
    if !c.is_finite() {
        return Err(Error::FitFailure(format!("constant diverges at triple {worst:?}")));
    }
    Ok(ModulusFit { family, c, alpha, worst_triple: worst.map(|v| v as usize) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCheck {
    pub scanned: usize,
    pub violations: usize,
    /// Largest `q / η(t)` seen.
    pub worst_ratio: f64,
}

/// Re-scans every sampled triple against a fitted modulus.
pub fn verify_modulus(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    sampling: &TripleSampling,
    fit: &ModulusFit,
) -> Result<ModulusCheck> {
    check_pair(source, target)?;
    let parts = scan_triples(source.len(), sampling, |it| {
        let (mut scanned, mut bad, mut worst) = (0usize, 0usize, 0.0f64);
        for (p, q, s) in it {
            if let Some(x) = quotient(source, target, p, q, s) {
                scanned += 1;
                let ratio = x.q / fit.eval(x.t);
                worst = worst.max(ratio);
                if ratio > 1.0 + 1e-12 {
                    bad += 1;
                }
            }
        }
        (scanned, bad, worst)
    });
    let (scanned, violations, worst_ratio) =
        parts.into_iter().fold((0, 0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1, f64::max(acc.2, x.2)));
    Ok(ModulusCheck { scanned, violations, worst_ratio })
}

/// Smallest `L` with `L⁻¹a ≤ b ≤ L a` on every pair.
pub fn bilipschitz_constant(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Result<f64> {
    check_pair(a, b)?;
    if a.len() < 2 {
        return Err(Error::domain("bi-Lipschitz constant needs at least two points"));
    }
    let n = a.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let (x, y) = (a.dist(i, j), b.dist(i, j));
                    (x / y).max(y / x)
                })
                .fold(1.0, f64::max)
        })
        .reduce(|| 1.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoelderFit {
    pub c: f64,
    pub alpha: f64,
}

impl HoelderFit {
    pub fn bound(&self, r: f64) -> f64 {
        self.c * r.powf(self.alpha)
    }
}

/// Exponent grid for the Hölder fit, largest first.
pub const HOELDER_GRID: [f64; 10] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
/// Scale band, as a multiple of the smallest distance, treated as "finest".
const FINE_BAND: f64 = 4.0;
/// Allowed growth of the ratio inside the finest band.
const FINE_GROWTH: f64 = 1.05;

/// Fits `d ≤ C′ d_g^α` on pairs with `d_g < 1`.
///
/// A grid exponent is admitted when `d / d_g^α` does not grow toward the
/// finest sampled scale: its maximum over pairs with `d_g` within a factor
/// 4 of the smallest distance exceeds the maximum over the remaining pairs
/// by at most 5%. `0.1` is always admitted.
pub fn fit_hoelder(d_g: &FiniteMetricSpace, d: &FiniteMetricSpace) -> Result<HoelderFit> {
    check_pair(d_g, d)?;
    let n = d_g.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let g = d_g.dist(i, j);
            if g < 1.0 {
                pairs.push((g, d.dist(i, j)));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::domain("no pairs below unit geodesic distance"));
    }
    let finest = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let ratio_max = |alpha: f64, keep: &dyn Fn(f64) -> bool| -> f64 {
        pairs.iter().filter(|p| keep(p.0)).map(|&(g, v)| v / g.powf(alpha)).fold(0.0, f64::max)
    };
    for &alpha in &HOELDER_GRID {
        let all = ratio_max(alpha, &|_| true);
        let coarse = ratio_max(alpha, &|g| g >= FINE_BAND * finest);
        let admitted = alpha == 0.1 || coarse == 0.0 || all <= FINE_GROWTH * coarse;
        if admitted {
            return Ok(HoelderFit { c: all, alpha });
        }
    }
    unreachable!("0.1 is always admitted")
}
