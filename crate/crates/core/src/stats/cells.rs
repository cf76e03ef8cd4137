use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::PhasePoint;
use crate::geometry::TableGeometry;
use crate::induced::{CellDictionary, CellIndex, InducedError, ReducedSpaceRule};
use crate::par::map_fold;

use super::birkhoff::MeanEstimate;
use super::sampling::{induced_sample, DiscardCounters, InducedSample, SamplingError};

/// Cells with fewer counts than this are flagged.
pub const LOW_CONFIDENCE_COUNT: u64 = 25;

/// Which point clouds to keep while estimating cell measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudOptions {
    /// Points kept per cell, first in sample-index order.
    pub per_cell: usize,
    /// Only cells with `n ≤ max_n` are tracked.
    pub max_n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub index: CellIndex,
    pub m: u64,
    pub signature: u64,
    pub count: u64,
    pub measure: f64,
    pub stderr: f64,
    pub low_confidence: bool,
}

/// `μ(R = n)` or `μ(R ≥ n)` with a binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelEstimate {
    pub n: u64,
    pub count: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CellClouds {
    /// Points of `D_m`.
    pub start: Vec<PhasePoint>,
    /// Their images, points of `TD_m`.
    pub end: Vec<PhasePoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellStats {
    pub k: u64,
    /// Samples with a completed or capped excursion; the denominator of
    /// every measure estimate.
    pub valid: u64,
    pub counters: DiscardCounters,
    pub n0: u64,
    pub cells: Vec<CellRecord>,
    pub levels: Vec<LevelEstimate>,
    pub tails: Vec<LevelEstimate>,
    pub mean_return: MeanEstimate,
    #[serde(skip)]
    pub clouds: BTreeMap<CellIndex, CellClouds>,
}

fn binomial(count: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 0.0);
    }
    let p = count as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

impl CellStats {
    pub fn empty() -> Self {
        Self::from_counts(0, DiscardCounters::default(), &[], 0, &CellDictionary::new())
    }

    fn from_counts(
        k: u64,
        counters: DiscardCounters,
        cell_counts: &[(CellIndex, u64, u64)],
        capped: u64,
        dict: &CellDictionary,
    ) -> Self {
        let valid = counters.accepted - counters.singular - counters.numerical;
        let n0 = dict.n0();
        let mut cells: Vec<CellRecord> = cell_counts
            .iter()
            .map(|&(index, signature, count)| {
                let (measure, stderr) = binomial(count, valid);
                CellRecord {
                    index,
                    m: index.m(n0),
                    signature,
                    count,
                    measure,
                    stderr,
                    low_confidence: count < LOW_CONFIDENCE_COUNT,
                }
            })
            .collect();
        cells.sort_by_key(|c| c.m);

        let mut per_n: BTreeMap<u64, u64> = BTreeMap::new();
        for c in &cells {
            *per_n.entry(c.index.n).or_default() += c.count;
        }
        let levels: Vec<LevelEstimate> = per_n
            .iter()
            .map(|(&n, &count)| {
                let (value, stderr) = binomial(count, valid);
                LevelEstimate {
                    n,
                    count,
                    value,
                    stderr,
                }
            })
            .collect();
        let mut remaining = valid;
        let mut tails = Vec::with_capacity(levels.len());
        for l in &levels {
            let (value, stderr) = binomial(remaining, valid);
            tails.push(LevelEstimate {
                n: l.n,
                count: remaining,
                value,
                stderr,
            });
            remaining -= l.count;
        }
        debug_assert_eq!(remaining, capped);
        // Mean return time over completed excursions, from the histogram.
        let completed = valid - capped;
        let (mut s1, mut s2) = (0.0, 0.0);
        for (&n, &c) in &per_n {
            s1 += n as f64 * c as f64;
            s2 += (n as f64).powi(2) * c as f64;
        }
        let mean_return = if completed > 1 {
            let kc = completed as f64;
            let mean = s1 / kc;
            let var = (s2 / kc - mean * mean).max(0.0) * kc / (kc - 1.0);
            MeanEstimate {
                mean,
                stderr: (var / kc).sqrt(),
                count: completed,
            }
        } else {
            MeanEstimate {
                mean: if completed == 1 { s1 } else { 0.0 },
                stderr: 0.0,
                count: completed,
            }
        };
        Self {
            k,
            valid,
            counters,
            n0,
            cells,
            levels,
            tails,
            mean_return,
            clouds: BTreeMap::new(),
        }
    }

    /// Sum of all cell measures.
    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// The deepest decade of return times that is still resolved: the top is
    /// the largest `n` with at least `min_tail` samples in `{R ≥ n}`, the
    /// bottom the largest observed level at or below a tenth of it.
    pub fn deep_decade(&self, min_tail: u64) -> Option<(f64, f64)> {
        let hi = self.tails.iter().rev().find(|t| t.count >= min_tail)?.n;
        let lo = self.levels.iter().rev().find(|l| l.n * 10 <= hi)?.n;
        Some((lo as f64, hi as f64))
    }

    /// `(n, μ(R = n), σ)` triples for a power-law fit.
    pub fn level_series(&self) -> Vec<(f64, f64, f64)> {
        self.levels
            .iter()
            .filter(|l| l.count > 0)
            .map(|l| (l.n as f64, l.value, l.stderr))
            .collect()
    }

    /// `(n, μ(R ≥ n), σ)` triples for a power-law fit.
    pub fn tail_series(&self) -> Vec<(f64, f64, f64)> {
        self.tails
            .iter()
            .filter(|l| l.count > 0)
            .map(|l| (l.n as f64, l.value, l.stderr))
            .collect()
    }
}

/// Estimate `μ(D_m)` from `k` independent `μ`-samples, with tail sums
/// `μ(R ≥ n)` and the mean return time. Excursions longer than `cap`
/// count towards every tail sum but towards no cell.
pub fn estimate_cell_measures(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    k: u64,
    cap: u64,
    seed: u64,
    clouds: Option<CloudOptions>,
) -> Result<CellStats, SamplingError> {
    if k == 0 {
        return Ok(CellStats::empty());
    }
    struct Acc {
        dict: CellDictionary,
        counts: HashMap<CellIndex, (u64, u64)>,
        counters: DiscardCounters,
        capped: u64,
        clouds: BTreeMap<CellIndex, CellClouds>,
        error: Option<SamplingError>,
    }
    let acc = map_fold(
        k,
        Acc {
            dict: CellDictionary::new(),
            counts: HashMap::new(),
            counters: DiscardCounters::default(),
            capped: 0,
            clouds: BTreeMap::new(),
            error: None,
        },
        |i| induced_sample(table, rule, cap, seed, i),
        |acc, _, s| {
            let s = match s {
                Ok(s) => s,
                Err(e) => {
                    acc.error.get_or_insert(e);
                    return;
                }
            };
            acc.counters.record(&s);
            match s {
                InducedSample::Ok { step, .. } => {
                    let idx = acc.dict.cell_index(&step);
                    acc.counts.entry(idx).or_insert((step.signature, 0)).1 += 1;
                    if let Some(opt) = clouds {
                        if idx.n <= opt.max_n {
                            let c = acc.clouds.entry(idx).or_default();
                            if c.start.len() < opt.per_cell {
                                c.start.push(step.start);
                                c.end.push(step.end);
                            }
                        }
                    }
                }
                InducedSample::Failed {
                    error: InducedError::NoReturnWithinCap { .. },
                    ..
                } => acc.capped += 1,
                InducedSample::Failed { .. } => {}
            }
        },
    );
    if let Some(e) = acc.error {
        return Err(e);
    }
    let counts: Vec<(CellIndex, u64, u64)> = acc
        .counts
        .iter()
        .map(|(&idx, &(sig, c))| (idx, sig, c))
        .collect();
    let mut stats = CellStats::from_counts(k, acc.counters, &counts, acc.capped, &acc.dict);
    stats.clouds = acc.clouds;
    Ok(stats)
}

/// Cell measures from an externally supplied histogram `(n, count)` with one
/// class per `n`, out of `total` samples.
pub fn cell_stats_from_histogram(hist: &[(u64, u64)], total: u64) -> CellStats {
    let counted: u64 = hist.iter().map(|h| h.1).sum();
    let capped = total - counted;
    let counters = DiscardCounters {
        accepted: total,
        draws: total,
        no_return: capped,
        ..Default::default()
    };
    let counts: Vec<(CellIndex, u64, u64)> = hist
        .iter()
        .filter(|h| h.1 > 0)
        .map(|&(n, c)| (CellIndex { n, j: 1 }, 0, c))
        .collect();
    let mut stats = CellStats::from_counts(total, counters, &counts, capped, &CellDictionary::new());
    // One class per level: m = n.
    for c in &mut stats.cells {
        c.m = c.index.n;
    }
    stats.n0 = 1;
    stats
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiameterError {
    #[error("cell cloud has {got} points, need at least {need}")]
    InsufficientPoints { got: usize, need: usize },
}

/// Minimum cloud size for a diameter estimate.
pub const MIN_CLOUD_POINTS: usize = 25;

/// Extents of a point cloud in the `(r, φ)` chart along its principal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudExtent {
    pub points: usize,
    /// Extent along the major axis (unstable proxy).
    pub major: f64,
    /// Extent along the minor axis (stable proxy).
    pub minor: f64,
    /// Slope `dφ/dr` of the major axis.
    pub slope: f64,
    /// Largest gap between consecutive projections on the major axis,
    /// relative to the major extent; large values flag a cloud that is
    /// probably not one connected piece.
    pub max_gap: f64,
}

/// Oriented bounding box of a cloud: principal axes from the covariance,
/// extents as the projected ranges scaled by `(N + 1)/(N − 1)` (unbiased for
/// uniform points).
pub fn cloud_extent(points: &[(f64, f64)]) -> Result<CloudExtent, DiameterError> {
    let n = points.len();
    if n < MIN_CLOUD_POINTS {
        return Err(DiameterError::InsufficientPoints {
            got: n,
            need: MIN_CLOUD_POINTS,
        });
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for &(x, y) in points {
        mx += x;
        my += y;
    }
    mx /= n as f64;
    my /= n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (theta.cos(), theta.sin());
    let mut major: Vec<f64> = points
        .iter()
        .map(|&(x, y)| (x - mx) * c + (y - my) * s)
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        let v = -(x - mx) * s + (y - my) * c;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let scale = (n as f64 + 1.0) / (n as f64 - 1.0);
    major.sort_by(f64::total_cmp);
    let range = major[n - 1] - major[0];
    let max_gap = major
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(CloudExtent {
        points: n,
        major: range * scale,
        minor: (hi - lo) * scale,
        slope: theta.tan(),
        max_gap: if range > 0.0 { max_gap / range } else { 0.0 },
    })
}

fn chart(points: &[PhasePoint], table: &TableGeometry) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|p| (table.global_r(p.component, p.r), p.phi))
        .collect()
}

/// Relative gap above which a cloud is flagged as probably disconnected.
pub const SPLIT_GAP: f64 = 0.25;
/// Major/minor ratio above which a cloud counts as a thin strip.
pub const STRIP_ASPECT: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct CellDiameter {
    pub index: CellIndex,
    pub m: u64,
    pub count: u64,
    pub cell: CloudExtent,
    pub image: CloudExtent,
}

impl CellDiameter {
    /// The itinerary class looks like more than one connected piece.
    pub fn split_candidate(&self) -> bool {
        self.cell.max_gap > SPLIT_GAP || self.image.max_gap > SPLIT_GAP
    }

    /// Both clouds are single thin strips.
    pub fn is_strip(&self) -> bool {
        !self.split_candidate()
            && self.cell.major >= STRIP_ASPECT * self.cell.minor
            && self.image.major >= STRIP_ASPECT * self.image.minor
    }
}

/// The most populated class at each return time, in order of `n`.
pub fn dominant_diameters(diameters: &[CellDiameter]) -> Vec<CellDiameter> {
    let mut best: BTreeMap<u64, &CellDiameter> = BTreeMap::new();
    for d in diameters {
        let e = best.entry(d.index.n).or_insert(d);
        if d.count > e.count || (d.count == e.count && d.index.j < e.index.j) {
            *e = d;
        }
    }
    best.into_values().cloned().collect()
}

/// Diameter proxies of `D_m` and `TD_m` for every retained cloud with
/// enough points; cells with too few points are skipped.
pub fn estimate_cell_diameters(table: &TableGeometry, stats: &CellStats) -> Vec<CellDiameter> {
    stats
        .clouds
        .iter()
        .filter_map(|(idx, c)| {
            let cell = cloud_extent(&chart(&c.start, table)).ok()?;
            let image = cloud_extent(&chart(&c.end, table)).ok()?;
            let count = stats.cells.iter().find(|r| r.index == *idx)?.count;
            Some(CellDiameter {
                index: *idx,
                m: idx.m(stats.n0),
                count,
                cell,
                image,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::geometry::{build_table, TableSpec};
    use crate::par::sample_rng;

    #[test]
    fn empty_run_gives_empty_stats() {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let s = estimate_cell_measures(&t, &rule, 0, 100, 1, None).unwrap();
        assert!(s.cells.is_empty() && s.tails.is_empty());
        assert_eq!(s.k, 0);
    }

    #[test]
    fn synthetic_cubic_law_is_recovered() {
        let weights: Vec<f64> = (1..=100_000).map(|n| (n as f64).powi(-3)).collect();
        let c = 1.0 / weights.iter().sum::<f64>();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += c * w;
            cdf.push(acc);
        }
        let k = 200_000u64;
        let mut rng = sample_rng(9, 0);
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..k {
            let u: f64 = rng.random();
            let n = cdf.partition_point(|&f| f <= u).min(cdf.len() - 1) as u64 + 1;
            *hist.entry(n).or_default() += 1;
        }
        let h: Vec<(u64, u64)> = hist.into_iter().collect();
        let stats = cell_stats_from_histogram(&h, k);
        for cell in stats.cells.iter().filter(|c| c.index.n <= 5) {
            let exact = c * (cell.index.n as f64).powi(-3);
            assert!((cell.measure - exact).abs() < 3.0 * cell.stderr, "{cell:?}");
        }
        assert!(stats.total_measure() <= 1.0 + 1e-12);
    }

    #[test]
    fn rectangle_extents() {
        let mut rng = sample_rng(3, 0);
        let (w, h) = (0.3, 0.02);
        let pts: Vec<(f64, f64)> = (0..2000)
            .map(|_| (1.0 + w * rng.random::<f64>(), -0.4 + h * rng.random::<f64>()))
            .collect();
        let e = cloud_extent(&pts).unwrap();
        assert!((e.major / w - 1.0).abs() < 0.05, "{e:?}");
        assert!((e.minor / h - 1.0).abs() < 0.05, "{e:?}");
        assert!(e.slope.abs() < 0.05);
    }

    #[test]
    fn too_few_points() {
        assert_eq!(
            cloud_extent(&[(0.0, 0.0); 10]),
            Err(DiameterError::InsufficientPoints { got: 10, need: 25 })
        );
    }

    #[test]
    fn sinai_tails_and_kac() {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let s = estimate_cell_measures(&t, &rule, 20_000, 100_000, 5, None).unwrap();
        assert!(s.tails.windows(2).all(|w| w[0].value >= w[1].value));
        assert_eq!(s.tails[0].value, 1.0);
        assert!(s.total_measure() <= 1.0 + 1e-12);
        let kac = 1.0 / s.counters.acceptance().0;
        assert!((s.mean_return.mean - kac).abs() < 0.1 * kac);
        // Every cell at a given n has a distinct ordinal.
        let mut seen = std::collections::HashSet::new();
        for c in &s.cells {
            assert!(seen.insert((c.index.n, c.index.j)));
            assert!(c.index.j <= s.n0);
        }
    }

    proptest! {
        #[test]
        fn tails_are_monotone(counts in prop::collection::vec(0u64..50, 1..40), extra in 0u64..20) {
            let hist: Vec<(u64, u64)> = counts.iter().enumerate().map(|(i, &c)| (i as u64 + 1, c)).collect();
            let total = counts.iter().sum::<u64>() + extra;
            prop_assume!(total > 0);
            let s = cell_stats_from_histogram(&hist, total);
            prop_assert!(s.tails.windows(2).all(|w| w[0].value >= w[1].value));
            prop_assert!(s.total_measure() <= 1.0 + 1e-12);
        }
    }
}
