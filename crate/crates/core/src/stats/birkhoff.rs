use serde::Serialize;

use crate::dynamics::step;
use crate::geometry::TableGeometry;
use crate::induced::ReducedSpaceRule;
use crate::observables::{Observable, PhaseFunction};
use crate::par::{map_fold, sample_rng};

use super::correlation::orbit_series;
use super::moments::{batch_means, RunningStats};
use super::sampling::{induced_sample, sample_full_phase, DiscardCounters, InducedSample, SamplingError};

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl MeanEstimate {
    /// `|a − b| / √(σ_a² + σ_b²)`.
    pub fn z_score(&self, other: &MeanEstimate) -> f64 {
        let s = self.stderr.hypot(other.stderr);
        if s == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / s
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffReport {
    pub averages: Vec<MeanEstimate>,
    pub restarts: u64,
}

/// Birkhoff averages of `fs` along one `F`-orbit of `steps` collisions,
/// batch-means errors. The orbit restarts from a fresh `μ_𝓜` sample
/// whenever it hits a singularity.
pub fn birkhoff_full(
    table: &TableGeometry,
    fs: &[PhaseFunction],
    steps: usize,
    batches: usize,
    seed: u64,
) -> BirkhoffReport {
    let mut series: Vec<Vec<f64>> = fs.iter().map(|_| Vec::with_capacity(steps)).collect();
    let mut stream = 0;
    let mut fresh = || {
        let mut rng = sample_rng(seed, stream);
        stream += 1;
        sample_full_phase(table, &mut rng)
    };
    let mut x = fresh();
    let mut restarts = 0;
    while series[0].len() < steps {
        match step(table, x) {
            Ok(rec) => {
                for (s, f) in series.iter_mut().zip(fs) {
                    s.push(f.eval(table, rec.next));
                }
                x = rec.next;
            }
            Err(_) => {
                restarts += 1;
                x = fresh();
            }
        }
    }
    BirkhoffReport {
        averages: series
            .iter()
            .map(|s| {
                let (mean, stderr) = batch_means(s, batches);
                MeanEstimate {
                    mean,
                    stderr,
                    count: s.len() as u64,
                }
            })
            .collect(),
        restarts,
    }
}

/// Direct Monte Carlo integrals of `fs` against `μ_𝓜`.
pub fn direct_full(table: &TableGeometry, fs: &[PhaseFunction], k: u64, seed: u64) -> Vec<MeanEstimate> {
    let stats = map_fold(
        k,
        vec![RunningStats::default(); fs.len()],
        |i| {
            let x = sample_full_phase(table, &mut sample_rng(seed, i));
            fs.iter().map(|f| f.eval(table, x)).collect::<Vec<_>>()
        },
        |acc, _, v| {
            for (a, x) in acc.iter_mut().zip(v) {
                a.push(x);
            }
        },
    );
    stats
        .iter()
        .map(|s| MeanEstimate {
            mean: s.mean,
            stderr: s.stderr(),
            count: s.count,
        })
        .collect()
}

/// Direct `μ`-sample means of an induced observable (failed samples skipped).
pub fn direct_induced(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    k: u64,
    cap: u64,
    seed: u64,
) -> Result<(MeanEstimate, DiscardCounters), SamplingError> {
    let (stats, counters, err) = map_fold(
        k,
        (RunningStats::default(), DiscardCounters::default(), None),
        |i| {
            induced_sample(table, rule, cap, seed, i).map(|s| {
                let v = match &s {
                    InducedSample::Ok { step, .. } => f.evaluate(table, rule, step).ok(),
                    InducedSample::Failed { .. } => None,
                };
                (s, v)
            })
        },
        |acc, _, r| match r {
            Ok((s, v)) => {
                acc.1.record(&s);
                if let Some(v) = v {
                    acc.0.push(v);
                }
            }
            Err(e) => {
                acc.2.get_or_insert(e);
            }
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok((
        MeanEstimate {
            mean: stats.mean,
            stderr: stats.stderr(),
            count: stats.count,
        },
        counters,
    ))
}

/// Birkhoff average of an induced observable along one `T`-orbit.
pub fn birkhoff_induced(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    steps: usize,
    cap: u64,
    seed: u64,
) -> Result<(MeanEstimate, DiscardCounters), SamplingError> {
    let s = orbit_series(table, rule, f, f, steps, 100, cap, seed)?;
    let (mean, stderr) = batch_means(&s.f, 50);
    Ok((
        MeanEstimate {
            mean,
            stderr,
            count: s.f.len() as u64,
        },
        s.counters,
    ))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_table, TableSpec};

    #[test]
    fn direct_cos_phi_is_pi_over_four() {
        let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
        let d = direct_full(&t, &[PhaseFunction::CosPhi, PhaseFunction::Const(2.0)], 200_000, 4);
        assert!((d[0].mean - PI / 4.0).abs() < 3.0 * d[0].stderr);
        assert_eq!(d[1].mean, 2.0);
        assert_eq!(d[1].stderr, 0.0);
    }

    #[test]
    fn short_birkhoff_average_matches_direct() {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let fs = [PhaseFunction::CosPhi, PhaseFunction::CosR];
        let b = birkhoff_full(&t, &fs, 400_000, 50, 1);
        let d = direct_full(&t, &fs, 400_000, 2);
        for (x, y) in b.averages.iter().zip(&d) {
            assert!(x.z_score(y) < 3.0, "{x:?} {y:?}");
        }
    }

    #[test]
    fn induced_cos_phi_is_t_invariant() {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let f = Observable::Phase(PhaseFunction::CosPhi);
        let (b, _) = birkhoff_induced(&t, &rule, &f, 200_000, 10_000, 3).unwrap();
        let (d, _) = direct_induced(&t, &rule, &f, 200_000, 10_000, 4).unwrap();
        assert!(b.z_score(&d) < 3.0, "{b:?} {d:?}");
    }
}
