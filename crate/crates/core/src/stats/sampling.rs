use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{DynamicsError, PhasePoint};
use crate::geometry::TableGeometry;
use crate::induced::{first_return, in_reduced_space, InducedError, InducedStep, ReducedSpaceRule};
use crate::par::{map_fold, sample_rng};

/// Draws allowed per accepted sample before giving up.
pub const MAX_DRAWS: u64 = 100_000;
/// Smallest acceptance rate that is not treated as a configuration error.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("reduced-space acceptance {rate:.3e} is below {MIN_ACCEPTANCE:e}")]
    AcceptanceTooLow { rate: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `φ` from a uniform `u ∈ [0, 1)`: inverse CDF of the density `cos φ / 2`.
pub fn phi_from_uniform(u: f64) -> f64 {
    (2.0 * u - 1.0).clamp(-1.0, 1.0).asin()
}

/// A `μ_𝓜`-distributed point: global arc length uniform, `φ = asin(2u − 1)`.
pub fn sample_full_phase<R: Rng + ?Sized>(table: &TableGeometry, rng: &mut R) -> PhasePoint {
    let s = rng.random::<f64>() * table.total_length();
    let (c, r) = table.split_global(s);
    PhasePoint::new(c, r, phi_from_uniform(rng.random::<f64>()))
}

/// A `μ`-distributed point of `M` by rejection from `μ_𝓜`, and the number of
/// draws it took. Draws off the candidate components are rejected without a
/// dynamics probe; draws whose membership probe is singular are rejected too.
pub fn sample_reduced<R: Rng + ?Sized>(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    rng: &mut R,
) -> Result<(PhasePoint, u64), SamplingError> {
    for draws in 1..=MAX_DRAWS {
        let x = sample_full_phase(table, rng);
        if !rule.is_candidate(table, x.component) {
            continue;
        }
        match in_reduced_space(table, rule, x) {
            Ok(true) => return Ok((x, draws)),
            Ok(false) => {}
            Err(e) if e.is_singular() => {}
            Err(e) => return Err(e.into()),
        }
    }
    Err(SamplingError::AcceptanceTooLow {
        rate: 1.0 / MAX_DRAWS as f64,
    })
}

/// Outcome counters shared by every induced-sampling pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DiscardCounters {
    pub accepted: u64,
    pub draws: u64,
    pub singular: u64,
    pub no_return: u64,
    pub numerical: u64,
}

impl DiscardCounters {
    /// Empirical `μ_𝓜(M)` and its binomial standard error.
    pub fn acceptance(&self) -> (f64, f64) {
        if self.draws == 0 {
            return (0.0, 0.0);
        }
        let p = self.accepted as f64 / self.draws as f64;
        (p, (p * (1.0 - p) / self.draws as f64).sqrt())
    }

    pub fn merge(&mut self, other: &DiscardCounters) {
        self.accepted += other.accepted;
        self.draws += other.draws;
        self.singular += other.singular;
        self.no_return += other.no_return;
        self.numerical += other.numerical;
    }
}

/// Result of one seeded induced sample.
#[derive(Debug, Clone)]
pub enum InducedSample {
    Ok { step: InducedStep, draws: u64 },
    Failed { error: InducedError, draws: u64 },
}

/// Sample `index` of a run: draw `x ~ μ` from its own stream and apply `T`.
pub fn induced_sample(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    cap: u64,
    seed: u64,
    index: u64,
) -> Result<InducedSample, SamplingError> {
    let mut rng = sample_rng(seed, index);
    let (x, draws) = sample_reduced(table, rule, &mut rng)?;
    Ok(match first_return(table, rule, x, cap) {
        Ok(step) => InducedSample::Ok { step, draws },
        Err(error) => InducedSample::Failed { error, draws },
    })
}

impl DiscardCounters {
    pub fn record(&mut self, sample: &InducedSample) {
        match sample {
            InducedSample::Ok { draws, .. } => {
                self.accepted += 1;
                self.draws += draws;
            }
            InducedSample::Failed { error, draws } => {
                self.accepted += 1;
                self.draws += draws;
                match error {
                    InducedError::NoReturnWithinCap { .. } => self.no_return += 1,
                    InducedError::SingularOrbit(_) => self.singular += 1,
                    InducedError::Dynamics(_) => self.numerical += 1,
                }
            }
        }
    }
}

/// Seeded batch of `μ`-distributed points of `M`.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub count: u64,
    pub points: Vec<PhasePoint>,
    pub counters: DiscardCounters,
}

pub fn sample_batch(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    seed: u64,
    count: u64,
) -> Result<SampleBatch, SamplingError> {
    let (points, counters, err) = map_fold(
        count,
        (Vec::with_capacity(count as usize), DiscardCounters::default(), None),
        |i| sample_reduced(table, rule, &mut sample_rng(seed, i)),
        |acc, _, res| match res {
            Ok((x, draws)) => {
                acc.0.push(x);
                acc.1.accepted += 1;
                acc.1.draws += draws;
            }
            Err(e) => {
                if acc.2.is_none() {
                    acc.2 = Some(e);
                }
            }
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    let batch = SampleBatch {
        seed,
        count,
        points,
        counters,
    };
    let (rate, _) = batch.counters.acceptance();
    if count > 0 && rate < MIN_ACCEPTANCE {
        return Err(SamplingError::AcceptanceTooLow { rate });
    }
    Ok(batch)
}
