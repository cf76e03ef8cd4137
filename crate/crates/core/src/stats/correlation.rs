use serde::Serialize;

use crate::geometry::TableGeometry;
use crate::induced::{first_return, induced_orbit, InducedError, ReducedSpaceRule};
use crate::observables::Observable;
use crate::par::{map_fold, sample_rng};

use super::fit::{fit_exponential_rate, noise_floor, ExponentialFit};
use super::moments::{CrossMoments, RunningStats};
use super::sampling::{sample_reduced, DiscardCounters, SamplingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    Ensemble,
    SingleOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagEstimate {
    pub lag: usize,
    pub cov: f64,
    pub stderr: f64,
    pub effective_k: u64,
    /// Largest single summand `|f g|` (shifted) divided by the sample count;
    /// a heavy-tail diagnostic.
    pub max_term: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEstimate {
    pub method: CorrelationMethod,
    pub f: String,
    pub g: String,
    pub lags: Vec<LagEstimate>,
    pub noise_floor: f64,
    pub fit: Option<ExponentialFit>,
    pub fit_error: Option<String>,
    pub counters: DiscardCounters,
}

impl CorrelationEstimate {
    pub fn values(&self) -> Vec<f64> {
        self.lags.iter().map(|l| l.cov).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.lags.iter().map(|l| l.stderr).collect()
    }

    /// First lag `n ≥ 1` with `|Cov_n| < 3σ_n`.
    pub fn first_sub_noise_lag(&self) -> Option<usize> {
        self.lags
            .iter()
            .skip(1)
            .find(|l| l.cov.abs() < 3.0 * l.stderr)
            .map(|l| l.lag)
    }

    /// Recompute the exponential fit, optionally on a fixed lag window.
    pub fn refit(&mut self, window: Option<(usize, usize)>) {
        let (c, s) = (self.values(), self.stderrs());
        self.noise_floor = noise_floor(&s);
        match fit_exponential_rate(&c, &s, window) {
            Ok(f) => {
                self.fit = Some(f);
                self.fit_error = None;
            }
            Err(e) => {
                self.fit = None;
                self.fit_error = Some(e.to_string());
            }
        }
    }
}

/// Observable values `f(Tⁿx)` for `n = 0..` and `g(x)` along one induced
/// orbit; shorter than `n_max + 1` if the orbit was cut.
struct Track {
    f: Vec<f64>,
    g0: Option<f64>,
    draws: u64,
    error: Option<InducedError>,
}

#[allow(clippy::too_many_arguments)]
fn track(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    g: &Observable,
    n_max: usize,
    cap: u64,
    seed: u64,
    index: u64,
) -> Result<Track, SamplingError> {
    let mut rng = sample_rng(seed, index);
    let (x, draws) = sample_reduced(table, rule, &mut rng)?;
    let orbit = induced_orbit(table, rule, x, n_max + 1, cap);
    let mut out = Track {
        f: Vec::with_capacity(n_max + 1),
        g0: None,
        draws,
        error: orbit.termination,
    };
    for (n, s) in orbit.steps.iter().enumerate() {
        let fv = match f.evaluate(table, rule, s) {
            Ok(v) => v,
            Err(e) => {
                out.error = Some(e);
                break;
            }
        };
        if n == 0 {
            match g.evaluate(table, rule, s) {
                Ok(v) => out.g0 = Some(v),
                Err(e) => {
                    out.error = Some(e);
                    break;
                }
            }
        }
        out.f.push(fv);
    }
    Ok(out)
}

fn record(counters: &mut DiscardCounters, t: &Track) {
    counters.accepted += 1;
    counters.draws += t.draws;
    match &t.error {
        Some(InducedError::NoReturnWithinCap { .. }) => counters.no_return += 1,
        Some(InducedError::SingularOrbit(_)) => counters.singular += 1,
        Some(InducedError::Dynamics(_)) => counters.numerical += 1,
        None => {}
    }
}

/// Ensemble estimator of `Cov_n(f, g) = ∫ f∘Tⁿ·g dμ − ∫f dμ ∫g dμ` over `k`
/// independent `μ`-distributed starts, with lag-matched plug-in means.
#[allow(clippy::too_many_arguments)]
pub fn estimate_correlation(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    g: &Observable,
    n_max: usize,
    k: u64,
    cap: u64,
    seed: u64,
) -> Result<CorrelationEstimate, SamplingError> {
    struct Acc {
        lags: Vec<CrossMoments>,
        shifted: bool,
        counters: DiscardCounters,
        error: Option<SamplingError>,
    }
    let acc = map_fold(
        k,
        Acc {
            lags: Vec::new(),
            shifted: false,
            counters: DiscardCounters::default(),
            error: None,
        },
        |i| track(table, rule, f, g, n_max, cap, seed, i),
        |acc, _, t| {
            let t = match t {
                Ok(t) => t,
                Err(e) => {
                    acc.error.get_or_insert(e);
                    return;
                }
            };
            record(&mut acc.counters, &t);
            let Some(g0) = t.g0 else { return };
            if !acc.shifted {
                acc.lags = vec![CrossMoments::new(t.f[0], g0); n_max + 1];
                acc.shifted = true;
            }
            for (n, &fv) in t.f.iter().enumerate() {
                acc.lags[n].push(fv, g0);
            }
        },
    );
    if let Some(e) = acc.error {
        return Err(e);
    }
    let mut lags = acc.lags;
    if lags.is_empty() {
        lags = vec![CrossMoments::new(0.0, 0.0); n_max + 1];
    }
    let mut est = CorrelationEstimate {
        method: CorrelationMethod::Ensemble,
        f: f.to_string(),
        g: g.to_string(),
        lags: lags
            .iter()
            .enumerate()
            .map(|(n, m)| LagEstimate {
                lag: n,
                cov: m.covariance(),
                stderr: m.covariance_stderr(),
                effective_k: m.count,
                max_term: if m.count > 0 {
                    m.max_term / m.count as f64
                } else {
                    0.0
                },
            })
            .collect(),
        noise_floor: 0.0,
        fit: None,
        fit_error: None,
        counters: acc.counters,
    };
    est.refit(None);
    Ok(est)
}

/// Values of `f` and `g` along one long induced orbit, in contiguous
/// segments (a new segment starts after a discarded orbit piece).
pub struct OrbitSeries {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub segment_starts: Vec<usize>,
    pub counters: DiscardCounters,
}

/// Run one induced orbit of `length` steps after `burn_in` steps, restarting
/// from a fresh `μ` sample whenever the orbit is cut.
#[allow(clippy::too_many_arguments)]
pub fn orbit_series(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    g: &Observable,
    length: usize,
    burn_in: usize,
    cap: u64,
    seed: u64,
) -> Result<OrbitSeries, SamplingError> {
    let mut out = OrbitSeries {
        f: Vec::with_capacity(length),
        g: Vec::with_capacity(length),
        segment_starts: vec![0],
        counters: DiscardCounters::default(),
    };
    let mut stream = 0u64;
    let mut restart = |out: &mut OrbitSeries| -> Result<_, SamplingError> {
        let mut rng = sample_rng(seed, stream);
        stream += 1;
        let (x, draws) = sample_reduced(table, rule, &mut rng)?;
        out.counters.accepted += 1;
        out.counters.draws += draws;
        Ok(x)
    };
    let mut x = restart(&mut out)?;
    let mut warm = 0;
    while out.f.len() < length {
        let step = first_return(table, rule, x, cap).and_then(|s| {
            if warm < burn_in {
                return Ok((s, None));
            }
            let fv = f.evaluate(table, rule, &s)?;
            let gv = g.evaluate(table, rule, &s)?;
            Ok((s, Some((fv, gv))))
        });
        match step {
            Ok((s, vals)) => {
                x = s.end;
                match vals {
                    None => warm += 1,
                    Some((fv, gv)) => {
                        out.f.push(fv);
                        out.g.push(gv);
                    }
                }
            }
            Err(e) => {
                match e {
                    InducedError::NoReturnWithinCap { .. } => out.counters.no_return += 1,
                    InducedError::SingularOrbit(_) => out.counters.singular += 1,
                    InducedError::Dynamics(_) => out.counters.numerical += 1,
                }
                if out.segment_starts.last() != Some(&out.f.len()) {
                    out.segment_starts.push(out.f.len());
                }
                x = restart(&mut out)?;
                warm = burn_in;
            }
        }
    }
    Ok(out)
}

/// Single-orbit estimator: lagged products along one orbit with global
/// means, standard errors from `batches` batch means.
pub fn correlation_from_series(
    series: &OrbitSeries,
    n_max: usize,
    batches: usize,
    f_name: &str,
    g_name: &str,
) -> CorrelationEstimate {
    let len = series.f.len();
    let mf = series.f.iter().sum::<f64>() / len.max(1) as f64;
    let mg = series.g.iter().sum::<f64>() / len.max(1) as f64;
    let mut seg_end = vec![len; len];
    let mut bounds = series.segment_starts.clone();
    bounds.push(len);
    for w in bounds.windows(2) {
        for e in seg_end.iter_mut().take(w[1]).skip(w[0]) {
            *e = w[1];
        }
    }
    let batch_len = (len / batches.max(1)).max(1);
    let mut lags = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut batch_stats = RunningStats::default();
        let (mut total, mut count, mut max_term) = (0.0, 0u64, 0.0f64);
        let mut b_sum = 0.0;
        let mut b_count = 0u64;
        for t in 0..len {
            if t + n < seg_end[t] {
                let p = (series.f[t + n] - mf) * (series.g[t] - mg);
                total += p;
                count += 1;
                b_sum += p;
                b_count += 1;
                max_term = max_term.max(p.abs());
            }
            if (t + 1) % batch_len == 0 && b_count > 0 {
                batch_stats.push(b_sum / b_count as f64);
                b_sum = 0.0;
                b_count = 0;
            }
        }
        let cov = if count > 0 { total / count as f64 } else { 0.0 };
        lags.push(LagEstimate {
            lag: n,
            cov,
            stderr: batch_stats.stderr(),
            effective_k: count,
            max_term: if count > 0 { max_term / count as f64 } else { 0.0 },
        });
    }
    let mut est = CorrelationEstimate {
        method: CorrelationMethod::SingleOrbit,
        f: f_name.to_string(),
        g: g_name.to_string(),
        lags,
        noise_floor: 0.0,
        fit: None,
        fit_error: None,
        counters: series.counters,
    };
    est.refit(None);
    est
}

/// Single-orbit estimator on one orbit of `length` induced steps.
#[allow(clippy::too_many_arguments)]
pub fn estimate_correlation_orbit(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    f: &Observable,
    g: &Observable,
    n_max: usize,
    length: usize,
    burn_in: usize,
    cap: u64,
    seed: u64,
) -> Result<CorrelationEstimate, SamplingError> {
    let series = orbit_series(table, rule, f, g, length, burn_in, cap, seed)?;
    Ok(correlation_from_series(
        &series,
        n_max,
        50,
        &f.to_string(),
        &g.to_string(),
    ))
}
