//! Numerical probes of the hyperbolicity hypotheses: one-step expansion of
//! short unstable curves, an unstable-radius proxy, an empirical `Z_r`
//! value and an exponent check for the cell partition. Everything here is a
//! computable proxy, not a bound.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{billiard_map, inverse_map, DynamicsError, PhasePoint};
use crate::geometry::TableGeometry;
use crate::induced::{backward_return, first_return, InducedError, InducedStep, ReducedSpaceRule};
use crate::par::{map_collect, sample_rng};
use crate::stats::cells::{dominant_diameters, CellDiameter, CellStats, CloudExtent};
use crate::stats::fit::{fit_power_law, FitError, PowerLawFit};
use crate::stats::sampling::{sample_reduced, SamplingError};

/// Finite-difference step for Jacobians.
pub const FD_STEP: f64 = 1e-7;
/// Initial number of points on a grown curve.
pub const CURVE_POINTS: usize = 17;
/// Image chord turning (radians) treated as a cut.
pub const CHORD_JUMP: f64 = 0.5;
pub const REFINE_ROUNDS: usize = 3;
/// Probe budget per curve.
pub const MAX_PROBES: usize = 4096;
/// `Λ̂` is this quantile of the per-point expansion factors.
pub const LAMBDA_QUANTILE: f64 = 0.01;

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("point lies too close to a singular curve")]
    SingularNeighborhood,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Induced(#[from] InducedError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// `x + (dr, dφ)` in the chart of `x`'s component, wrapping on closed
/// components. `None` off the chart.
pub fn chart_offset(table: &TableGeometry, x: PhasePoint, dr: f64, dphi: f64) -> Option<PhasePoint> {
    let c = table.component(x.component).ok()?;
    let mut r = x.r + dr;
    if c.closed {
        r = r.rem_euclid(c.length);
    } else if !(0.0..=c.length).contains(&r) {
        return None;
    }
    let phi = x.phi + dphi;
    if phi.abs() >= FRAC_PI_2 {
        return None;
    }
    Some(PhasePoint::new(x.component, r, phi))
}

/// `b − a` in the chart, or `None` for different components.
pub fn chart_delta(table: &TableGeometry, a: PhasePoint, b: PhasePoint) -> Option<(f64, f64)> {
    if a.component != b.component {
        return None;
    }
    let c = table.component(a.component).ok()?;
    let mut dr = b.r - a.r;
    if c.closed {
        dr -= c.length * (dr / c.length).round();
    }
    Some((dr, b.phi - a.phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Svd {
    pub s_max: f64,
    pub s_min: f64,
    /// Unit vector with `|J v| = s_max`.
    pub right: (f64, f64),
    /// `J v / s_max`.
    pub left: (f64, f64),
}

/// A 2×2 Jacobian in `(r, φ)` chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jacobian {
    pub m: [[f64; 2]; 2],
}

impl Jacobian {
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn svd(&self) -> Svd {
        let [[a, b], [c, d]] = self.m;
        let p = a * a + c * c;
        let q = a * b + c * d;
        let s = b * b + d * d;
        let h = ((p - s) / 2.0).hypot(q);
        let l_max = (p + s) / 2.0 + h;
        let l_min = ((p + s) / 2.0 - h).max(0.0);
        let theta = 0.5 * (2.0 * q).atan2(p - s);
        let right = (theta.cos(), theta.sin());
        let s_max = l_max.sqrt();
        let jv = self.apply(right);
        let left = if s_max > 0.0 {
            (jv.0 / s_max, jv.1 / s_max)
        } else {
            (1.0, 0.0)
        };
        Svd {
            s_max,
            s_min: l_min.sqrt(),
            right,
            left,
        }
    }
}

fn same_branch(a: &InducedStep, b: &InducedStep) -> bool {
    a.return_time == b.return_time && a.signature == b.signature
}

fn lift(e: InducedError) -> DiagnosticsError {
    match &e {
        InducedError::SingularOrbit(_) => DiagnosticsError::SingularNeighborhood,
        _ => DiagnosticsError::Induced(e),
    }
}

/// Central-difference Jacobian of `T` at `x`. All four perturbed points
/// must follow the itinerary of `x`.
pub fn jacobian_t(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    h: f64,
    cap: u64,
) -> Result<(Jacobian, InducedStep), DiagnosticsError> {
    let base = first_return(table, rule, x, cap).map_err(lift)?;
    let mut m = [[0.0; 2]; 2];
    for (col, (er, ep)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
        let mut ends = [base.end; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let y = chart_offset(table, x, sign * h * er, sign * h * ep)
                .ok_or(DiagnosticsError::SingularNeighborhood)?;
            let s = first_return(table, rule, y, cap).map_err(lift)?;
            if !same_branch(&s, &base) {
                return Err(DiagnosticsError::SingularNeighborhood);
            }
            ends[k] = s.end;
        }
        let (dr, dphi) =
            chart_delta(table, ends[1], ends[0]).ok_or(DiagnosticsError::SingularNeighborhood)?;
        m[0][col] = dr / (2.0 * h);
        m[1][col] = dphi / (2.0 * h);
    }
    Ok((Jacobian { m }, base))
}

/// Central-difference Jacobian of the collision map `F` at `x`.
pub fn jacobian_f(table: &TableGeometry, x: PhasePoint, h: f64) -> Result<Jacobian, DiagnosticsError> {
    let (base, _) = billiard_map(table, x)?;
    let mut m = [[0.0; 2]; 2];
    for (col, (er, ep)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
        let mut ends = [base; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let y = chart_offset(table, x, sign * h * er, sign * h * ep)
                .ok_or(DiagnosticsError::SingularNeighborhood)?;
            let (z, _) = billiard_map(table, y).map_err(|e| {
                if e.is_singular() {
                    DiagnosticsError::SingularNeighborhood
                } else {
                    e.into()
                }
            })?;
            if z.component != base.component {
                return Err(DiagnosticsError::SingularNeighborhood);
            }
            ends[k] = z;
        }
        let (dr, dphi) =
            chart_delta(table, ends[1], ends[0]).ok_or(DiagnosticsError::SingularNeighborhood)?;
        m[0][col] = dr / (2.0 * h);
        m[1][col] = dphi / (2.0 * h);
    }
    Ok(Jacobian { m })
}

fn normalize(v: (f64, f64)) -> (f64, f64) {
    let n = v.0.hypot(v.1);
    (v.0 / n, v.1 / n)
}

/// Unstable direction of `F` at `x` from pushing a vector forward along the
/// `back` preceding collisions, and the chart expansion `|DF(x) e_u|`.
pub fn unstable_expansion_f(
    table: &TableGeometry,
    x: PhasePoint,
    back: usize,
) -> Result<((f64, f64), f64), DiagnosticsError> {
    let mut past = vec![x];
    for _ in 0..back {
        let y = inverse_map(table, *past.last().unwrap())?;
        past.push(y);
    }
    let mut v = normalize((1.0, 1.0));
    for y in past[1..].iter().rev() {
        v = normalize(jacobian_f(table, *y, FD_STEP)?.apply(v));
    }
    let w = jacobian_f(table, x, FD_STEP)?.apply(v);
    Ok((v, w.0.hypot(w.1)))
}

/// One side of a cut: consecutive curve pieces whose images stay on one
/// smooth branch of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePiece {
    /// Curve parameter range (chart arc length from the centre).
    pub t_start: f64,
    pub t_end: f64,
    /// `|T⁻¹V_α|`.
    pub preimage_length: f64,
    /// `|V_α|`.
    pub image_length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnstableCurveSample {
    pub center: PhasePoint,
    pub component: usize,
    /// Unit chart direction of the curve.
    pub direction: (f64, f64),
    pub points: Vec<PhasePoint>,
    /// `|W|`.
    pub length: f64,
    pub pieces: Vec<CurvePiece>,
    /// Index of the piece containing the centre, if it survived.
    pub center_piece: Option<usize>,
}

impl UnstableCurveSample {
    pub fn preimage_total(&self) -> f64 {
        self.pieces.iter().map(|p| p.preimage_length).sum()
    }

    pub fn is_cut(&self) -> bool {
        self.pieces.len() != 1
    }

    /// Length of the uncut piece through the centre.
    pub fn center_length(&self) -> f64 {
        self.center_piece
            .map(|i| self.pieces[i].preimage_length)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    t: f64,
    point: PhasePoint,
    image: Option<InducedStep>,
}

impl Probe {
    fn class(&self) -> Option<(u64, u64)> {
        self.image.map(|s| (s.return_time, s.signature))
    }
}

struct Grower<'a> {
    table: &'a TableGeometry,
    rule: &'a ReducedSpaceRule,
    x: PhasePoint,
    v: (f64, f64),
    cap: u64,
}

impl Grower<'_> {
    fn probe(&self, t: f64) -> Option<Probe> {
        let point = chart_offset(self.table, self.x, t * self.v.0, t * self.v.1)?;
        let image = first_return(self.table, self.rule, point, self.cap).ok();
        Some(Probe { t, point, image })
    }

    /// Narrow a class change between `a` and `b` down to `tol`.
    fn bisect(&self, mut a: Probe, mut b: Probe, tol: f64) -> (Probe, Probe) {
        while b.t - a.t > tol {
            let Some(m) = self.probe(0.5 * (a.t + b.t)) else {
                break;
            };
            if m.class() == a.class() {
                a = m;
            } else {
                b = m;
            }
        }
        (a, b)
    }

    /// Bisect every class change until all of them are within `tol`, or
    /// the probe budget runs out.
    fn localize(&self, mut probes: Vec<Probe>, tol: f64) -> Vec<Probe> {
        loop {
            let mut out = Vec::with_capacity(probes.len());
            let mut changed = false;
            for w in probes.windows(2) {
                out.push(w[0]);
                if w[0].class() != w[1].class() && w[1].t - w[0].t > tol {
                    let (a, b) = self.bisect(w[0], w[1], tol);
                    if a.t > w[0].t {
                        out.push(a);
                        changed = true;
                    }
                    if b.t < w[1].t {
                        out.push(b);
                        changed = true;
                    }
                }
            }
            out.extend(probes.last());
            probes = out;
            if !changed || probes.len() > MAX_PROBES {
                return probes;
            }
        }
    }
}

fn chord_angle(table: &TableGeometry, a: &InducedStep, b: &InducedStep) -> Option<f64> {
    chart_delta(table, a.end, b.end).map(|(dr, dp)| dp.atan2(dr))
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Short curve of chart length `≤ δ` through `x` along the most expanded
/// direction of `DT(x)`, with its cut structure under one application of
/// `T`.
pub fn grow_unstable_curve(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    delta: f64,
    cap: u64,
) -> Result<UnstableCurveSample, DiagnosticsError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DiagnosticsError::InvalidParameter(format!("delta = {delta}")));
    }
    let (jac, _) = jacobian_t(table, rule, x, FD_STEP.min(delta / 4.0), cap)?;
    let v = jac.svd().right;
    let g = Grower {
        table,
        rule,
        x,
        v,
        cap,
    };
    let half = (CURVE_POINTS / 2) as i64;
    let dt = delta / (CURVE_POINTS - 1) as f64;
    let mut probes: Vec<Probe> = Vec::new();
    // contiguous run of chart points around the centre
    for k in (-half..=0).rev() {
        match g.probe(k as f64 * dt) {
            Some(p) => probes.insert(0, p),
            None => break,
        }
    }
    for k in 1..=half {
        match g.probe(k as f64 * dt) {
            Some(p) => probes.push(p),
            None => break,
        }
    }
    if probes.len() < 3 {
        return Err(DiagnosticsError::SingularNeighborhood);
    }
    let tol = delta * 1e-7;
    probes = g.localize(probes, tol);
    for _ in 0..REFINE_ROUNDS {
        let mut refined = Vec::with_capacity(2 * probes.len());
        let mut changed = false;
        for w in probes.windows(2) {
            refined.push(w[0]);
            if w[0].class() == w[1].class() && w[1].t - w[0].t > 2.0 * tol {
                if let Some(m) = g.probe(0.5 * (w[0].t + w[1].t)) {
                    changed |= m.class() != w[0].class();
                    refined.push(m);
                }
            }
        }
        refined.extend(probes.last());
        probes = g.localize(refined, tol);
        if !changed {
            break;
        }
    }

    let mut pieces = Vec::new();
    let mut run: Vec<&Probe> = Vec::new();
    let flush = |run: &mut Vec<&Probe>, pieces: &mut Vec<CurvePiece>| {
        if run.is_empty() {
            return;
        }
        let mut image_length = 0.0;
        for w in run.windows(2) {
            if let Some((dr, dp)) = chart_delta(table, w[0].image.unwrap().end, w[1].image.unwrap().end) {
                image_length += dr.hypot(dp);
            }
        }
        let (a, b) = (run[0].t, run[run.len() - 1].t);
        pieces.push(CurvePiece {
            t_start: a,
            t_end: b,
            preimage_length: b - a,
            image_length,
            points: run.len(),
        });
        run.clear();
    };
    for p in &probes {
        match (&p.image, run.last()) {
            (None, _) => flush(&mut run, &mut pieces),
            (Some(_), None) => run.push(p),
            (Some(s), Some(prev)) => {
                let ps = prev.image.unwrap();
                if !same_branch(s, &ps) || s.end.component != ps.end.component {
                    flush(&mut run, &mut pieces);
                } else if run.len() >= 2 {
                    let pp = run[run.len() - 2].image.unwrap();
                    if let (Some(a1), Some(a2)) = (chord_angle(table, &pp, &ps), chord_angle(table, &ps, s)) {
                        if angle_gap(a1, a2) > CHORD_JUMP {
                            // split at the turning vertex, which both pieces keep
                            let vertex = *prev;
                            flush(&mut run, &mut pieces);
                            run.push(vertex);
                        }
                    }
                }
                run.push(p);
            }
        }
    }
    flush(&mut run, &mut pieces);
    let center_piece = pieces.iter().position(|p| p.t_start <= 0.0 && p.t_end >= 0.0);
    let length = probes[probes.len() - 1].t - probes[0].t;
    Ok(UnstableCurveSample {
        center: x,
        component: x.component,
        direction: v,
        points: probes.iter().map(|p| p.point).collect(),
        length,
        pieces,
        center_piece,
    })
}

/// `Σ_α (|W|/|V_α|)^{s₀} |T⁻¹V_α| / |W|`.
pub fn one_step_expansion_sum_with(sample: &UnstableCurveSample, s0: f64) -> f64 {
    let w = sample.length;
    sample
        .pieces
        .iter()
        .filter(|p| p.preimage_length > 0.0 && p.image_length > 0.0)
        .map(|p| (w / p.image_length).powf(s0) * p.preimage_length / w)
        .sum()
}

/// The one-step sum with `s₀ = 1`.
pub fn one_step_expansion_sum(sample: &UnstableCurveSample) -> f64 {
    one_step_expansion_sum_with(sample, 1.0)
}

/// Distance of `x` to the singularities of `T`: grazing and junction
/// margins at `x` and along its excursion. Zero if the excursion fails.
pub fn induced_singularity_distance(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    cap: u64,
) -> f64 {
    let own = (FRAC_PI_2 - x.phi.abs())
        .max(0.0)
        .min(table.junction_distance(x.component, x.r));
    if own <= 0.0 {
        return 0.0;
    }
    match first_return(table, rule, x, cap) {
        Ok(s) => own.min(s.min_singularity_distance),
        Err(_) => 0.0,
    }
}

/// `min_{0≤n≤N} Λ̂ⁿ · d(T⁻ⁿx)`.
pub fn unstable_radius_proxy(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    n: usize,
    lambda: f64,
    cap: u64,
) -> Result<f64, DiagnosticsError> {
    let mut best = induced_singularity_distance(table, rule, x, cap);
    let mut y = x;
    let mut scale = 1.0;
    for _ in 0..n {
        if best == 0.0 {
            break;
        }
        y = backward_return(table, rule, y, cap)?.0;
        scale *= lambda;
        best = best.min(scale * induced_singularity_distance(table, rule, y, cap));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZProxy {
    pub r: f64,
    pub value: f64,
    pub used: usize,
    /// Positive-weight samples with a zero radius, left out of `value`.
    pub divergent: usize,
}

/// Weighted mean of `r̂^{-r}` over `(r̂, g)` samples, normalised by the
/// mean weight.
pub fn z_function_proxy(samples: &[(f64, f64)], r: f64) -> Result<ZProxy, DiagnosticsError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(DiagnosticsError::InvalidParameter(format!("r = {r} not in (0, 1]")));
    }
    if samples.iter().any(|&(_, g)| !(g >= 0.0)) {
        return Err(DiagnosticsError::InvalidParameter("negative weight".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut used = 0;
    let mut divergent = 0;
    for &(radius, g) in samples {
        if g == 0.0 {
            continue;
        }
        if radius <= 0.0 {
            divergent += 1;
            continue;
        }
        num += g * radius.powf(-r);
        den += g;
        used += 1;
    }
    if den <= 0.0 {
        return Err(DiagnosticsError::InvalidParameter("weights have zero mean".into()));
    }
    Ok(ZProxy {
        r,
        value: num / den,
        used,
        divergent,
    })
}

/// `Z_r` proxies of `T^k` applied to a fixed sample set, `k = 0..=iterates`,
/// with unit weights. Points whose forward orbit fails are dropped from
/// later iterates.
pub fn z_sequence(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    points: &[PhasePoint],
    iterates: usize,
    n_back: usize,
    lambda: f64,
    r: f64,
    cap: u64,
) -> Result<Vec<ZProxy>, DiagnosticsError> {
    let radii: Vec<Vec<f64>> = map_collect(points.len() as u64, |i| {
        let mut x = points[i as usize];
        let mut out = Vec::with_capacity(iterates + 1);
        for k in 0..=iterates {
            out.push(unstable_radius_proxy(table, rule, x, n_back, lambda, cap).unwrap_or(0.0));
            if k < iterates {
                match first_return(table, rule, x, cap) {
                    Ok(s) => x = s.end,
                    Err(_) => break,
                }
            }
        }
        out
    });
    (0..=iterates)
        .map(|k| {
            let s: Vec<(f64, f64)> = radii.iter().filter_map(|v| v.get(k)).map(|&x| (x, 1.0)).collect();
            z_function_proxy(&s, r)
        })
        .collect()
}

/// `σ_max(DT(x))`, or `None` where the Jacobian cannot be formed.
pub fn expansion_factor(table: &TableGeometry, rule: &ReducedSpaceRule, x: PhasePoint, cap: u64) -> Option<f64> {
    jacobian_t(table, rule, x, FD_STEP, cap).ok().map(|(j, _)| j.svd().s_max)
}

/// [`expansion_factor`] for each point, failures skipped.
pub fn expansion_factors(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    points: &[PhasePoint],
    cap: u64,
) -> Vec<f64> {
    map_collect(points.len() as u64, |i| expansion_factor(table, rule, points[i as usize], cap))
        .into_iter()
        .flatten()
        .collect()
}

/// Lower empirical quantile (nearest rank).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    Some(v[k])
}

/// `Λ̂`: the 1st percentile of the expansion factors.
pub fn lambda_hat(factors: &[f64]) -> Option<f64> {
    quantile(factors, LAMBDA_QUANTILE)
}

/// `μ`-distributed points of `M`, index-seeded.
pub fn sample_points(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    count: usize,
    seed: u64,
) -> Result<Vec<PhasePoint>, DiagnosticsError> {
    map_collect(count as u64, |i| sample_reduced(table, rule, &mut sample_rng(seed, i)))
        .into_iter()
        .map(|r| r.map(|(x, _)| x).map_err(DiagnosticsError::from))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaSweep {
    pub delta: f64,
    pub sums: Vec<f64>,
    pub cut_curves: usize,
    /// Sample points rejected as too close to a singular curve.
    pub skipped: usize,
    pub sup: f64,
    pub median: f64,
    /// Largest `|1 − Σ|T⁻¹V_α| / |W||` over the curves.
    pub bookkeeping_error: f64,
}

/// Grows `curves` curves of length `δ` around index-seeded `μ` samples,
/// skipping points next to singular curves.
pub fn expansion_sweep(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    delta: f64,
    curves: usize,
    seed: u64,
    cap: u64,
) -> Result<(DeltaSweep, Vec<UnstableCurveSample>), DiagnosticsError> {
    let mut samples = Vec::with_capacity(curves);
    let mut skipped = 0;
    let mut next = 0u64;
    while samples.len() < curves {
        let want = (curves - samples.len()) as u64;
        let batch = want + want / 10 + 8;
        let got = map_collect(batch, |i| {
            let x = sample_reduced(table, rule, &mut sample_rng(seed, next + i))?.0;
            match grow_unstable_curve(table, rule, x, delta, cap) {
                Ok(s) => Ok(Some(s)),
                Err(DiagnosticsError::SingularNeighborhood) => Ok(None),
                Err(e) => Err(e),
            }
        });
        next += batch;
        for g in got {
            match g? {
                Some(s) if samples.len() < curves => samples.push(s),
                Some(_) => {}
                None => skipped += 1,
            }
        }
    }
    let sums: Vec<f64> = samples.iter().map(one_step_expansion_sum).collect();
    let sup = sums.iter().copied().fold(0.0, f64::max);
    let median = quantile(&sums, 0.5).unwrap_or(0.0);
    let bookkeeping_error = samples
        .iter()
        .map(|s| (1.0 - s.preimage_total() / s.length).abs())
        .fold(0.0, f64::max);
    Ok((
        DeltaSweep {
            delta,
            cut_curves: samples.iter().filter(|s| s.is_cut()).count(),
            sums,
            skipped,
            sup,
            median,
            bookkeeping_error,
        },
        samples,
    ))
}

/// Spearman rank correlation (average ranks for ties).
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Majority sign of `dφ/dr` along the image direction of the most expanded
/// vector of `DT`: the orientation of the unstable cone in the chart.
pub fn unstable_slope_sign(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    points: &[PhasePoint],
    cap: u64,
) -> f64 {
    let signs: i64 = map_collect(points.len() as u64, |i| {
        jacobian_t(table, rule, points[i as usize], FD_STEP, cap)
            .ok()
            .map(|(j, _)| {
                let u = j.svd().left;
                if u.0 * u.1 >= 0.0 {
                    1
                } else {
                    -1
                }
            })
            .unwrap_or(0)
    })
    .into_iter()
    .sum();
    if signs >= 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(unstable, stable)` extents of a cloud: the principal axis whose slope
/// sign agrees with `unstable_sign` is the unstable one.
pub fn oriented_extents(cloud: &CloudExtent, unstable_sign: f64) -> (f64, f64) {
    if cloud.slope * unstable_sign >= 0.0 {
        (cloud.major, cloud.minor)
    } else {
        (cloud.minor, cloud.major)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub lhs: f64,
    pub rhs: f64,
    /// Allowed shortfall: 1.96 combined standard errors.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H6Input {
    /// Fit of `μ(R ≥ n) ≍ n^{-(1+s)}`, equivalent to `μ(D_n) ≍ n^{-(2+s)}`.
    pub tail: PowerLawFit,
    /// Fit of the unstable diameter of the `D_n` pieces, `≍ n^{-(s+b)}`.
    pub unstable: PowerLawFit,
    /// Fit of the unstable diameter of `TD_n`, `≍ n^{-d}`.
    pub image_unstable: Option<PowerLawFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H6Report {
    pub s_hat: f64,
    pub s_stderr: f64,
    pub b_hat: f64,
    pub b_stderr: f64,
    pub d_hat: Option<f64>,
    /// `b + s > 1/s₀`.
    pub sum_verdict: Verdict,
    /// `s ≥ s₀(2 − b)`, only when `b < 2`.
    pub balance_verdict: Option<Verdict>,
}

fn fit_se(f: &PowerLawFit) -> f64 {
    (f.ci_high - f.ci_low) / (2.0 * Z95)
}

/// Exponent estimates and the two inequality verdicts, with `s₀ = 1`.
pub fn h6_exponent_check(input: &H6Input) -> H6Report {
    let s0 = 1.0;
    let s_hat = input.tail.exponent - 1.0;
    let s_se = fit_se(&input.tail);
    let u_se = fit_se(&input.unstable);
    let b_hat = input.unstable.exponent - s_hat;
    let b_se = s_se.hypot(u_se);
    let slack = Z95 * u_se;
    let sum = s_hat + b_hat;
    let sum_verdict = Verdict {
        lhs: sum,
        rhs: 1.0 / s0,
        slack,
        pass: sum > 1.0 / s0 - slack,
    };
    let balance_verdict = (b_hat < 2.0).then(|| {
        let rhs = s0 * (2.0 - b_hat);
        // s − (2 − b) = 2s + b − 2 combines the two fits
        let slack = Z95 * (2.0 * s_se).hypot(b_se);
        Verdict {
            lhs: s_hat,
            rhs,
            slack,
            pass: s_hat >= rhs - slack - 1e-9,
        }
    });
    H6Report {
        s_hat,
        s_stderr: s_se,
        b_hat,
        b_stderr: b_se,
        d_hat: input.image_unstable.map(|f| f.exponent),
        sum_verdict,
        balance_verdict,
    }
}

/// Builds the (H6) fits from cell statistics: the tail fit over the deep
/// decade and diameter fits over the most populated strip-like class per
/// return time `n ≥ n_min`.
pub fn h6_input_from_cells(
    stats: &CellStats,
    diameters: &[CellDiameter],
    unstable_sign: f64,
    min_tail: u64,
    n_min: u64,
) -> Result<H6Input, DiagnosticsError> {
    let window = stats.deep_decade(min_tail);
    let tail = fit_power_law(&stats.tail_series(), window)?;
    let strips: Vec<CellDiameter> = diameters.iter().filter(|d| d.is_strip()).cloned().collect();
    let used: Vec<CellDiameter> = dominant_diameters(&strips)
        .into_iter()
        .filter(|d| d.index.n >= n_min)
        .collect();
    let series = |f: &dyn Fn(&CellDiameter) -> f64| -> Vec<(f64, f64, f64)> {
        used.iter().map(|d| (d.index.n as f64, f(d), 0.0)).collect()
    };
    let cell = series(&|d| oriented_extents(&d.cell, unstable_sign).0);
    let image = series(&|d| oriented_extents(&d.image, unstable_sign).0);
    Ok(H6Input {
        tail,
        unstable: fit_power_law(&cell, None)?,
        image_unstable: fit_power_law(&image, None).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_table, TableSpec};

    fn sinai() -> (TableGeometry, ReducedSpaceRule) {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let r = ReducedSpaceRule::for_table(&t);
        (t, r)
    }

    fn piece(pre: f64, img: f64) -> CurvePiece {
        CurvePiece {
            t_start: 0.0,
            t_end: pre,
            preimage_length: pre,
            image_length: img,
            points: 3,
        }
    }

    fn synthetic(length: f64, pieces: Vec<CurvePiece>) -> UnstableCurveSample {
        UnstableCurveSample {
            center: PhasePoint::new(0, 0.0, 0.0),
            component: 0,
            direction: (1.0, 0.0),
            points: vec![],
            length,
            pieces,
            center_piece: Some(0),
        }
    }

    #[test]
    fn one_step_sum_arithmetic() {
        let uncut = synthetic(1e-3, vec![piece(1e-3, 2e-3)]);
        assert!((one_step_expansion_sum(&uncut) - 0.5).abs() < 1e-15);
        let halves = synthetic(2e-3, vec![piece(1e-3, 2e-3), piece(1e-3, 2e-3)]);
        assert!((one_step_expansion_sum(&halves) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_of_diagonal_and_rotation() {
        let j = Jacobian { m: [[1.0, 0.0], [0.0, 3.0]] };
        let s = j.svd();
        assert!((s.s_max - 3.0).abs() < 1e-12 && (s.s_min - 1.0).abs() < 1e-12);
        assert!(s.right.0.abs() < 1e-12 && (s.right.1.abs() - 1.0).abs() < 1e-12);
        let (c, n) = (0.3f64.cos(), 0.3f64.sin());
        let r = Jacobian { m: [[2.0 * c, -0.5 * n], [2.0 * n, 0.5 * c]] };
        let s = r.svd();
        assert!((s.s_max - 2.0).abs() < 1e-12 && (s.s_min - 0.5).abs() < 1e-12);
        assert!((s.left.1.atan2(s.left.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn small_curve_follows_dominant_direction() {
        let (t, rule) = sinai();
        let x = PhasePoint::new(4, 0.3, 0.2);
        let delta = 1e-6;
        let c = grow_unstable_curve(&t, &rule, x, delta, 10_000).unwrap();
        let (j, _) = jacobian_t(&t, &rule, x, FD_STEP, 10_000).unwrap();
        let v = j.svd().right;
        let a = c.points[0];
        let b = c.points[c.points.len() - 1];
        let (dr, dp) = chart_delta(&t, a, b).unwrap();
        let chord = dp.atan2(dr);
        let gap = angle_gap(chord, v.1.atan2(v.0)).min(angle_gap(chord + std::f64::consts::PI, v.1.atan2(v.0)));
        assert!(gap < 1e-3, "{gap}");
        assert!(!c.is_cut());
        assert!(c.points.iter().all(|p| p.component == x.component));
    }

    #[test]
    fn grazing_point_is_singular_neighborhood() {
        let (t, rule) = sinai();
        let x = PhasePoint::new(4, 0.3, FRAC_PI_2 - 1e-9);
        assert_eq!(
            grow_unstable_curve(&t, &rule, x, 1e-3, 10_000).unwrap_err(),
            DiagnosticsError::SingularNeighborhood
        );
    }

    #[test]
    fn radius_proxy_contract() {
        let (t, rule) = sinai();
        let x = PhasePoint::new(4, 0.3, 0.2);
        let d = induced_singularity_distance(&t, &rule, x, 10_000);
        assert_eq!(unstable_radius_proxy(&t, &rule, x, 0, 2.0, 10_000).unwrap(), d);
        let mut prev = f64::INFINITY;
        for n in 0..6 {
            let v = unstable_radius_proxy(&t, &rule, x, n, 1.5, 10_000).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let edge = PhasePoint::new(4, 0.3, FRAC_PI_2);
        assert_eq!(unstable_radius_proxy(&t, &rule, edge, 3, 2.0, 10_000).unwrap(), 0.0);
    }

    #[test]
    fn z_proxy_contract() {
        let z = z_function_proxy(&[(0.5, 1.0); 10], 1.0).unwrap();
        assert_eq!(z.value, 2.0);
        let z = z_function_proxy(&[(0.5, 1.0), (0.001, 0.0), (0.0, 0.0), (0.5, 3.0)], 1.0).unwrap();
        assert_eq!(z.value, 2.0);
        assert_eq!(z.divergent, 0);
        let z = z_function_proxy(&[(0.25, 1.0), (0.0, 1.0)], 0.5).unwrap();
        assert_eq!((z.value, z.used, z.divergent), (2.0, 1, 1));
        assert!(z_function_proxy(&[(0.5, 1.0)], 1.5).is_err());
        assert!(z_function_proxy(&[(0.5, 0.0)], 1.0).is_err());
    }

    fn exact(exponent: f64) -> PowerLawFit {
        let pts: Vec<(f64, f64, f64)> = (1..=40).map(|n| (n as f64, (n as f64).powf(-exponent), 0.0)).collect();
        fit_power_law(&pts, None).unwrap()
    }

    #[test]
    fn h6_on_exact_laws() {
        let r = h6_exponent_check(&H6Input {
            tail: exact(2.0),
            unstable: exact(2.0),
            image_unstable: Some(exact(1.0)),
        });
        assert!((r.s_hat - 1.0).abs() < 1e-9 && (r.b_hat - 1.0).abs() < 1e-9);
        assert!((r.d_hat.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.sum_verdict.pass);
        assert!(r.balance_verdict.unwrap().pass);
        // b + s = 0.9 fails the sum inequality
        let r = h6_exponent_check(&H6Input {
            tail: exact(1.5),
            unstable: exact(0.9),
            image_unstable: None,
        });
        assert!(!r.sum_verdict.pass);
        assert!(!r.balance_verdict.unwrap().pass);
        // b ≥ 2 leaves the balance inequality vacuous
        let r = h6_exponent_check(&H6Input {
            tail: exact(1.5),
            unstable: exact(3.0),
            image_unstable: None,
        });
        assert!(r.balance_verdict.is_none());
    }

    #[test]
    fn rank_correlation_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((rank_correlation(&a, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-12);
        assert!((rank_correlation(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(quantile(&v, 0.01), Some(1.0));
        assert_eq!(quantile(&v, 0.5), Some(50.0));
        assert_eq!(quantile(&[], 0.5), None);
    }
}
