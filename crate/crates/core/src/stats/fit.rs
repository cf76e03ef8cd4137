use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("fit window too small: {points} points spanning a factor {span:.3} (need {need_points} points and a factor {need_span})")]
    WindowTooSmall {
        points: usize,
        span: f64,
        need_points: usize,
        need_span: f64,
    },
    #[error("no usable lag window above the noise floor {floor:.3e}")]
    NoUsableWindow { floor: f64 },
}

/// Weighted least squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// WLS fit. With `inverse_variance` the weights are taken as `1/σ²` and the
/// slope error is scaled by the reduced χ² only when it exceeds 1; otherwise
/// the weights are relative and the residual scale is used.
pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64], inverse_variance: bool) -> LineFit {
    let n = x.len();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n)
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let dof = n.saturating_sub(2).max(1) as f64;
    let scale = if inverse_variance {
        (rss / dof).max(1.0)
    } else {
        rss / dof
    };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LineFit {
        intercept,
        slope,
        slope_se: (scale / sxx).sqrt(),
        r_squared,
        points: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `value ≈ prefactor · n^{-exponent}`.
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

pub const MIN_POWER_POINTS: usize = 5;
pub const MIN_POWER_SPAN: f64 = 10.0;

/// Log-log WLS fit over the points with positive values inside `window`.
/// Each point is `(n, value, stderr)`; a positive stderr gives the weight
/// `(value/stderr)²`, otherwise points are equally weighted.
pub fn fit_power_law(
    points: &[(f64, f64, f64)],
    window: Option<(f64, f64)>,
) -> Result<PowerLawFit, FitError> {
    let used: Vec<&(f64, f64, f64)> = points
        .iter()
        .filter(|(n, v, _)| *n > 0.0 && *v > 0.0)
        .filter(|(n, _, _)| window.is_none_or(|(lo, hi)| *n >= lo && *n <= hi))
        .collect();
    let n_min = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let n_max = used.iter().map(|p| p.0).fold(0.0, f64::max);
    let span = if used.is_empty() { 0.0 } else { n_max / n_min };
    if used.len() < MIN_POWER_POINTS || span < MIN_POWER_SPAN * (1.0 - 1e-12) {
        return Err(FitError::WindowTooSmall {
            points: used.len(),
            span,
            need_points: MIN_POWER_POINTS,
            need_span: MIN_POWER_SPAN,
        });
    }
    let weighted = used.iter().all(|p| p.2 > 0.0);
    let x: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = used
        .iter()
        .map(|p| if weighted { (p.1 / p.2).powi(2) } else { 1.0 })
        .collect();
    let line = weighted_line(&x, &y, &w, weighted);
    let exponent = -line.slope;
    Ok(PowerLawFit {
        exponent,
        ci_low: exponent - Z95 * line.slope_se,
        ci_high: exponent + Z95 * line.slope_se,
        prefactor: line.intercept.exp(),
        r_squared: line.r_squared,
        n_min,
        n_max,
        points: used.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    /// Tail index `α` in `P(X ≥ t) ≈ t^{-α}`.
    pub alpha: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub exceedances: u64,
}

/// Hill estimator from a histogram of integer values `(value, count)`, with
/// the continuity-corrected threshold `n_min − 1/2`.
pub fn hill_from_counts(counts: &[(u64, u64)], n_min: u64) -> Option<HillEstimate> {
    let u = n_min as f64 - 0.5;
    if u <= 0.0 {
        return None;
    }
    let (mut k, mut s) = (0u64, 0.0);
    for &(v, c) in counts {
        if v >= n_min {
            k += c;
            s += c as f64 * (v as f64 / u).ln();
        }
    }
    if k < 2 || s <= 0.0 {
        return None;
    }
    let alpha = k as f64 / s;
    Some(HillEstimate {
        alpha,
        stderr: alpha / (k as f64).sqrt(),
        threshold: u,
        exceedances: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// `|C_n| ≈ A ϑⁿ`.
    pub theta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub amplitude: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
    pub noise_floor: f64,
}

pub const MIN_EXP_LAGS: usize = 4;

/// Noise floor used by the automatic window: twice the median stderr.
pub fn noise_floor(stderr: &[f64]) -> f64 {
    if stderr.is_empty() {
        return 0.0;
    }
    let mut s = stderr.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    let median = if s.len() % 2 == 1 {
        s[mid]
    } else {
        0.5 * (s[mid - 1] + s[mid])
    };
    2.0 * median
}

/// Longest contiguous run of lags `n ≥ 1` with `|C_n|` above the floor
/// (earliest run on ties), as an inclusive range.
pub fn auto_window(values: &[f64], floor: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for n in 1..=values.len() {
        let above = n < values.len() && values[n].abs() > floor && values[n] != 0.0;
        match (above, start) {
            (true, None) => start = Some(n),
            (false, Some(s)) => {
                let run = (s, n - 1);
                if best.is_none_or(|b| run.1 - run.0 > b.1 - b.0) {
                    best = Some(run);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Log-linear fit of `|C_n|` against `n` on `window` (or the automatic one).
pub fn fit_exponential_rate(
    values: &[f64],
    stderr: &[f64],
    window: Option<(usize, usize)>,
) -> Result<ExponentialFit, FitError> {
    let floor = noise_floor(stderr);
    let window = match window {
        Some(w) => Some(w),
        None => auto_window(values, floor),
    };
    let Some((lo, hi)) = window else {
        return Err(FitError::NoUsableWindow { floor });
    };
    let lags: Vec<usize> = (lo..=hi.min(values.len().saturating_sub(1)))
        .filter(|&n| values[n] != 0.0)
        .collect();
    if lags.len() < MIN_EXP_LAGS {
        return Err(FitError::NoUsableWindow { floor });
    }
    let weighted = lags.iter().all(|&n| stderr.get(n).is_some_and(|&s| s > 0.0));
    let x: Vec<f64> = lags.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = lags.iter().map(|&n| values[n].abs().ln()).collect();
    let w: Vec<f64> = lags
        .iter()
        .map(|&n| {
            if weighted {
                (values[n] / stderr[n]).powi(2)
            } else {
                1.0
            }
        })
        .collect();
    let line = weighted_line(&x, &y, &w, weighted);
    Ok(ExponentialFit {
        theta: line.slope.exp(),
        ci_low: (line.slope - Z95 * line.slope_se).exp(),
        ci_high: (line.slope + Z95 * line.slope_se).exp(),
        amplitude: line.intercept.exp(),
        window: (lo, hi),
        r_squared: line.r_squared,
        noise_floor: floor,
    })
}
