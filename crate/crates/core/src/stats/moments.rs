use serde::Serialize;

/// Running mean and variance (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &RunningStats) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = self.count + o.count;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.count as f64 * o.count as f64) / n as f64;
        self.count = n;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Power sums of `u = f − a`, `v = g − b` up to `u²v²`, enough for the
/// covariance and its delta-method standard error. The shift `(a, b)` keeps
/// the sums well conditioned; accumulators merge only with equal shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossMoments {
    pub shift_f: f64,
    pub shift_g: f64,
    pub count: u64,
    su: f64,
    sv: f64,
    suu: f64,
    svv: f64,
    suv: f64,
    suuv: f64,
    suvv: f64,
    suuvv: f64,
    /// Largest single `|u v|`.
    pub max_term: f64,
}

impl CrossMoments {
    pub fn new(shift_f: f64, shift_g: f64) -> Self {
        Self {
            shift_f,
            shift_g,
            count: 0,
            su: 0.0,
            sv: 0.0,
            suu: 0.0,
            svv: 0.0,
            suv: 0.0,
            suuv: 0.0,
            suvv: 0.0,
            suuvv: 0.0,
            max_term: 0.0,
        }
    }

    pub fn push(&mut self, f: f64, g: f64) {
        let u = f - self.shift_f;
        let v = g - self.shift_g;
        let uv = u * v;
        self.count += 1;
        self.su += u;
        self.sv += v;
        self.suu += u * u;
        self.svv += v * v;
        self.suv += uv;
        self.suuv += u * uv;
        self.suvv += uv * v;
        self.suuvv += uv * uv;
        self.max_term = self.max_term.max(uv.abs());
    }

    pub fn merge(&mut self, o: &CrossMoments) {
        debug_assert!(self.shift_f == o.shift_f && self.shift_g == o.shift_g);
        self.count += o.count;
        self.su += o.su;
        self.sv += o.sv;
        self.suu += o.suu;
        self.svv += o.svv;
        self.suv += o.suv;
        self.suuv += o.suuv;
        self.suvv += o.suvv;
        self.suuvv += o.suuvv;
        self.max_term = self.max_term.max(o.max_term);
    }

    fn means(&self) -> (f64, f64) {
        let n = self.count as f64;
        (self.su / n, self.sv / n)
    }

    pub fn mean_f(&self) -> f64 {
        self.shift_f + self.su / self.count as f64
    }

    pub fn mean_g(&self) -> f64 {
        self.shift_g + self.sv / self.count as f64
    }

    /// Plug-in covariance `mean(fg) − mean(f)·mean(g)`.
    pub fn covariance(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let (p, q) = self.means();
        self.suv / self.count as f64 - p * q
    }

    /// Delta-method standard error: `sd((f − f̄)(g − ḡ)) / √K`.
    pub fn covariance_stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let (p, q) = self.means();
        let e_uuvv = self.suuvv / n;
        let e_uuv = self.suuv / n;
        let e_uvv = self.suvv / n;
        let e_uu = self.suu / n;
        let e_vv = self.svv / n;
        let e_uv = self.suv / n;
        let fourth = e_uuvv - 2.0 * q * e_uuv - 2.0 * p * e_uvv
            + q * q * e_uu
            + p * p * e_vv
            + 4.0 * p * q * e_uv
            - 3.0 * p * p * q * q;
        let c = e_uv - p * q;
        ((fourth - c * c).max(0.0) / (n - 1.0)).sqrt()
    }
}

/// Mean of a series with a batch-means standard error.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(1);
    let len = n / b;
    if b < 2 || len == 0 {
        return (mean, 0.0);
    }
    let mut stats = RunningStats::default();
    for k in 0..b {
        let chunk = &series[k * len..(k + 1) * len];
        stats.push(chunk.iter().sum::<f64>() / len as f64);
    }
    (mean, stats.stderr())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn naive_cov(f: &[f64], g: &[f64]) -> f64 {
        let n = f.len() as f64;
        let mf = f.iter().sum::<f64>() / n;
        let mg = g.iter().sum::<f64>() / n;
        f.iter().zip(g).map(|(a, b)| (a - mf) * (b - mg)).sum::<f64>() / n
    }

    proptest! {
        #[test]
        fn covariance_matches_two_pass(data in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..200),
                                       split in 0usize..200) {
            let f: Vec<f64> = data.iter().map(|p| p.0).collect();
            let g: Vec<f64> = data.iter().map(|p| p.1).collect();
            let k = split.min(f.len());
            let mut a = CrossMoments::new(f[0], g[0]);
            let mut b = CrossMoments::new(f[0], g[0]);
            for i in 0..k { a.push(f[i], g[i]); }
            for i in k..f.len() { b.push(f[i], g[i]); }
            a.merge(&b);
            let exact = naive_cov(&f, &g);
            prop_assert!((a.covariance() - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
            prop_assert!(a.covariance_stderr() >= 0.0);
        }

        #[test]
        fn welford_merge(data in prop::collection::vec(-1e3f64..1e3, 1..300), split in 0usize..300) {
            let k = split.min(data.len());
            let mut a = RunningStats::default();
            let mut b = RunningStats::default();
            for &x in &data[..k] { a.push(x); }
            for &x in &data[k..] { b.push(x); }
            a.merge(&b);
            let mut whole = RunningStats::default();
            for &x in &data { whole.push(x); }
            prop_assert!((a.mean - whole.mean).abs() < 1e-9);
            prop_assert!((a.variance() - whole.variance()).abs() < 1e-6 * (1.0 + whole.variance()));
        }
    }

    #[test]
    fn constant_second_argument_has_zero_covariance() {
        let mut m = CrossMoments::new(0.3, 2.0);
        for i in 0..1000 {
            m.push((i as f64).sin() * 7.0, 2.0);
        }
        assert_eq!(m.covariance(), 0.0);
        assert_eq!(m.covariance_stderr(), 0.0);
    }

    #[test]
    fn stderr_of_independent_normals() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::par::sample_rng(5, 0);
        let mut m = CrossMoments::new(0.0, 0.0);
        let n = 100_000;
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            m.push(a, b);
        }
        // Var(ab) = 1 for independent standard normals.
        let expected = 1.0 / (n as f64).sqrt();
        assert!((m.covariance_stderr() / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn batch_means_of_iid_series() {
        use rand::Rng;
        let mut rng = crate::par::sample_rng(6, 0);
        let s: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let (m, se) = batch_means(&s, 50);
        let expected = (1.0f64 / 12.0 / 100_000.0).sqrt();
        assert!((m - 0.5).abs() < 4.0 * expected);
        assert!((se / expected - 1.0).abs() < 0.4);
    }
}
