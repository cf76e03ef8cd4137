//! Local graph `y = |x|^β` with a single point of zero curvature.
//!
//! The curve lives in a local frame `(e1, e2)` anchored at the flat point:
//! `e1` is the direction of increasing arc length and `e2` points away from
//! the billiard domain, so the domain is `{ y < |x|^β }` and the wall is
//! convex as seen from inside (dispersing away from the flat point).
//!
//! Arc length has no closed form. It is tabulated once on a uniform grid of
//! `x` with Gauss-Legendre quadrature per cell; evaluation inside a cell
//! reuses the same rule on the partial cell and inversion is Newton on the
//! tabulated bracket.

use super::vec2::Vec2;

const GRID_CELLS: usize = 1024;

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Root finding gave up (bracketing budget exhausted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoConvergence;

#[derive(Debug, Clone)]
pub struct FlatCurve {
    origin: Vec2,
    e1: Vec2,
    e2: Vec2,
    beta: f64,
    half_width: f64,
    cell: f64,
    cumulative: Vec<f64>,
    half_length: f64,
    bbox_min: Vec2,
    bbox_max: Vec2,
}

impl FlatCurve {
    /// `origin` is the flat point, `e1` the unit tangent there (direction of
    /// increasing arc length). The graph covers `x in [-half_width, half_width]`.
    pub fn new(origin: Vec2, e1: Vec2, beta: f64, half_width: f64) -> Self {
        let e1 = e1.normalized();
        let e2 = -e1.perp();
        let cell = half_width / GRID_CELLS as f64;
        let mut cumulative = Vec::with_capacity(GRID_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..GRID_CELLS {
            let a = i as f64 * cell;
            acc += gauss_legendre(beta, a, a + cell);
            cumulative.push(acc);
        }
        let mut curve = Self {
            origin,
            e1,
            e2,
            beta,
            half_width,
            cell,
            cumulative,
            half_length: acc,
            bbox_min: Vec2::default(),
            bbox_max: Vec2::default(),
        };
        let (mut lo, mut hi) = (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for k in 0..=64 {
            let x = -half_width + 2.0 * half_width * k as f64 / 64.0;
            let p = curve.point_at_x(x);
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let pad = 1e-9 + 1e-6 * half_width;
        curve.bbox_min = Vec2::new(lo.x - pad, lo.y - pad);
        curve.bbox_max = Vec2::new(hi.x + pad, hi.y + pad);
        curve
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    /// Arc length of the flat point itself.
    pub fn flat_point_r(&self) -> f64 {
        self.half_length
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        self.beta * x.abs().powf(self.beta - 1.0) * x.signum()
    }

    #[inline]
    fn height(&self, x: f64) -> f64 {
        x.abs().powf(self.beta)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        self.beta * (self.beta - 1.0) * x.abs().powf(self.beta - 2.0)
    }

    /// Signed arc length from the flat point to local abscissa `x`.
    pub fn arc_from_center(&self, x: f64) -> f64 {
        let ax = x.abs().min(self.half_width);
        let i = ((ax / self.cell) as usize).min(GRID_CELLS - 1);
        let a = i as f64 * self.cell;
        let s = self.cumulative[i] + gauss_legendre(self.beta, a, ax);
        s.copysign(x)
    }

    /// Local abscissa at signed arc length `s` from the flat point.
    pub fn x_at_arc(&self, s: f64) -> f64 {
        let target = s.abs().min(self.half_length);
        let i = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
        {
            Ok(i) => i.min(GRID_CELLS),
            Err(i) => i.saturating_sub(1).min(GRID_CELLS - 1),
        };
        if i == GRID_CELLS {
            return self.half_width.copysign(s);
        }
        let (s0, s1) = (self.cumulative[i], self.cumulative[i + 1]);
        let a = i as f64 * self.cell;
        let mut x = a + self.cell * (target - s0) / (s1 - s0);
        for _ in 0..20 {
            let f = self.cumulative[i] + gauss_legendre(self.beta, a, x) - target;
            let w = (1.0 + self.slope(x).powi(2)).sqrt();
            let dx = f / w;
            x -= dx;
            if dx.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        x.clamp(0.0, self.half_width).copysign(s)
    }

    pub fn x_at_r(&self, r: f64) -> f64 {
        self.x_at_arc(r - self.half_length)
    }

    pub fn r_at_x(&self, x: f64) -> f64 {
        self.arc_from_center(x) + self.half_length
    }

    pub fn point_at_x(&self, x: f64) -> Vec2 {
        self.origin + self.e1 * x + self.e2 * self.height(x)
    }

    /// (point, unit tangent, inward normal, curvature magnitude) at abscissa `x`.
    pub fn frame_at_x(&self, x: f64) -> (Vec2, Vec2, Vec2, f64) {
        let g1 = self.slope(x);
        let w = (1.0 + g1 * g1).sqrt();
        let tangent = (self.e1 + self.e2 * g1) * (1.0 / w);
        let normal = tangent.perp();
        let curvature = self.second_derivative(x) / (w * w * w);
        (self.point_at_x(x), tangent, normal, curvature)
    }

    pub fn local_coords(&self, p: Vec2) -> (f64, f64) {
        let q = p - self.origin;
        (q.dot(self.e1), q.dot(self.e2))
    }

    fn ray_hits_bbox(&self, p: Vec2, d: Vec2, t_max: f64) -> bool {
        let mut t0 = 0.0_f64;
        let mut t1 = t_max;
        for (o, dir, lo, hi) in [
            (p.x, d.x, self.bbox_min.x, self.bbox_max.x),
            (p.y, d.y, self.bbox_min.y, self.bbox_max.y),
        ] {
            if dir.abs() < 1e-300 {
                if o < lo || o > hi {
                    return false;
                }
            } else {
                let (mut a, mut b) = ((lo - o) / dir, (hi - o) / dir);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest ray parameter in `(t_min, t_max]` where `p + t d` crosses the
    /// curve from inside the domain.
    ///
    /// Along a ray `h(t) = Y(t) - |X(t)|^β` is concave, so `{h >= 0}` is an
    /// interval. The peak is bracketed by bisection on `h'` and the entry
    /// root by Newton safeguarded with bisection.
    pub fn intersect(
        &self,
        p: Vec2,
        d: Vec2,
        t_min: f64,
        t_max: f64,
    ) -> Result<Option<f64>, NoConvergence> {
        if !self.ray_hits_bbox(p, d, t_max) {
            return Ok(None);
        }
        let (x0, y0) = self.local_coords(p);
        let (dx, dy) = (d.dot(self.e1), d.dot(self.e2));
        let (mut ta, mut tb) = (t_min, t_max);
        if dx.abs() < 1e-300 {
            if x0.abs() > self.half_width {
                return Ok(None);
            }
        } else {
            let (mut a, mut b) = ((-self.half_width - x0) / dx, (self.half_width - x0) / dx);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            ta = ta.max(a);
            tb = tb.min(b);
        }
        if ta >= tb {
            return Ok(None);
        }
        // A ray below the flat point's level never reaches the wall.
        if (y0 + ta * dy).max(y0 + tb * dy) < 0.0 {
            return Ok(None);
        }
        let h = |t: f64| (y0 + t * dy) - self.height(x0 + t * dx);
        let dh = |t: f64| dy - self.slope(x0 + t * dx) * dx;

        let ha = h(ta);
        if ha >= 0.0 {
            return Ok(None);
        }
        let peak = if dh(ta) <= 0.0 {
            return Ok(None);
        } else if dh(tb) >= 0.0 {
            tb
        } else {
            let (mut lo, mut hi) = (ta, tb);
            let mut steps = 0;
            while hi - lo > 1e-15 * (1.0 + hi.abs()) {
                let mid = 0.5 * (lo + hi);
                if dh(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                steps += 1;
                if steps > 200 {
                    return Err(NoConvergence);
                }
            }
            0.5 * (lo + hi)
        };
        if h(peak) < 0.0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (ta, peak);
        let mut t = lo + (hi - lo) * (-ha) / (h(hi) - ha).max(1e-300);
        for _ in 0..200 {
            let ht = h(t);
            if ht.abs() < 1e-15 {
                return Ok(Some(t));
            }
            if ht < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                return Ok(Some(hi));
            }
            let slope = dh(t);
            let newton = if slope > 0.0 { t - ht / slope } else { f64::NAN };
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(NoConvergence)
    }
}

fn gauss_legendre(beta: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        let x = mid + half * node;
        let g1 = beta * x.abs().powf(beta - 1.0);
        acc += weight * (1.0 + g1 * g1).sqrt();
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> FlatCurve {
        FlatCurve::new(Vec2::new(0.0, 0.5), Vec2::new(-1.0, 0.0), 4.0, 0.35)
    }

    #[test]
    fn inversion_roundtrip() {
        let c = curve();
        for k in 0..=100 {
            let r = c.length() * k as f64 / 100.0;
            let x = c.x_at_r(r);
            assert!((c.r_at_x(x) - r).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn quadrature_matches_fine_trapezoid() {
        let c = curve();
        let n = 2_000_000;
        let h = 0.35 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x0 = i as f64 * h;
            let x1 = x0 + h;
            let f = |x: f64| (1.0 + (4.0 * x * x * x).powi(2)).sqrt();
            s += 0.5 * h * (f(x0) + f(x1));
        }
        assert!((c.length() / 2.0 - s).abs() < 1e-10);
    }

    #[test]
    fn vertical_ray_hits_flat_point() {
        let c = curve();
        let t = c
            .intersect(Vec2::new(0.0, -0.5), Vec2::new(0.0, 1.0), 1e-12, 10.0)
            .unwrap()
            .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oblique_ray_lands_on_curve() {
        let c = curve();
        let p = Vec2::new(0.1, 0.0);
        let d = Vec2::new(0.3, 1.0).normalized();
        let t = c.intersect(p, d, 1e-12, 10.0).unwrap().unwrap();
        let (x, y) = c.local_coords(p + d * t);
        assert!((y - x.abs().powi(4)).abs() < 1e-11);
    }

    #[test]
    fn ray_pointing_away_misses() {
        let c = curve();
        let hit = c
            .intersect(Vec2::new(0.0, 0.0), Vec2::new(0.0, -1.0), 1e-12, 10.0)
            .unwrap();
        assert!(hit.is_none());
    }
}
