use std::f64::consts::TAU;

use serde::Serialize;

use super::flat::{FlatCurve, NoConvergence};
use super::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Segment,
    CircularArc,
    FlatCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureClass {
    Dispersing,
    Focusing,
    Neutral,
    FlatPoint,
}

/// Which side of the direction of travel the billiard domain lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainSide {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub enum Shape {
    Segment {
        a: Vec2,
        b: Vec2,
    },
    /// `sweep > 0` is counterclockwise about `center`.
    Arc {
        center: Vec2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
    Flat(Box<FlatCurve>),
}

/// Position, unit tangent, unit inward normal and curvature magnitude at one
/// boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub label: String,
    pub shape: Shape,
    pub length: f64,
    pub class: CurvatureClass,
    pub domain_side: DomainSide,
    /// Index of the boundary loop this component belongs to (0 = outer wall).
    pub boundary_loop: usize,
    /// A closed component (full circle) has no junctions at its ends.
    pub closed: bool,
}

impl BoundaryComponent {
    pub fn segment(label: impl Into<String>, a: Vec2, b: Vec2) -> Self {
        Self {
            label: label.into(),
            length: (b - a).norm(),
            shape: Shape::Segment { a, b },
            class: CurvatureClass::Neutral,
            domain_side: DomainSide::Left,
            boundary_loop: 0,
            closed: false,
        }
    }

    pub fn arc(
        label: impl Into<String>,
        center: Vec2,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    ) -> Self {
        let closed = (sweep.abs() - TAU).abs() < 1e-12;
        Self {
            label: label.into(),
            length: radius * sweep.abs(),
            shape: Shape::Arc {
                center,
                radius,
                start_angle,
                sweep,
            },
            // Domain on the left: a counterclockwise arc has the center on the
            // domain side (focusing), a clockwise arc curves away (dispersing).
            class: if sweep > 0.0 {
                CurvatureClass::Focusing
            } else {
                CurvatureClass::Dispersing
            },
            domain_side: DomainSide::Left,
            boundary_loop: 0,
            closed,
        }
    }

    pub fn flat(label: impl Into<String>, curve: FlatCurve) -> Self {
        Self {
            label: label.into(),
            length: curve.length(),
            shape: Shape::Flat(Box::new(curve)),
            class: CurvatureClass::FlatPoint,
            domain_side: DomainSide::Left,
            boundary_loop: 0,
            closed: false,
        }
    }

    pub fn kind(&self) -> ComponentKind {
        match self.shape {
            Shape::Segment { .. } => ComponentKind::Segment,
            Shape::Arc { .. } => ComponentKind::CircularArc,
            Shape::Flat(_) => ComponentKind::FlatCurve,
        }
    }

    pub fn in_loop(mut self, boundary_loop: usize) -> Self {
        self.boundary_loop = boundary_loop;
        self
    }

    /// Dispersing or neutral walls can never be hit twice in a row.
    pub fn is_convex_from_inside(&self) -> bool {
        !matches!(self.class, CurvatureClass::Focusing)
    }

    /// Billiard sign convention: positive for dispersing, negative for focusing.
    pub fn signed_curvature(&self, frame: &BoundaryFrame) -> f64 {
        match self.class {
            CurvatureClass::Focusing => -frame.curvature,
            _ => frame.curvature,
        }
    }

    pub fn frame(&self, r: f64) -> BoundaryFrame {
        match &self.shape {
            Shape::Segment { a, b } => {
                let u = (*b - *a) * (1.0 / self.length);
                BoundaryFrame {
                    point: *a + u * r,
                    tangent: u,
                    normal: u.perp(),
                    curvature: 0.0,
                }
            }
            Shape::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let sign = sweep.signum();
                let theta = start_angle + sign * r / radius;
                let radial = Vec2::from_angle(theta);
                let tangent = radial.perp() * sign;
                BoundaryFrame {
                    point: *center + radial * *radius,
                    tangent,
                    normal: tangent.perp(),
                    curvature: 1.0 / radius,
                }
            }
            Shape::Flat(curve) => {
                let x = curve.x_at_r(r);
                let (point, tangent, normal, curvature) = curve.frame_at_x(x);
                BoundaryFrame {
                    point,
                    tangent,
                    normal,
                    curvature,
                }
            }
        }
    }

    pub fn point(&self, r: f64) -> Vec2 {
        match &self.shape {
            Shape::Flat(curve) => curve.point_at_x(curve.x_at_r(r)),
            _ => self.frame(r).point,
        }
    }

    pub fn start_point(&self) -> Vec2 {
        self.point(0.0)
    }

    pub fn end_point(&self) -> Vec2 {
        self.point(self.length)
    }

    /// Arc-length coordinate of a point assumed to lie on the component.
    pub fn locate(&self, p: Vec2) -> f64 {
        match &self.shape {
            Shape::Segment { a, .. } => {
                let u = self.frame(0.0).tangent;
                (p - *a).dot(u)
            }
            Shape::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let theta = (p - *center).angle();
                let delta = (sweep.signum() * (theta - start_angle)).rem_euclid(TAU);
                if self.closed {
                    return delta * radius;
                }
                // Points just before the start wrap to ~TAU; fold them back.
                let span = sweep.abs();
                let delta = if delta > span && delta > 0.5 * (span + TAU) {
                    delta - TAU
                } else {
                    delta
                };
                delta * radius
            }
            Shape::Flat(curve) => {
                let (x, _) = curve.local_coords(p);
                curve.r_at_x(x)
            }
        }
    }

    /// Ray parameters of crossings with this component, restricted to
    /// `(t_min, t_max]`. `from_self` marks a ray launched from this component.
    pub fn intersect(
        &self,
        p: Vec2,
        d: Vec2,
        t_min: f64,
        t_max: f64,
        from_self: bool,
    ) -> Result<Option<(f64, f64)>, NoConvergence> {
        if from_self && self.is_convex_from_inside() {
            return Ok(None);
        }
        let slack = 1e-12 * (1.0 + self.length);
        match &self.shape {
            Shape::Segment { a, b } => {
                let e = *b - *a;
                let denom = d.cross(e);
                if denom.abs() < 1e-300 {
                    return Ok(None);
                }
                let w = *a - p;
                let t = w.cross(e) / denom;
                let s = w.cross(d) / denom;
                if t > t_min && t <= t_max && (-1e-12..=1.0 + 1e-12).contains(&s) {
                    let r = (s * self.length).clamp(0.0, self.length);
                    Ok(Some((t, r)))
                } else {
                    Ok(None)
                }
            }
            Shape::Arc { center, radius, .. } => {
                let q = p - *center;
                let b = d.dot(q);
                let c = q.norm_sq() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return Ok(None);
                }
                let root = disc.sqrt();
                let candidates = if from_self {
                    // Leaving a focusing arc: the near root is the launch point.
                    [-b + root, f64::NAN]
                } else if b > 0.0 {
                    let t1 = -b - root;
                    [t1, c / t1]
                } else {
                    let t2 = -b + root;
                    [c / t2, t2]
                };
                for t in candidates {
                    if !(t > t_min && t <= t_max) {
                        continue;
                    }
                    let r = self.locate(p + d * t);
                    if r >= -slack && r <= self.length + slack {
                        let r = if self.closed {
                            r.rem_euclid(self.length)
                        } else {
                            r.clamp(0.0, self.length)
                        };
                        return Ok(Some((t, r)));
                    }
                }
                Ok(None)
            }
            Shape::Flat(curve) => Ok(curve
                .intersect(p, d, t_min, t_max)?
                .map(|t| {
                    let (x, _) = curve.local_coords(p + d * t);
                    (t, curve.r_at_x(x).clamp(0.0, self.length))
                })),
        }
    }
}
